#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "formbench/dataset.hpp"
#include "formbench/matrix.hpp"

namespace formbench {

enum class UmapMetric { Euclidean };

struct UmapParams {
  std::size_t n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  UmapMetric metric = UmapMetric::Euclidean;
  std::size_t n_epochs = 500;
  std::size_t negative_sample_rate = 5;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;

  /// Throws Error unless 2 <= n_neighbors < n_points and 0 < min_dist <= spread.
  void validate(std::size_t n_points) const;
};

/// Exact k nearest neighbours (self excluded), row-major N x k, each row
/// ascending by distance with ties broken by lower index.
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> dists;

  std::span<const std::uint32_t> neighbors(std::size_t i) const { return {&indices[i * k], k}; }
  std::span<const double> distances(std::size_t i) const { return {&dists[i * k], k}; }
};

/// Brute-force Euclidean KNN. Throws Error when k >= N or k == 0.
KnnGraph knn_graph(const Matrix<double>& data, std::size_t k);

/// Distance to the nearest neighbour at positive distance; 0 if none.
std::vector<double> nearest_positive_distance(const KnnGraph& graph);

inline constexpr int kSmoothKnnIterations = 64;
inline constexpr double kSmoothKnnTolerance = 1e-5;

/// Per-point bandwidth sigma_i solving
///   sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
/// by bisection. Rows whose distances are all zero get sigma = 1.
std::vector<double> smooth_knn(const KnnGraph& graph, std::span<const double> rho);

struct WeightedEdge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  double weight = 0.0;
};

/// Symmetric sparse membership graph. Rows are stored CSR-style, each row
/// sorted by column; both (i, j) and (j, i) are present.
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<std::size_t> row_start;  // n + 1 entries
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  std::vector<double> rho;
  std::vector<double> sigma;

  std::size_t num_entries() const noexcept { return cols.size(); }
  /// Weight of edge (i, j), 0 when absent.
  double weight(std::size_t i, std::size_t j) const;
  std::size_t degree(std::size_t i) const { return row_start[i + 1] - row_start[i]; }
};

/// Directed membership strengths exp(-max(0, d - rho) / sigma).
std::vector<WeightedEdge> membership_strengths(const KnnGraph& graph, std::span<const double> rho,
                                               std::span<const double> sigma);

/// Probabilistic t-conorm symmetrisation A + A^T - A o A^T. Duplicate
/// directed edges keep the larger weight; self loops and zero weights are
/// dropped.
FuzzyGraph fuzzy_union(std::size_t n, std::span<const WeightedEdge> directed);

/// KNN graph, bandwidth calibration and symmetrisation in one step.
FuzzyGraph build_fuzzy_graph(const Matrix<double>& data, std::size_t n_neighbors);

struct CurveFit {
  double a = 0.0;
  double b = 0.0;
  /// Root-mean-square residual on the fitting grid.
  double rms = 0.0;
};

inline constexpr std::size_t kCurveFitPoints = 300;

/// Least-squares fit of 1 / (1 + a x^(2b)) to the target membership curve
/// (1 for x <= min_dist, exp(-(x - min_dist) / spread) beyond) on 300 evenly
/// spaced points over [0, 3 * spread].
CurveFit fit_ab(double min_dist, double spread);

/// The target curve that fit_ab approximates.
double target_membership(double x, double min_dist, double spread) noexcept;

struct SpectralLayout {
  Matrix<double> coords;
  bool converged = false;
};

/// Bottom nontrivial eigenvectors of the symmetric normalised Laplacian
/// I - D^-1/2 W D^-1/2. Dense solve for small graphs, orthogonal subspace
/// iteration otherwise.
SpectralLayout spectral_layout(const FuzzyGraph& graph, std::size_t d);

struct ReducedSet {
  std::vector<SampleId> ids;
  Matrix<float> coords;
  std::size_t d = 0;
  UmapParams params;

  /// Wraps the coordinates as an embedding set for `.femb` output.
  EmbeddingSet to_embedding_set(std::string model_tag = {}, Variant variant = Variant::NoSeg) const;
};

/// Runs the SGD layout optimisation from a spectral (or random fallback)
/// initialisation. Deterministic given params.seed. `ids` may be empty.
ReducedSet optimize(const FuzzyGraph& graph, std::size_t d, const UmapParams& params,
                    std::vector<SampleId> ids = {});

/// Full reduction: fuzzy graph construction followed by optimize.
ReducedSet umap_reduce(const Matrix<double>& data, std::size_t d, const UmapParams& params,
                       std::vector<SampleId> ids = {});
ReducedSet umap_reduce(const EmbeddingSet& set, std::size_t d, const UmapParams& params);

}  // namespace formbench
