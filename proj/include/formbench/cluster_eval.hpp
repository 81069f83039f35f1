#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "formbench/matrix.hpp"
#include "formbench/reducer.hpp"

namespace formbench {

/// Scales each nonzero row to unit Euclidean norm; zero rows are unchanged.
Matrix<double> l2_normalize(const Matrix<double>& coords);

/// Per-feature standardisation to zero mean and unit (population) variance.
/// Constant features become zero.
Matrix<double> zscore_normalize(const Matrix<double>& coords);

enum class Normalization { L2, ZScore, None };

Matrix<double> normalize(const Matrix<double>& coords, Normalization mode);

inline constexpr std::size_t kKMeansMaxIterations = 300;

struct KMeansResult {
  std::vector<int> assignments;
  Matrix<double> centers;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  /// Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixpoint or kKMeansMaxIterations is reached. An empty cluster takes the
/// point farthest from its current center. Throws Error when k > N or k == 0.
KMeansResult kmeans(const Matrix<double>& coords, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = kKMeansMaxIterations);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);

struct KMeansRun {
  std::size_t dim_index = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  double ari = 0.0;
  double v_measure = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
};

struct KMeansEvaluation {
  MeanStd ari;
  MeanStd v_measure;
  /// Metrics of the lowest-inertia trial for each reduction.
  std::vector<KMeansRun> best_per_dim;
  std::vector<KMeansRun> runs;
};

/// Runs `trials` seeded k-means fits on every reduction (after
/// normalisation) and scores each against `labels`. Trial seeds come from
/// seed_derive(seed, "kmeans", dim_index * trials + trial).
KMeansEvaluation kmeans_eval(std::span<const Matrix<double>> reductions, std::span<const int> labels,
                             std::size_t k, std::size_t trials, std::uint64_t seed,
                             Normalization norm = Normalization::L2);

struct KnnResult {
  std::vector<int> predictions;
  double accuracy = 0.0;
  std::size_t k = 0;
};

/// Cosine distance 1 - cos(a, b); a zero vector is at distance 1 from everything.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Leave-one-out KNN under cosine distance. Neighbour ties go to the lower
/// index; vote ties to the smaller summed distance, then the lower label.
KnnResult knn_classify(const Matrix<double>& coords, std::span<const int> labels, std::size_t k);

/// Leave-one-out indices of the k nearest other points under cosine distance.
std::vector<std::size_t> cosine_neighbors(const Matrix<double>& unit_rows, std::size_t i,
                                          std::size_t k);

struct KnnEvaluation {
  double accuracy = 0.0;
  std::vector<double> per_dim;
  std::size_t k = 0;
};

KnnEvaluation knn_eval(std::span<const Matrix<double>> reductions, std::span<const int> labels,
                       std::size_t k);

/// Float coordinates of each ReducedSet widened to double.
std::vector<Matrix<double>> as_double(std::span<const ReducedSet> reductions);

}  // namespace formbench
