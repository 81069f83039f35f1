#include <Eigen/Dense>
#include <cmath>

#include "formbench/random.hpp"
#include "formbench/reducer.hpp"

namespace formbench {
namespace {

constexpr std::size_t kDenseLimit = 2500;
constexpr int kMaxSubspaceIterations = 3000;
constexpr double kResidualTolerance = 1e-6;

std::vector<double> inv_sqrt_degree(const FuzzyGraph& g) {
  std::vector<double> out(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    double deg = 0.0;
    for (std::size_t e = g.row_start[i]; e < g.row_start[i + 1]; ++e) deg += g.weights[e];
    out[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  return out;
}

SpectralLayout dense_layout(const FuzzyGraph& g, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto dinv = inv_sqrt_degree(g);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t e = g.row_start[i]; e < g.row_start[i + 1]; ++e) {
      const auto j = g.cols[e];
      lap(static_cast<Eigen::Index>(i), j) -= dinv[i] * g.weights[e] * dinv[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  SpectralLayout out;
  if (solver.info() != Eigen::Success) return out;
  out.coords = Matrix<double>(g.n, d);
  const auto& vecs = solver.eigenvectors();
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      out.coords(i, c) = vecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1));
    }
  }
  out.converged = true;
  return out;
}

// Top eigenvectors of I + D^-1/2 W D^-1/2 (spectrum in [0, 2]) are the bottom
// eigenvectors of the normalised Laplacian.
SpectralLayout subspace_layout(const FuzzyGraph& g, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto want = static_cast<Eigen::Index>(d + 1);
  const auto block = std::min<Eigen::Index>(n, want + 8);
  const auto dinv = inv_sqrt_degree(g);

  auto apply = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = x;
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t e = g.row_start[i]; e < g.row_start[i + 1]; ++e) {
        const auto j = g.cols[e];
        y.row(static_cast<Eigen::Index>(i)) += dinv[i] * g.weights[e] * dinv[j] * x.row(j);
      }
    }
    return y;
  };

  Rng rng(0x5eed5eedULL);
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  SpectralLayout out;
  for (int iter = 1; iter <= kMaxSubspaceIterations; ++iter) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(apply(x));
    x = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    if (iter % 25 != 0) continue;
    const Eigen::MatrixXd mx = apply(x);
    const Eigen::MatrixXd h = x.transpose() * mx;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h);
    if (ritz.info() != Eigen::Success) return out;
    // Eigenvalues ascend; the wanted pairs are the last `want` columns.
    const Eigen::MatrixXd vecs = x * ritz.eigenvectors();
    const Eigen::MatrixXd mvecs = mx * ritz.eigenvectors();
    bool done = true;
    for (Eigen::Index c = block - want; c < block && done; ++c) {
      const double resid = (mvecs.col(c) - ritz.eigenvalues()(c) * vecs.col(c)).norm();
      done = resid < kResidualTolerance;
    }
    x = vecs;
    if (!done) continue;
    out.coords = Matrix<double>(g.n, d);
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        // Column block-1 is the trivial eigenvector; skip it.
        out.coords(i, c) = vecs(static_cast<Eigen::Index>(i), block - 2 - static_cast<Eigen::Index>(c));
      }
    }
    out.converged = true;
    return out;
  }
  return out;
}

}  // namespace

SpectralLayout spectral_layout(const FuzzyGraph& graph, std::size_t d) {
  if (graph.n < d + 2) return {};
  if (graph.n <= kDenseLimit) return dense_layout(graph, d);
  return subspace_layout(graph, d);
}

}  // namespace formbench
