#include "formbench/cluster_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "formbench/error.hpp"
#include "formbench/metrics.hpp"
#include "formbench/random.hpp"
#include "formbench/seed.hpp"

namespace formbench {

Matrix<double> l2_normalize(const Matrix<double>& coords) {
  Matrix<double> out = coords;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (double v : r) s += v * v;
    if (s == 0.0) continue;
    const double inv = 1.0 / std::sqrt(s);
    for (double& v : r) v *= inv;
  }
  return out;
}

Matrix<double> zscore_normalize(const Matrix<double>& coords) {
  Matrix<double> out = coords;
  const std::size_t n = out.rows();
  for (std::size_t c = 0; c < out.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += out(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (out(i, c) - mean) * (out(i, c) - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out(i, c) = sd > 0.0 ? (out(i, c) - mean) / sd : 0.0;
  }
  return out;
}

Matrix<double> normalize(const Matrix<double>& coords, Normalization mode) {
  switch (mode) {
    case Normalization::L2: return l2_normalize(coords);
    case Normalization::ZScore: return zscore_normalize(coords);
    case Normalization::None: return coords;
  }
  return coords;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = a[t] - b[t];
    s += d * d;
  }
  return s;
}

Matrix<double> kmeanspp(const Matrix<double>& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix<double> centers(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > target && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.below(n);
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c)));
  }
  return centers;
}

double assign(const Matrix<double>& x, const Matrix<double>& centers, std::vector<int>& labels) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      const double d = sq_dist(x.row(i), centers.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    inertia += best;
  }
  return inertia;
}

void update_centers(const Matrix<double>& x, const std::vector<int>& labels, Matrix<double>& centers) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> counts(k, 0);
  Matrix<double> sums(k, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto s = sums.row(static_cast<std::size_t>(labels[i]));
    const auto r = x.row(i);
    for (std::size_t t = 0; t < r.size(); ++t) s[t] += r[t];
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto dst = centers.row(c);
    const auto s = sums.row(c);
    for (std::size_t t = 0; t < s.size(); ++t) dst[t] = s[t] / static_cast<double>(counts[c]);
  }
}

// Moves the farthest point of a non-singleton cluster into each empty cluster.
void repair_empty(const Matrix<double>& x, std::vector<int>& labels, Matrix<double>& centers) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    double far = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (counts[l] < 2) continue;
      const double d = sq_dist(x.row(i), centers.row(l));
      if (d > far) {
        far = d;
        arg = i;
      }
    }
    --counts[static_cast<std::size_t>(labels[arg])];
    labels[arg] = static_cast<int>(c);
    counts[c] = 1;
    std::copy(x.row(arg).begin(), x.row(arg).end(), centers.row(c).begin());
  }
}

}  // namespace

KMeansResult kmeans(const Matrix<double>& coords, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  const std::size_t n = coords.rows();
  if (k == 0 || k > n) {
    throw Error("kmeans requires 1 <= k <= N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  for (double v : coords.values()) {
    if (!std::isfinite(v)) throw Error("kmeans input contains non-finite values");
  }
  Rng rng(seed);
  KMeansResult res;
  res.seed = seed;
  res.centers = kmeanspp(coords, k, rng);
  res.assignments.assign(n, 0);
  res.inertia = assign(coords, res.centers, res.assignments);
  res.inertia_history.push_back(res.inertia);

  double scale = 0.0;
  for (double v : coords.values()) scale += v * v;
  const double slack = 1e-12 * scale;

  std::vector<int> next(n, 0);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    update_centers(coords, res.assignments, res.centers);
    repair_empty(coords, res.assignments, res.centers);
    const double inertia = assign(coords, res.centers, next);
    const double prev = res.inertia_history.back();
    if (inertia > prev * (1.0 + 1e-12) + slack) {
      throw Error("kmeans inertia increased (" + std::to_string(prev) + " -> " +
                  std::to_string(inertia) + ")");
    }
    res.inertia_history.push_back(inertia);
    res.inertia = inertia;
    res.iterations = iter + 1;
    if (next == res.assignments) break;
    res.assignments.swap(next);
  }
  return res;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

KMeansEvaluation kmeans_eval(std::span<const Matrix<double>> reductions, std::span<const int> labels,
                             std::size_t k, std::size_t trials, std::uint64_t seed,
                             Normalization norm) {
  if (reductions.empty()) throw Error("kmeans_eval needs at least one reduction");
  if (trials == 0) throw Error("kmeans_eval needs at least one trial");
  KMeansEvaluation out;
  std::vector<double> aris, vs;
  for (std::size_t di = 0; di < reductions.size(); ++di) {
    if (reductions[di].rows() != labels.size()) {
      throw Error("kmeans_eval: reduction rows do not match label count");
    }
    const auto x = normalize(reductions[di], norm);
    KMeansRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      KMeansRun run;
      run.dim_index = di;
      run.trial = t;
      run.seed = seed_derive(seed, "kmeans", di * trials + t);
      const auto fit = kmeans(x, k, run.seed);
      run.inertia = fit.inertia;
      run.ari = ari(labels, fit.assignments);
      const auto vm = v_measure(labels, fit.assignments);
      run.v_measure = vm.v;
      run.homogeneity = vm.homogeneity;
      run.completeness = vm.completeness;
      aris.push_back(run.ari);
      vs.push_back(run.v_measure);
      if (run.inertia < best.inertia) best = run;
      out.runs.push_back(run);
    }
    out.best_per_dim.push_back(best);
  }
  out.ari = mean_std(aris);
  out.v_measure = mean_std(vs);
  return out;
}

// ---------------------------------------------------------------------------
// KNN

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    dot += a[t] * b[t];
    na += a[t] * a[t];
    nb += b[t] * b[t];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<std::pair<double, std::size_t>> nearest_by_cosine(const Matrix<double>& unit,
                                                              std::size_t i, std::size_t k) {
  const std::size_t n = unit.rows();
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  const auto xi = unit.row(i);
  const bool zero_i = std::all_of(xi.begin(), xi.end(), [](double v) { return v == 0.0; });
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const auto xj = unit.row(j);
    double dot = 0.0;
    bool zero_j = true;
    for (std::size_t t = 0; t < xi.size(); ++t) {
      dot += xi[t] * xj[t];
      zero_j = zero_j && xj[t] == 0.0;
    }
    cand.emplace_back((zero_i || zero_j) ? 1.0 : 1.0 - dot, j);
  }
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  cand.resize(k);
  return cand;
}

}  // namespace

std::vector<std::size_t> cosine_neighbors(const Matrix<double>& unit_rows, std::size_t i,
                                          std::size_t k) {
  std::vector<std::size_t> out;
  for (const auto& [d, j] : nearest_by_cosine(unit_rows, i, k)) out.push_back(j);
  return out;
}

KnnResult knn_classify(const Matrix<double>& coords, std::span<const int> labels, std::size_t k) {
  const std::size_t n = coords.rows();
  if (labels.size() != n) throw Error("knn: label count does not match rows");
  if (k == 0 || k >= n) {
    throw Error("knn requires 0 < k < N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw Error("knn: negative label");
  const auto unit = l2_normalize(coords);
  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1);
  std::vector<double> dist_sum(votes.size());

  KnnResult res;
  res.k = k;
  res.predictions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (const auto& [d, j] : nearest_by_cosine(unit, i, k)) {
      ++votes[static_cast<std::size_t>(labels[j])];
      dist_sum[static_cast<std::size_t>(labels[j])] += d;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && votes[c] > 0 &&
                                     dist_sum[c] < dist_sum[best])) {
        best = c;
      }
    }
    res.predictions[i] = static_cast<int>(best);
  }
  res.accuracy = accuracy(labels, res.predictions);
  return res;
}

KnnEvaluation knn_eval(std::span<const Matrix<double>> reductions, std::span<const int> labels,
                       std::size_t k) {
  if (reductions.empty()) throw Error("knn_eval needs at least one reduction");
  KnnEvaluation out;
  out.k = k;
  for (const auto& r : reductions) out.per_dim.push_back(knn_classify(r, labels, k).accuracy);
  out.accuracy = mean_std(out.per_dim).mean;
  return out;
}

std::vector<Matrix<double>> as_double(std::span<const ReducedSet> reductions) {
  std::vector<Matrix<double>> out;
  out.reserve(reductions.size());
  for (const auto& r : reductions) out.push_back(r.coords.cast<double>());
  return out;
}

}  // namespace formbench
