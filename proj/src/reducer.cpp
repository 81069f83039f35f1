#include "formbench/reducer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "formbench/error.hpp"
#include "formbench/random.hpp"

namespace formbench {

void UmapParams::validate(std::size_t n_points) const {
  if (n_neighbors < 2 || n_neighbors >= n_points) {
    throw Error("UMAP n_neighbors must satisfy 2 <= n_neighbors < N (n_neighbors=" +
                std::to_string(n_neighbors) + ", N=" + std::to_string(n_points) + ")");
  }
  if (!(min_dist > 0.0) || !(min_dist <= spread)) {
    throw Error("UMAP requires 0 < min_dist <= spread");
  }
  if (n_epochs == 0) throw Error("UMAP n_epochs must be positive");
  if (!(learning_rate > 0.0)) throw Error("UMAP learning_rate must be positive");
}

// ---------------------------------------------------------------------------
// Nearest neighbours

KnnGraph knn_graph(const Matrix<double>& data, std::size_t k) {
  const std::size_t n = data.rows();
  if (k == 0 || k >= n) {
    throw Error("knn_graph requires 0 < k < N (k=" + std::to_string(k) +
                ", N=" + std::to_string(n) + ")");
  }
  KnnGraph g{n, k, std::vector<std::uint32_t>(n * k), std::vector<double>(n * k)};
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = data.row(i);
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = data.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < xi.size(); ++t) {
        const double diff = xi[t] - xj[t];
        s += diff * diff;
      }
      cand[c++] = {s, static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t t = 0; t < k; ++t) {
      g.indices[i * k + t] = cand[t].second;
      g.dists[i * k + t] = std::sqrt(cand[t].first);
    }
  }
  return g;
}

std::vector<double> nearest_positive_distance(const KnnGraph& graph) {
  std::vector<double> rho(graph.n, 0.0);
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (double d : graph.distances(i)) {
      if (d > 0.0) {
        rho[i] = d;
        break;
      }
    }
  }
  return rho;
}

std::vector<double> smooth_knn(const KnnGraph& graph, std::span<const double> rho) {
  const double target = std::log2(static_cast<double>(graph.k));
  std::vector<double> sigma(graph.n, 1.0);
  for (std::size_t i = 0; i < graph.n; ++i) {
    const auto dists = graph.distances(i);
    const double mean_dist = std::accumulate(dists.begin(), dists.end(), 0.0) / dists.size();
    if (mean_dist == 0.0) {
      sigma[i] = 1.0;
      continue;
    }
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    for (int iter = 0; iter < kSmoothKnnIterations; ++iter) {
      double psum = 0.0;
      for (double d : dists) {
        const double excess = d - rho[i];
        psum += excess > 0.0 ? std::exp(-excess / mid) : 1.0;
      }
      if (std::abs(psum - target) < kSmoothKnnTolerance) break;
      if (psum > target) {
        hi = mid;
        mid = 0.5 * (lo + hi);
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
      }
    }
    // Floor for rows dominated by duplicates, where the target is unreachable.
    sigma[i] = std::max(mid, 1e-3 * mean_dist);
  }
  return sigma;
}

std::vector<WeightedEdge> membership_strengths(const KnnGraph& graph, std::span<const double> rho,
                                               std::span<const double> sigma) {
  std::vector<WeightedEdge> edges;
  edges.reserve(graph.n * graph.k);
  for (std::size_t i = 0; i < graph.n; ++i) {
    const auto nbrs = graph.neighbors(i);
    const auto dists = graph.distances(i);
    for (std::size_t t = 0; t < graph.k; ++t) {
      const double excess = dists[t] - rho[i];
      const double w = (excess <= 0.0 || sigma[i] == 0.0) ? 1.0 : std::exp(-excess / sigma[i]);
      edges.push_back({static_cast<std::uint32_t>(i), nbrs[t], w});
    }
  }
  return edges;
}

double FuzzyGraph::weight(std::size_t i, std::size_t j) const {
  const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_start[i]);
  const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_start[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return weights[static_cast<std::size_t>(it - cols.begin())];
}

FuzzyGraph fuzzy_union(std::size_t n, std::span<const WeightedEdge> directed) {
  auto by_pair = [](const WeightedEdge& l, const WeightedEdge& r) {
    return l.from != r.from ? l.from < r.from : l.to < r.to;
  };
  std::vector<WeightedEdge> edges;
  edges.reserve(directed.size());
  for (const auto& e : directed) {
    if (e.from >= n || e.to >= n) throw Error("fuzzy_union: edge endpoint out of range");
    if (e.from != e.to && e.weight > 0.0) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end(), by_pair);
  std::size_t out = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (out > 0 && edges[out - 1].from == edges[i].from && edges[out - 1].to == edges[i].to) {
      edges[out - 1].weight = std::max(edges[out - 1].weight, edges[i].weight);
    } else {
      edges[out++] = edges[i];
    }
  }
  edges.resize(out);

  std::vector<WeightedEdge> sym;
  sym.reserve(2 * edges.size());
  for (const auto& e : edges) {
    const WeightedEdge rev_key{e.to, e.from, 0.0};
    const auto it = std::lower_bound(edges.begin(), edges.end(), rev_key, by_pair);
    const bool has_rev = it != edges.end() && it->from == e.to && it->to == e.from;
    if (has_rev && e.from > e.to) continue;
    const double a = e.weight;
    const double b = has_rev ? it->weight : 0.0;
    const double w = a + b - a * b;
    sym.push_back({e.from, e.to, w});
    sym.push_back({e.to, e.from, w});
  }
  std::sort(sym.begin(), sym.end(), by_pair);

  FuzzyGraph g;
  g.n = n;
  g.row_start.assign(n + 1, 0);
  g.cols.reserve(sym.size());
  g.weights.reserve(sym.size());
  for (const auto& e : sym) {
    ++g.row_start[e.from + 1];
    g.cols.push_back(e.to);
    g.weights.push_back(e.weight);
  }
  for (std::size_t i = 0; i < n; ++i) g.row_start[i + 1] += g.row_start[i];
  return g;
}

FuzzyGraph build_fuzzy_graph(const Matrix<double>& data, std::size_t n_neighbors) {
  const auto knn = knn_graph(data, n_neighbors);
  auto rho = nearest_positive_distance(knn);
  auto sigma = smooth_knn(knn, rho);
  const auto directed = membership_strengths(knn, rho, sigma);
  auto g = fuzzy_union(data.rows(), directed);
  g.rho = std::move(rho);
  g.sigma = std::move(sigma);
  return g;
}

// ---------------------------------------------------------------------------
// Curve fit

double target_membership(double x, double min_dist, double spread) noexcept {
  return x <= min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
}

namespace {

struct FitGrid {
  std::vector<double> x, y;
};

FitGrid make_fit_grid(double min_dist, double spread) {
  FitGrid g;
  const double hi = 3.0 * spread;
  for (std::size_t i = 0; i < kCurveFitPoints; ++i) {
    const double x = hi * static_cast<double>(i) / static_cast<double>(kCurveFitPoints - 1);
    g.x.push_back(x);
    g.y.push_back(target_membership(x, min_dist, spread));
  }
  return g;
}

double curve(double x, double a, double b) {
  return x <= 0.0 ? 1.0 : 1.0 / (1.0 + a * std::pow(x, 2.0 * b));
}

double sum_sq(const FitGrid& g, double a, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    const double r = curve(g.x[i], a, b) - g.y[i];
    s += r * r;
  }
  return s;
}

}  // namespace

CurveFit fit_ab(double min_dist, double spread) {
  if (!(spread > 0.0) || !(min_dist >= 0.0)) throw Error("fit_ab: invalid min_dist/spread");
  const auto grid = make_fit_grid(min_dist, spread);

  // Coarse log-spaced grid search for a starting point.
  double a = 1.0, b = 1.0, best = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia <= 60; ++ia) {
    const double ca = std::pow(10.0, -1.0 + 2.0 * ia / 60.0);
    for (int ib = 0; ib <= 40; ++ib) {
      const double cb = 0.2 + 1.8 * ib / 40.0;
      const double s = sum_sq(grid, ca, cb);
      if (s < best) {
        best = s;
        a = ca;
        b = cb;
      }
    }
  }

  // Levenberg-Marquardt refinement with the analytic Jacobian.
  double lambda = 1e-3;
  for (int iter = 0; iter < 500; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
      const double x = grid.x[i];
      if (x <= 0.0) continue;
      const double p = std::pow(x, 2.0 * b);
      const double denom = 1.0 + a * p;
      const double f = 1.0 / denom;
      const double r = f - grid.y[i];
      const double da = -p / (denom * denom);
      const double db = -a * p * 2.0 * std::log(x) / (denom * denom);
      jtj[0][0] += da * da;
      jtj[0][1] += da * db;
      jtj[1][1] += db * db;
      jtr[0] += da * r;
      jtr[1] += db * r;
    }
    jtj[1][0] = jtj[0][1];
    bool improved = false;
    double gain = 0.0;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      const double m00 = jtj[0][0] * (1.0 + lambda);
      const double m11 = jtj[1][1] * (1.0 + lambda);
      const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
      if (det != 0.0) {
        const double na = a - (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
        const double nb = b - (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
        const double s = (na > 0.0 && nb > 0.0) ? sum_sq(grid, na, nb) : best;
        if (s < best) {
          gain = best - s;
          a = na;
          b = nb;
          best = s;
          lambda = std::max(lambda * 0.3, 1e-12);
          improved = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!improved || gain <= 1e-15 * best) break;
  }
  return {a, b, std::sqrt(best / static_cast<double>(grid.x.size()))};
}

// ---------------------------------------------------------------------------
// Layout optimisation

EmbeddingSet ReducedSet::to_embedding_set(std::string model_tag, Variant variant) const {
  EmbeddingSet set;
  set.ids = ids;
  set.data = coords;
  set.model_tag = std::move(model_tag);
  set.variant = variant;
  return set;
}

namespace {

inline double clip(double v) { return std::clamp(v, -4.0, 4.0); }

Matrix<double> initial_layout(const FuzzyGraph& graph, std::size_t d, Rng& rng) {
  const std::size_t n = graph.n;
  Matrix<double> coords;
  auto spectral = spectral_layout(graph, d);
  if (spectral.converged) {
    double max_abs = 0.0;
    for (double v : spectral.coords.values()) max_abs = std::max(max_abs, std::abs(v));
    const double expansion = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
    coords = std::move(spectral.coords);
    for (double& v : coords.values()) v = v * expansion + 1e-4 * rng.normal();
  } else {
    warn("spectral initialisation did not converge; using random initialisation");
    coords = Matrix<double>(n, d);
    for (double& v : coords.values()) v = rng.uniform(-10.0, 10.0);
  }
  for (std::size_t c = 0; c < d; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, coords(i, c));
      hi = std::max(hi, coords(i, c));
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
      coords(i, c) = range > 0.0 ? 10.0 * (coords(i, c) - lo) / range : 0.0;
    }
  }
  return coords;
}

}  // namespace

ReducedSet optimize(const FuzzyGraph& graph, std::size_t d, const UmapParams& params,
                    std::vector<SampleId> ids) {
  const std::size_t n = graph.n;
  params.validate(n);
  if (d == 0) throw Error("UMAP target dimension must be positive");
  if (!ids.empty() && ids.size() != n) throw Error("optimize: id count does not match graph");

  const auto [a, b, rms] = fit_ab(params.min_dist, params.spread);
  (void)rms;
  Rng rng(params.seed);

  // Edges below max_weight / n_epochs would never be sampled.
  const double max_w =
      graph.weights.empty() ? 0.0 : *std::max_element(graph.weights.begin(), graph.weights.end());
  const double n_epochs = static_cast<double>(params.n_epochs);
  std::vector<std::uint32_t> head, tail;
  std::vector<double> epochs_per_sample;
  std::vector<bool> connected(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = graph.row_start[i]; e < graph.row_start[i + 1]; ++e) {
      const double w = graph.weights[e];
      if (w < max_w / n_epochs) continue;
      head.push_back(static_cast<std::uint32_t>(i));
      tail.push_back(graph.cols[e]);
      epochs_per_sample.push_back(max_w / w);
      connected[i] = true;
      connected[graph.cols[e]] = true;
    }
  }

  Matrix<double> emb = initial_layout(graph, d, rng);
  std::size_t isolated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!connected[i]) {
      ++isolated;
      for (double& v : emb.row(i)) v = 0.0;
    }
  }
  if (isolated > 0) {
    warn(std::to_string(isolated) + " isolated vertex/vertices in the fuzzy graph placed at the origin");
  }

  const std::size_t m = head.size();
  const double neg_rate = static_cast<double>(params.negative_sample_rate);
  std::vector<double> next_sample = epochs_per_sample;
  std::vector<double> epochs_per_neg(m), next_neg(m);
  for (std::size_t e = 0; e < m; ++e) {
    epochs_per_neg[e] = neg_rate > 0.0 ? epochs_per_sample[e] / neg_rate : 0.0;
    next_neg[e] = epochs_per_neg[e];
  }

  for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
    const double ep = static_cast<double>(epoch);
    const double alpha = params.learning_rate * (1.0 - ep / n_epochs);
    for (std::size_t e = 0; e < m; ++e) {
      if (next_sample[e] > ep) continue;
      auto current = emb.row(head[e]);
      auto other = emb.row(tail[e]);
      double d2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = current[c] - other[c];
        d2 += diff * diff;
      }
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        for (std::size_t c = 0; c < d; ++c) {
          const double g = clip(coeff * (current[c] - other[c]));
          current[c] += g * alpha;
          other[c] -= g * alpha;
        }
      }
      next_sample[e] += epochs_per_sample[e];

      if (neg_rate <= 0.0) continue;
      const auto n_neg = static_cast<std::size_t>((ep - next_neg[e]) / epochs_per_neg[e]);
      for (std::size_t p = 0; p < n_neg; ++p) {
        const auto k = rng.below(n);
        if (k == head[e]) continue;
        auto neg = emb.row(k);
        double nd2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = current[c] - neg[c];
          nd2 += diff * diff;
        }
        if (nd2 <= 0.0) continue;
        const double coeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
        for (std::size_t c = 0; c < d; ++c) {
          current[c] += clip(coeff * (current[c] - neg[c])) * alpha;
        }
      }
      next_neg[e] += static_cast<double>(n_neg) * epochs_per_neg[e];
    }
  }

  ReducedSet out;
  out.ids = std::move(ids);
  out.coords = emb.cast<float>();
  out.d = d;
  out.params = params;
  for (float v : out.coords.values()) {
    if (!std::isfinite(v)) throw Error("UMAP produced non-finite coordinates");
  }
  return out;
}

ReducedSet umap_reduce(const Matrix<double>& data, std::size_t d, const UmapParams& params,
                       std::vector<SampleId> ids) {
  params.validate(data.rows());
  const auto graph = build_fuzzy_graph(data, params.n_neighbors);
  return optimize(graph, d, params, std::move(ids));
}

ReducedSet umap_reduce(const EmbeddingSet& set, std::size_t d, const UmapParams& params) {
  if (d >= set.dim()) {
    throw Error("reduced dimension " + std::to_string(d) + " must be below D=" +
                std::to_string(set.dim()));
  }
  return umap_reduce(set.data.cast<double>(), d, params, set.ids);
}

}  // namespace formbench
