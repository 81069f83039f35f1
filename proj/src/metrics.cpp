#include "formbench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "formbench/error.hpp"

namespace formbench {
namespace {

using i128 = __int128;

i128 pairs(std::int64_t m) { return static_cast<i128>(m) * (m - 1) / 2; }

std::vector<std::size_t> compact(std::span<const int> labels, std::size_t& k) {
  std::vector<int> values(labels.begin(), labels.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  k = values.size();
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), labels[i]) - values.begin());
  }
  return out;
}

// Entropy of a count vector, nats.
double entropy(std::span<const std::int64_t> counts, double n) {
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

ContingencyTable contingency(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw Error("contingency: label vectors differ in length");
  if (truth.empty()) throw Error("contingency: empty label vectors");
  ContingencyTable ct;
  const auto ti = compact(truth, ct.rows);
  const auto pj = compact(pred, ct.cols);
  ct.counts.assign(ct.rows * ct.cols, 0);
  ct.row_sums.assign(ct.rows, 0);
  ct.col_sums.assign(ct.cols, 0);
  for (std::size_t s = 0; s < truth.size(); ++s) {
    ++ct.counts[ti[s] * ct.cols + pj[s]];
    ++ct.row_sums[ti[s]];
    ++ct.col_sums[pj[s]];
  }
  ct.n = static_cast<std::int64_t>(truth.size());
  return ct;
}

double ari(const ContingencyTable& ct) {
  if (ct.n < 2) throw Error("ARI needs at least 2 samples");
  i128 index = 0;
  for (auto c : ct.counts) index += pairs(c);
  i128 sum_a = 0, sum_b = 0;
  for (auto a : ct.row_sums) sum_a += pairs(a);
  for (auto b : ct.col_sums) sum_b += pairs(b);
  const i128 total = pairs(ct.n);
  // ARI = (index - sa*sb/total) / ((sa+sb)/2 - sa*sb/total), scaled by 2*total.
  const i128 num = 2 * (index * total - sum_a * sum_b);
  const i128 den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
  if (den == 0) return 1.0;
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double ari(std::span<const int> truth, std::span<const int> pred) {
  return ari(contingency(truth, pred));
}

VMeasure v_measure(const ContingencyTable& ct) {
  if (ct.n < 1) throw Error("V-measure needs at least 1 sample");
  const double n = static_cast<double>(ct.n);
  const double h_c = entropy(ct.row_sums, n);
  const double h_k = entropy(ct.col_sums, n);
  // H(C|K) and H(K|C) from joint counts.
  double h_c_given_k = 0.0, h_k_given_c = 0.0;
  for (std::size_t i = 0; i < ct.rows; ++i) {
    for (std::size_t j = 0; j < ct.cols; ++j) {
      const auto c = ct.at(i, j);
      if (c == 0) continue;
      const double nij = static_cast<double>(c);
      h_c_given_k -= nij / n * std::log(nij / static_cast<double>(ct.col_sums[j]));
      h_k_given_c -= nij / n * std::log(nij / static_cast<double>(ct.row_sums[i]));
    }
  }
  VMeasure out;
  out.homogeneity = h_c == 0.0 ? 1.0 : 1.0 - h_c_given_k / h_c;
  out.completeness = h_k == 0.0 ? 1.0 : 1.0 - h_k_given_c / h_k;
  out.homogeneity = std::clamp(out.homogeneity, 0.0, 1.0);
  out.completeness = std::clamp(out.completeness, 0.0, 1.0);
  const double s = out.homogeneity + out.completeness;
  out.v = s == 0.0 ? 0.0 : 2.0 * out.homogeneity * out.completeness / s;
  return out;
}

VMeasure v_measure(std::span<const int> truth, std::span<const int> pred) {
  return v_measure(contingency(truth, pred));
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw Error("accuracy: label vectors differ in length");
  if (truth.empty()) throw Error("accuracy: empty label vectors");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace formbench
