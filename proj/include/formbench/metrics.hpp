#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace formbench {

/// Counts of (true class, predicted cluster) co-occurrences. Arbitrary label
/// values are compacted to 0..K-1 in ascending order.
struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> counts;  // rows x cols, row-major
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;

  std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

ContingencyTable contingency(std::span<const int> truth, std::span<const int> pred);

/// Adjusted Rand Index, computed with exact 128-bit pair counts. Returns 1
/// when both partitions are trivial. Throws Error for n < 2.
double ari(const ContingencyTable& ct);
double ari(std::span<const int> truth, std::span<const int> pred);

struct VMeasure {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v = 0.0;
};

/// Homogeneity, completeness and their harmonic mean (entropies in nats).
VMeasure v_measure(const ContingencyTable& ct);
VMeasure v_measure(std::span<const int> truth, std::span<const int> pred);

/// Fraction of positions where the labels agree.
double accuracy(std::span<const int> truth, std::span<const int> pred);

}  // namespace formbench
