#include <doctest.h>

#include <cmath>

#include "formbench/error.hpp"
#include "formbench/metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace formbench;

TEST_CASE("contingency counts co-occurrences") {
  const std::vector<int> t{0, 0, 1, 1, 1};
  const std::vector<int> p{5, 7, 7, 7, 5};
  const auto ct = contingency(t, p);
  CHECK(ct.rows == 2);
  CHECK(ct.cols == 2);
  CHECK(ct.n == 5);
  CHECK(ct.at(0, 0) == 1);
  CHECK(ct.at(0, 1) == 1);
  CHECK(ct.at(1, 0) == 1);
  CHECK(ct.at(1, 1) == 2);
  CHECK(ct.row_sums == std::vector<std::int64_t>{2, 3});
  CHECK(ct.col_sums == std::vector<std::int64_t>{2, 3});
  CHECK_THROWS_AS(contingency(std::vector<int>{0}, std::vector<int>{0, 1}), Error);
  CHECK_THROWS_AS(contingency(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("ARI fixed cases") {
  const std::vector<int> a{0, 0, 1, 1};
  CHECK(ari(a, a) == 1.0);
  // Pair counts: 1 agreeing same-pair, sums 2 and 1 over C(4,2)=6 pairs.
  const std::vector<int> b{0, 0, 1, 2};
  CHECK(ari(a, b) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(std::abs(oracle::ari_pairs(a, b) - 4.0 / 7.0) < 1e-15);

  const std::vector<int> balanced{0, 0, 0, 1, 1, 1};
  const std::vector<int> merged(6, 0);
  CHECK(ari(balanced, merged) == 0.0);
  // Both partitions trivial.
  CHECK(ari(merged, merged) == 1.0);
  CHECK_THROWS_AS(ari(std::vector<int>{0}, std::vector<int>{0}), Error);
}

TEST_CASE("V-measure fixed cases") {
  const std::vector<int> a{0, 0, 1, 1};
  const auto same = v_measure(a, a);
  CHECK(same.homogeneity == doctest::Approx(1.0));
  CHECK(same.completeness == doctest::Approx(1.0));
  CHECK(same.v == doctest::Approx(1.0));

  const std::vector<int> merged(4, 0);
  const auto m = v_measure(a, merged);
  CHECK(m.homogeneity == 0.0);
  CHECK(m.completeness == 1.0);
  CHECK(m.v == 0.0);

  // H(K) = ln 4, H(K|C) = ln 2 => c = 1/2, v = 2/3.
  const std::vector<int> split{0, 1, 2, 3};
  const auto s = v_measure(a, split);
  const auto o = oracle::v_measure_entropy(a, split);
  CHECK(s.homogeneity == doctest::Approx(1.0));
  CHECK(s.completeness == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.v == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(s.v - o.v) < 1e-12);
}

TEST_CASE("accuracy") {
  CHECK(accuracy(std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 1, 1, 2}) == 0.75);
  CHECK_THROWS_AS(accuracy(std::vector<int>{0}, std::vector<int>{}), Error);
}

TEST_CASE("metrics match oracles and obey invariants on random partitions") {
  Rng rng(20240611);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = 2 + rng.below(11);
    const int kt = 1 + static_cast<int>(rng.below(4));
    const int kp = 1 + static_cast<int>(rng.below(4));
    const auto t = testing::random_labels(n, kt, rng);
    const auto p = testing::random_labels(n, kp, rng);
    const double r = ari(t, p);
    CHECK(std::abs(r - oracle::ari_pairs(t, p)) <= 1e-12);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(r == doctest::Approx(ari(p, t)).epsilon(1e-15));

    const auto vm = v_measure(t, p);
    const auto vo = oracle::v_measure_entropy(t, p);
    CHECK(std::abs(vm.homogeneity - vo.h) <= 1e-12);
    CHECK(std::abs(vm.completeness - vo.c) <= 1e-12);
    CHECK(std::abs(vm.v - vo.v) <= 1e-12);
    const auto swapped = v_measure(p, t);
    CHECK(std::abs(swapped.homogeneity - vm.completeness) <= 1e-12);
    CHECK(std::abs(swapped.completeness - vm.homogeneity) <= 1e-12);
    for (double x : {vm.homogeneity, vm.completeness, vm.v}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }

    // Relabel predicted clusters with a permutation plus offset.
    std::vector<int> perm{3, 0, 2, 1};
    std::vector<int> relabeled;
    for (int v : p) relabeled.push_back(10 + perm[static_cast<std::size_t>(v)]);
    CHECK(ari(t, relabeled) == r);
    CHECK(v_measure(t, relabeled).v == doctest::Approx(vm.v).epsilon(1e-14));
  }
}

TEST_CASE("ARI pair counts stay exact at n ~ 10^4") {
  std::vector<int> t(20000), p(20000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(i % 5);
    p[i] = static_cast<int>((i / 7) % 5);
  }
  const double r = ari(t, p);
  CHECK(std::isfinite(r));
  // exact rational value computed offline with arbitrary precision
  CHECK(std::abs(r - 0.030425992833487136) < 1e-15);
  CHECK(ari(t, t) == 1.0);
}
