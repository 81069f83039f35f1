#include <doctest.h>

#include <cmath>
#include <numbers>

#include "formbench/cluster_eval.hpp"
#include "formbench/error.hpp"
#include "formbench/metrics.hpp"
#include "support/synthetic.hpp"

using namespace formbench;

TEST_CASE("l2_normalize") {
  Matrix<double> x(2, 2, std::vector<double>{3, 4, 0, 0});
  const auto y = l2_normalize(x);
  CHECK(y(0, 0) == doctest::Approx(0.6));
  CHECK(y(0, 1) == doctest::Approx(0.8));
  CHECK(y(1, 0) == 0.0);
  CHECK(y(1, 1) == 0.0);

  const auto r = l2_normalize(testing::random_matrix(100, 7, 3, -50.0, 50.0));
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double s = 0.0;
    for (double v : r.row(i)) s += v * v;
    CHECK(std::abs(std::sqrt(s) - 1.0) <= 1e-12);
  }
}

TEST_CASE("zscore_normalize standardises columns") {
  const auto x = zscore_normalize(testing::random_matrix(50, 3, 8, 0.0, 10.0));
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < 50; ++i) m += x(i, c);
    m /= 50;
    for (std::size_t i = 0; i < 50; ++i) v += (x(i, c) - m) * (x(i, c) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 50 == doctest::Approx(1.0));
  }
}

TEST_CASE("kmeans recovers separated blobs") {
  const auto data = testing::gaussian_blobs(3, 50, 4, 20.0, 11);
  const auto fit = kmeans(data.x, 3, 5);
  CHECK(ari(data.labels, fit.assignments) == 1.0);
  CHECK(fit.centers.rows() == 3);
  for (std::size_t i = 1; i < fit.inertia_history.size(); ++i) {
    CHECK(fit.inertia_history[i] <= fit.inertia_history[i - 1]);
  }
  CHECK(fit.inertia >= 0.0);
}

TEST_CASE("kmeans edge cases") {
  const auto x = testing::random_matrix(12, 3, 2);
  const auto each = kmeans(x, 12, 1);
  CHECK(each.inertia == 0.0);
  std::vector<int> sorted = each.assignments;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 12; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

  Matrix<double> same(6, 2, 0.1);
  const auto one = kmeans(same, 1, 3);
  CHECK(one.inertia == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(one.centers(0, 0) == doctest::Approx(0.1));
  CHECK(one.centers(0, 1) == doctest::Approx(0.1));

  // More clusters than distinct points: empty clusters are repaired.
  const auto dup = kmeans(same, 3, 3);
  for (int a : dup.assignments) CHECK((a >= 0 && a < 3));

  CHECK_THROWS_AS(kmeans(x, 13, 1), Error);
  CHECK_THROWS_AS(kmeans(x, 0, 1), Error);
}

TEST_CASE("kmeans recovers blobs regardless of rotation") {
  const auto data = testing::gaussian_blobs(3, 40, 2, 15.0, 21);
  for (double angle : {0.3, 1.1, 2.5}) {
    Matrix<double> rot(data.x.rows(), 2);
    for (std::size_t i = 0; i < rot.rows(); ++i) {
      rot(i, 0) = std::cos(angle) * data.x(i, 0) - std::sin(angle) * data.x(i, 1);
      rot(i, 1) = std::sin(angle) * data.x(i, 0) + std::cos(angle) * data.x(i, 1);
    }
    CHECK(ari(data.labels, kmeans(rot, 3, 4).assignments) == 1.0);
  }
}

TEST_CASE("kmeans is deterministic") {
  const auto x = testing::random_matrix(80, 5, 6);
  const auto a = kmeans(x, 4, 99);
  const auto b = kmeans(x, 4, 99);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);
  CHECK(a.centers == b.centers);
}

TEST_CASE("kmeans_eval runs trials x dims") {
  const auto data = testing::gaussian_blobs(3, 30, 5, 12.0, 1);
  const std::vector<Matrix<double>> dims{data.x, data.x, data.x};
  const auto ev = kmeans_eval(dims, data.labels, 3, 3, 7);
  CHECK(ev.runs.size() == 9);
  CHECK(ev.best_per_dim.size() == 3);
  CHECK(ev.ari.mean == doctest::Approx(1.0));
  CHECK(ev.ari.std >= 0.0);
  CHECK(ev.v_measure.mean == doctest::Approx(1.0));
}

TEST_CASE("mean_std uses the population deviation") {
  const std::vector<double> v{1.0, 3.0};
  const auto m = mean_std(v);
  CHECK(m.mean == 2.0);
  CHECK(m.std == 1.0);
}

TEST_CASE("knn perfect separation and scale invariance") {
  const auto data = testing::gaussian_blobs(2, 30, 3, 30.0, 4);
  const auto r = knn_classify(data.x, data.labels, 3);
  CHECK(r.accuracy == 1.0);

  const auto x = testing::random_matrix(60, 4, 13);
  Rng rng(5);
  const auto labels = testing::random_labels(60, 3, rng);
  const auto base = knn_classify(x, labels, 5);
  for (double scale : {0.5, 2.0, 1024.0}) {
    Matrix<double> s = x;
    for (double& v : s.values()) v *= scale;
    CHECK(knn_classify(s, labels, 5).predictions == base.predictions);
  }
  CHECK_THROWS_AS(knn_classify(x, labels, 60), Error);
}

TEST_CASE("knn never uses a point as its own neighbour") {
  const auto x = testing::random_matrix(40, 3, 77);
  const auto unit = l2_normalize(x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto nb = cosine_neighbors(unit, i, 10);
    CHECK(std::find(nb.begin(), nb.end(), i) == nb.end());
  }
  // A duplicated point must pick its twin, not itself.
  Matrix<double> twins(3, 2, std::vector<double>{1, 0, 1, 0, 0, 1});
  const auto nb = cosine_neighbors(l2_normalize(twins), 0, 1);
  CHECK(nb[0] == 1);
}

TEST_CASE("knn vote ties resolve by summed distance then label") {
  // Query at angle 0; one neighbour of each label, label 1 closer.
  Matrix<double> x(3, 2);
  x(0, 0) = 1.0;
  x(1, 0) = std::cos(0.5);
  x(1, 1) = std::sin(0.5);
  x(2, 0) = std::cos(0.2);
  x(2, 1) = -std::sin(0.2);
  const std::vector<int> labels{0, 0, 1};
  const auto r = knn_classify(x, labels, 2);
  CHECK(r.predictions[0] == 1);

  // Symmetric neighbours at equal distance: lowest label wins.
  Matrix<double> y(3, 2);
  y(0, 0) = 1.0;
  y(1, 0) = std::cos(0.4);
  y(1, 1) = std::sin(0.4);
  y(2, 0) = std::cos(0.4);
  y(2, 1) = -std::sin(0.4);
  const std::vector<int> l2{2, 1, 0};
  CHECK(knn_classify(y, l2, 2).predictions[0] == 0);
}

TEST_CASE("knn accuracy under the null is near chance") {
  double total = 0.0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const auto x = testing::random_matrix(200, 5, 500 + rep);
    std::vector<int> labels(200);
    for (std::size_t i = 0; i < 200; ++i) labels[i] = static_cast<int>(i % 2);
    Rng rng(900 + rep);
    rng.shuffle(labels.begin(), labels.end());
    const double acc = knn_classify(x, labels, 10).accuracy;
    CHECK(std::abs(acc - 0.5) <= 0.1);
    total += acc;
  }
  CHECK(std::abs(total / reps - 0.5) < 0.05);
}

TEST_CASE("knn_eval averages over reductions") {
  const auto a = testing::gaussian_blobs(2, 20, 3, 30.0, 1);
  Rng rng(3);
  const auto noise = testing::random_matrix(40, 3, 8);
  const std::vector<Matrix<double>> dims{a.x, noise};
  const auto ev = knn_eval(dims, a.labels, 5);
  CHECK(ev.per_dim.size() == 2);
  CHECK(ev.per_dim[0] == 1.0);
  CHECK(ev.accuracy == doctest::Approx((ev.per_dim[0] + ev.per_dim[1]) / 2));
}
