#include <doctest.h>

#include <cmath>
#include <numeric>

#include "formbench/error.hpp"
#include "formbench/linear_probe.hpp"
#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"

using namespace formbench;

TEST_CASE("equal logits give ln 2 loss for two classes") {
  Matrix<double> logits(3, 2, 0.7);
  CHECK(cross_entropy(logits, std::vector<int>{0, 1, 1}) == doctest::Approx(std::log(2.0)));
  ProbeModel zero(4, 2);
  const auto x = testing::random_matrix(5, 4, 1);
  const auto lg = loss_and_grads(zero, x, std::vector<int>{0, 1, 0, 1, 1});
  CHECK(lg.loss == doctest::Approx(0.6931471805599453));
}

TEST_CASE("cross entropy is stable for large logits") {
  Matrix<double> logits(1, 3, std::vector<double>{1000.0, 0.0, -1000.0});
  CHECK(cross_entropy(logits, std::vector<int>{0}) == doctest::Approx(0.0));
  CHECK(std::isfinite(cross_entropy(logits, std::vector<int>{2})));
}

TEST_CASE("softmax rows sum to one") {
  const auto logits = testing::random_matrix(20, 6, 4, -30.0, 30.0);
  const auto p = softmax(logits);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row(i);
    CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0) < 1e-6);
  }
}

TEST_CASE("forward modes use batch or running statistics") {
  ProbeModel m(2, 2);
  Matrix<double> x(2, 2, std::vector<double>{1.0, 10.0, 3.0, 20.0});
  const auto train = forward(m, x, BnMode::Train);
  CHECK(train.batch_mean == std::vector<double>{2.0, 15.0});
  CHECK(train.batch_var == std::vector<double>{1.0, 25.0});
  CHECK(train.normalized(0, 0) == doctest::Approx(-1.0 / std::sqrt(1.0 + 1e-5)));
  const auto eval = forward(m, x, BnMode::Eval);
  // Running mean 0, variance 1.
  CHECK(eval.normalized(1, 1) == doctest::Approx(20.0 / std::sqrt(1.0 + 1e-5)));
}

TEST_CASE("analytic gradients match central differences") {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) worst = std::max(worst, testing::gradient_check(1000 + s).worst());
  CHECK(worst < 1e-4);
}

TEST_CASE("make_batches merges tiny trailing batches") {
  std::vector<std::size_t> order(67);
  std::iota(order.begin(), order.end(), 0);
  const auto b = make_batches(order, 64);
  REQUIRE(b.size() == 1);
  CHECK(b[0].size() == 67);
  order.resize(70);
  std::iota(order.begin(), order.end(), 0);
  const auto c = make_batches(order, 64);
  REQUIRE(c.size() == 2);
  CHECK(c[1].size() == 6);
}

TEST_CASE("learning rate steps down at 60% and 80%") {
  ProbeConfig cfg;
  cfg.epochs = 100;
  CHECK(cfg.learning_rate(0) == cfg.base_lr);
  CHECK(cfg.learning_rate(59) == cfg.base_lr);
  CHECK(cfg.learning_rate(60) == doctest::Approx(cfg.base_lr * 0.1));
  CHECK(cfg.learning_rate(80) == doctest::Approx(cfg.base_lr * 0.01));
}

TEST_CASE("training reduces loss and separates separable data") {
  const auto data = testing::separable_classes(3, 150, 10, 6.0, 2);
  ProbeConfig cfg;
  cfg.epochs = 60;
  cfg.base_lr = 1e-2;
  const auto fit = train_fold(data.x, data.labels, 3, cfg, 5);
  CHECK(fit.epoch_losses.back() < fit.initial_loss);
  CHECK(fit.initial_loss == doctest::Approx(std::log(3.0)));
  const auto pred = predict(fit.model, data.x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == data.labels[i];
  CHECK(static_cast<double>(hit) / pred.size() >= 0.98);
  for (double v : fit.model.bn_var) CHECK(v >= 0.0);

  const auto again = train_fold(data.x, data.labels, 3, cfg, 5);
  CHECK(again.model.weights == fit.model.weights);
}

TEST_CASE("weight decay shrinks weights but not the bias") {
  const auto data = testing::separable_classes(2, 40, 3, 4.0, 9);
  ProbeConfig low, high;
  low.epochs = high.epochs = 30;
  low.weight_decay = 0.0;
  high.weight_decay = 5.0;
  const auto a = train_fold(data.x, data.labels, 2, low, 1);
  const auto b = train_fold(data.x, data.labels, 2, high, 1);
  double na = 0.0, nb = 0.0;
  for (double v : a.model.weights.values()) na += v * v;
  for (double v : b.model.weights.values()) nb += v * v;
  CHECK(nb < na);
}

TEST_CASE("stratified folds partition and balance classes") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 7 + 9 * c; ++i) labels.push_back(c);
  }
  const std::size_t folds = 10;
  const auto f = stratified_folds(labels, folds, 3);
  CHECK(f.size() == labels.size());
  for (int c = 0; c < 4; ++c) {
    std::vector<int> per(folds, 0);
    std::size_t members = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      REQUIRE(f[i] >= 0);
      REQUIRE(f[i] < static_cast<int>(folds));
      ++per[static_cast<std::size_t>(f[i])];
      ++members;
    }
    const double expected = static_cast<double>(members) / folds;
    for (int p : per) CHECK(std::abs(p - expected) <= 1.0);
  }
  std::vector<int> sizes(folds, 0);
  for (int x : f) ++sizes[static_cast<std::size_t>(x)];
  for (int s : sizes) CHECK(s > 0);
  CHECK(stratified_folds(labels, folds, 3) == f);
  CHECK_THROWS_AS(stratified_folds(std::vector<int>{0, 1, 0}, 4, 1), Error);
}

TEST_CASE("cross_validate is deterministic") {
  const auto data = testing::separable_classes(3, 90, 6, 5.0, 12);
  ProbeConfig cfg;
  cfg.epochs = 20;
  cfg.folds = 5;
  cfg.seed = 8;
  const auto a = cross_validate(data.x, data.labels, 3, cfg);
  const auto b = cross_validate(data.x, data.labels, 3, cfg);
  CHECK(a.fold_accuracies == b.fold_accuracies);
  CHECK(a.fold_of == b.fold_of);
  CHECK(a.fold_accuracies.size() == 5);
  CHECK(a.mean_accuracy > 0.9);
  cfg.folds = 1;
  CHECK_THROWS_AS(cross_validate(data.x, data.labels, 3, cfg), Error);
}
