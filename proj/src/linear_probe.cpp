#include "formbench/linear_probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "formbench/error.hpp"
#include "formbench/metrics.hpp"
#include "formbench/random.hpp"
#include "formbench/seed.hpp"

namespace formbench {

namespace {
constexpr std::size_t kMinBatch = 4;
}

ProbeModel::ProbeModel(std::size_t dim, std::size_t classes)
    : bn_mean(dim, 0.0), bn_var(dim, 1.0), weights(dim, classes, 0.0), bias(classes, 0.0) {}

void ProbeConfig::validate() const {
  if (epochs < 1) throw Error("probe epochs must be >= 1");
  if (folds < 2) throw Error("probe folds must be >= 2");
  if (batch_size < 1) throw Error("probe batch size must be >= 1");
  if (!(base_lr > 0.0)) throw Error("probe base_lr must be positive");
  if (weight_decay < 0.0) throw Error("probe weight_decay must be non-negative");
}

double ProbeConfig::learning_rate(std::size_t epoch) const {
  double lr = base_lr;
  for (double m : decay_milestones) {
    if (epoch >= static_cast<std::size_t>(m * static_cast<double>(epochs))) lr *= decay_factor;
  }
  return lr;
}

ForwardPass forward(const ProbeModel& model, const Matrix<double>& batch, BnMode mode) {
  const std::size_t b = batch.rows();
  const std::size_t d = model.dim();
  const std::size_t k = model.classes();
  if (batch.cols() != d) throw Error("probe input width does not match model");
  ForwardPass pass;
  pass.batch_mean.assign(d, 0.0);
  pass.batch_var.assign(d, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = batch.row(i);
    for (std::size_t t = 0; t < d; ++t) pass.batch_mean[t] += r[t];
  }
  for (double& m : pass.batch_mean) m /= static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = batch.row(i);
    for (std::size_t t = 0; t < d; ++t) {
      const double c = r[t] - pass.batch_mean[t];
      pass.batch_var[t] += c * c;
    }
  }
  for (double& v : pass.batch_var) v /= static_cast<double>(b);

  const auto& mean = mode == BnMode::Train ? pass.batch_mean : model.bn_mean;
  const auto& var = mode == BnMode::Train ? pass.batch_var : model.bn_var;
  std::vector<double> inv_sd(d);
  for (std::size_t t = 0; t < d; ++t) inv_sd[t] = 1.0 / std::sqrt(var[t] + model.epsilon);

  pass.normalized = Matrix<double>(b, d);
  pass.logits = Matrix<double>(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = batch.row(i);
    auto xn = pass.normalized.row(i);
    auto out = pass.logits.row(i);
    std::copy(model.bias.begin(), model.bias.end(), out.begin());
    for (std::size_t t = 0; t < d; ++t) {
      xn[t] = (r[t] - mean[t]) * inv_sd[t];
      const auto w = model.weights.row(t);
      for (std::size_t c = 0; c < k; ++c) out[c] += xn[t] * w[c];
    }
  }
  return pass;
}

Matrix<double> softmax(const Matrix<double>& logits) {
  Matrix<double> p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto r = p.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - m);
      s += v;
    }
    for (double& v : r) v /= s;
  }
  return p;
}

double cross_entropy(const Matrix<double>& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw Error("cross_entropy: label count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto r = logits.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - m);
    total += m + std::log(s) - r[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(logits.rows());
}

LossAndGrads loss_and_grads(const ProbeModel& model, const Matrix<double>& batch,
                            std::span<const int> labels) {
  const std::size_t b = batch.rows();
  const std::size_t d = model.dim();
  const std::size_t k = model.classes();
  if (labels.size() != b) throw Error("loss_and_grads: label count mismatch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) throw Error("probe label out of range");
  }
  LossAndGrads out;
  out.pass = forward(model, batch, BnMode::Train);
  out.loss = cross_entropy(out.pass.logits, labels);

  Matrix<double> dlogits = softmax(out.pass.logits);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    auto r = dlogits.row(i);
    r[static_cast<std::size_t>(labels[i])] -= 1.0;
    for (double& v : r) v *= inv_b;
  }

  auto& g = out.grads;
  g.weights = Matrix<double>(d, k);
  g.bias.assign(k, 0.0);
  Matrix<double> dxn(b, d);
  for (std::size_t i = 0; i < b; ++i) {
    const auto xn = out.pass.normalized.row(i);
    const auto dl = dlogits.row(i);
    for (std::size_t c = 0; c < k; ++c) g.bias[c] += dl[c];
    auto dxr = dxn.row(i);
    for (std::size_t t = 0; t < d; ++t) {
      auto gw = g.weights.row(t);
      const auto w = model.weights.row(t);
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        gw[c] += xn[t] * dl[c];
        acc += dl[c] * w[c];
      }
      dxr[t] = acc;
    }
  }

  // dx = (B*dxn - sum(dxn) - xn * sum(dxn*xn)) / (B * sd)
  g.input = Matrix<double>(b, d);
  for (std::size_t t = 0; t < d; ++t) {
    double sum = 0.0, sum_x = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      sum += dxn(i, t);
      sum_x += dxn(i, t) * out.pass.normalized(i, t);
    }
    const double inv_sd = 1.0 / std::sqrt(out.pass.batch_var[t] + model.epsilon);
    for (std::size_t i = 0; i < b; ++i) {
      g.input(i, t) = inv_sd * inv_b *
                      (static_cast<double>(b) * dxn(i, t) - sum - out.pass.normalized(i, t) * sum_x);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    if (batch.size() < kMinBatch && !batches.empty()) {
      batches.back().insert(batches.back().end(), batch.begin(), batch.end());
    } else {
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

namespace {

Matrix<double> gather(const Matrix<double>& x, std::span<const std::size_t> rows) {
  Matrix<double> out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> theta, std::span<const double> grad, const ProbeConfig& cfg,
            double lr, double decay, std::size_t t) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_epsilon)) + lr * decay * theta[i];
    }
  }
};

}  // namespace

TrainResult train_fold(const Matrix<double>& x, std::span<const int> labels, std::size_t classes,
                       const ProbeConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = x.rows();
  if (n == 0) throw Error("train_fold: empty training split");
  if (labels.size() != n) throw Error("train_fold: label count mismatch");

  TrainResult res;
  res.model = ProbeModel(x.cols(), classes);
  auto& model = res.model;
  res.initial_loss = cross_entropy(forward(model, x, BnMode::Train).logits, labels);

  AdamState adam_w(model.weights.values().size());
  AdamState adam_b(model.bias.size());
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (const auto& rows : make_batches(order, config.batch_size)) {
      const auto batch = gather(x, rows);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(labels[r]);
      const auto lg = loss_and_grads(model, batch, batch_labels);
      epoch_loss += lg.loss * static_cast<double>(rows.size());

      const double bsz = static_cast<double>(rows.size());
      const double unbias = bsz > 1.0 ? bsz / (bsz - 1.0) : 1.0;
      for (std::size_t t = 0; t < model.dim(); ++t) {
        model.bn_mean[t] = (1.0 - model.momentum) * model.bn_mean[t] + model.momentum * lg.pass.batch_mean[t];
        model.bn_var[t] =
            (1.0 - model.momentum) * model.bn_var[t] + model.momentum * lg.pass.batch_var[t] * unbias;
      }
      ++step;
      adam_w.step(model.weights.values(), lg.grads.weights.values(), config, lr, config.weight_decay, step);
      adam_b.step(model.bias, lg.grads.bias, config, lr, 0.0, step);
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  for (double v : model.weights.values()) {
    if (!std::isfinite(v)) throw Error("probe training diverged (non-finite weights)");
  }
  return res;
}

std::vector<int> predict(const ProbeModel& model, const Matrix<double>& x) {
  const auto pass = forward(model, x, BnMode::Eval);
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = pass.logits.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

std::vector<int> stratified_folds(std::span<const int> labels, std::size_t folds,
                                  std::uint64_t seed) {
  if (folds < 2) throw Error("stratified_folds: need at least 2 folds");
  if (labels.size() < folds) {
    throw Error("cannot split " + std::to_string(labels.size()) + " samples into " +
                std::to_string(folds) + " folds: a fold would have zero samples");
  }
  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  Rng rng(seed);
  std::vector<int> fold_of(labels.size(), -1);
  std::size_t cursor = 0;
  for (auto& m : members) {
    rng.shuffle(m.begin(), m.end());
    for (auto i : m) {
      fold_of[i] = static_cast<int>(cursor % folds);
      ++cursor;
    }
  }
  return fold_of;
}

CrossValidation cross_validate(const Matrix<double>& x, std::span<const int> labels,
                               std::size_t classes, const ProbeConfig& config) {
  config.validate();
  if (labels.size() != x.rows()) throw Error("cross_validate: label count mismatch");
  CrossValidation cv;
  cv.fold_of = stratified_folds(labels, config.folds, seed_derive(config.seed, "probe-split", 0));
  for (std::size_t f = 0; f < config.folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (cv.fold_of[i] == static_cast<int>(f) ? test : train).push_back(i);
    }
    if (test.empty() || train.empty()) {
      throw Error("fold " + std::to_string(f) + " has zero samples");
    }
    std::vector<int> train_labels, test_labels;
    for (auto i : train) train_labels.push_back(labels[i]);
    for (auto i : test) test_labels.push_back(labels[i]);
    const auto fit = train_fold(gather(x, train), train_labels, classes, config,
                                seed_derive(config.seed, "probe-fold", f));
    cv.fold_accuracies.push_back(accuracy(test_labels, predict(fit.model, gather(x, test))));
  }
  cv.mean_accuracy = std::accumulate(cv.fold_accuracies.begin(), cv.fold_accuracies.end(), 0.0) /
                     static_cast<double>(cv.fold_accuracies.size());
  return cv;
}

CrossValidation cross_validate(const EmbeddingSet& embeddings, const LabelTable& labels,
                               const ProbeConfig& config) {
  const auto aligned = align(embeddings, labels);
  return cross_validate(aligned.features, aligned.labels, labels.num_classes(), config);
}

}  // namespace formbench
