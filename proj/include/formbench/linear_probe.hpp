#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "formbench/dataset.hpp"
#include "formbench/matrix.hpp"

namespace formbench {

/// Batch normalisation (no affine parameters) followed by a fully connected
/// layer. Parameters and statistics are kept in double precision.
struct ProbeModel {
  std::vector<double> bn_mean;
  std::vector<double> bn_var;
  Matrix<double> weights;  // D x K
  std::vector<double> bias;
  double epsilon = 1e-5;
  double momentum = 0.1;

  ProbeModel() = default;
  /// Zero weights and bias; running mean 0 and variance 1.
  ProbeModel(std::size_t dim, std::size_t classes);

  std::size_t dim() const noexcept { return weights.rows(); }
  std::size_t classes() const noexcept { return weights.cols(); }
};

struct ProbeConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double base_lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Fractions of `epochs` after which the learning rate is multiplied by
  /// decay_factor.
  std::vector<double> decay_milestones{0.6, 0.8};
  double decay_factor = 0.1;
  std::size_t folds = 10;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate(std::size_t epoch) const;
};

enum class BnMode { Train, Eval };

struct ForwardPass {
  Matrix<double> normalized;
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased
  Matrix<double> logits;
};

/// Train mode normalises with batch statistics, eval mode with the running
/// statistics. Does not modify the model.
ForwardPass forward(const ProbeModel& model, const Matrix<double>& batch, BnMode mode);

/// Row-wise softmax, stabilised by the row maximum.
Matrix<double> softmax(const Matrix<double>& logits);

/// Mean cross-entropy via log-sum-exp.
double cross_entropy(const Matrix<double>& logits, std::span<const int> labels);

struct ProbeGradients {
  Matrix<double> weights;
  std::vector<double> bias;
  /// Gradient with respect to the raw input batch, through the
  /// batch-statistics normalisation.
  Matrix<double> input;
};

struct LossAndGrads {
  double loss = 0.0;
  ProbeGradients grads;
  ForwardPass pass;
};

/// Train-mode loss and analytic gradients.
LossAndGrads loss_and_grads(const ProbeModel& model, const Matrix<double>& batch,
                            std::span<const int> labels);

/// Splits a shuffled order into batches; a trailing batch smaller than 4 is
/// merged into the previous one.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size);

struct TrainResult {
  ProbeModel model;
  /// Loss of the initial model over the full training split.
  double initial_loss = 0.0;
  /// Sample-weighted mean batch loss for each epoch.
  std::vector<double> epoch_losses;
};

/// AdamW with decoupled weight decay on the weights only; shuffles every
/// epoch with a generator seeded by `seed`.
TrainResult train_fold(const Matrix<double>& x, std::span<const int> labels, std::size_t classes,
                       const ProbeConfig& config, std::uint64_t seed);

std::vector<int> predict(const ProbeModel& model, const Matrix<double>& x);

/// Fold index per sample. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped.
std::vector<int> stratified_folds(std::span<const int> labels, std::size_t folds,
                                  std::uint64_t seed);

struct CrossValidation {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::vector<int> fold_of;
};

CrossValidation cross_validate(const Matrix<double>& x, std::span<const int> labels,
                               std::size_t classes, const ProbeConfig& config);
CrossValidation cross_validate(const EmbeddingSet& embeddings, const LabelTable& labels,
                               const ProbeConfig& config);

}  // namespace formbench
