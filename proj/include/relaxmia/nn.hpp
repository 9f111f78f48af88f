#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaxmia/common.hpp"

namespace relaxmia::nn {

/// Floor applied to probabilities before any logarithm.
inline constexpr double kLogClamp = 1e-12;

enum class Activation { kRelu, kTanh };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

/// Dense softmax classifier. Layer l maps layer_dims[l] -> layer_dims[l + 1];
/// weights[l] is stored (in x out) so that logits = x * W + b.
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kRelu;
  /// Applied only to the output of the last hidden layer.
  double dropout_rate = 0.0;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  /// Bumped by every parameter update; lets backward reject stale caches.
  std::uint64_t revision = 0;

  /// Fan-in scaled uniform initialisation U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpModel create(std::vector<std::size_t> layer_dims, Activation activation,
                         double dropout_rate, std::uint64_t seed);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t num_classes() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  /// Throws DimensionError / ConfigError if the invariants do not hold.
  void validate() const;

  /// Parameter equality; the revision counter is ignored.
  bool same_parameters(const MlpModel& other) const;
};

/// Row-stochastic matrix of predicted class probabilities.
class Posteriors {
 public:
  Posteriors() = default;

  /// Numerically stable row-wise softmax.
  static Posteriors softmax(const Matrix& logits);
  /// Validates that every row is a probability vector (sum 1 within 1e-9).
  static Posteriors from_probabilities(Matrix probabilities);

  const Matrix& values() const { return values_; }
  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
  std::span<const double> row(std::size_t r) const { return values_.row(r); }

 private:
  explicit Posteriors(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// Intermediate activations retained by forward for backward.
struct ForwardCache {
  std::uint64_t revision = 0;
  std::vector<std::size_t> layer_dims;
  /// inputs[l] is the input of layer l (post-activation, post-dropout).
  std::vector<Matrix> inputs;
  /// Hidden pre-activations, one per hidden layer.
  std::vector<Matrix> pre_activations;
  /// Inverted-dropout multipliers for the last hidden layer; empty when unused.
  Matrix dropout_mask;

  std::size_t batch_size() const { return inputs.empty() ? 0 : inputs.front().rows(); }
};

struct ForwardResult {
  Matrix logits;
  Posteriors posteriors;
  ForwardCache cache;
};

ForwardResult forward(const MlpModel& model, const Matrix& inputs, bool train_mode = false,
                      std::uint64_t rng_seed = 0);

/// Eval-mode posteriors without retaining a cache.
Posteriors predict(const MlpModel& model, const Matrix& inputs);
Matrix predict_logits(const MlpModel& model, const Matrix& inputs);

/// Per-sample -sum_c t^c log max(p^c, kLogClamp).
std::vector<double> per_sample_cross_entropy(const Posteriors& posteriors, const Matrix& targets);
double cross_entropy(const Posteriors& posteriors, const Matrix& targets);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const MlpModel& model);
  double l1_norm() const;
  double l2_norm() const;
  bool all_finite() const;
};

struct BackpropResult {
  Gradients gradients;
  /// d loss / d inputs; only filled when requested.
  Matrix input_gradient;
};

/// Backpropagates an arbitrary gradient with respect to the logits.
BackpropResult backpropagate(const MlpModel& model, const ForwardCache& cache,
                             const Matrix& logit_gradient, bool with_input_gradient = false);

/// Exact gradient of the batch-mean cross-entropy. Targets are treated as constants.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Posteriors& posteriors,
                   const Matrix& targets);

struct LrMilestone {
  int epoch = 0;
  double multiplier = 1.0;
};

struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  /// Multipliers accumulate from their epoch onwards (multi-step decay).
  std::vector<LrMilestone> lr_schedule;
  /// Current 1-based epoch; selects the scheduled rate.
  int epoch = 1;
  Gradients velocity;

  double current_rate() const;
  void validate() const;
};

enum class StepDirection { kDescent, kAscent };

/// Descent: SGD with momentum and weight decay. Ascent: theta += lr * grad, no
/// momentum and no decay. Throws NumericError on non-finite gradients.
void sgd_step(MlpModel& model, OptimizerState& state, const Gradients& gradients,
              StepDirection direction);

struct GradNorms {
  double x_l1 = 0.0;
  double x_l2 = 0.0;
  double w_l1 = 0.0;
  double w_l2 = 0.0;
};

/// Norms of each sample's own cross-entropy gradient, w.r.t. its input and
/// w.r.t. all parameters. Evaluated in eval mode.
std::vector<GradNorms> per_sample_grad_norms(const MlpModel& model, const Matrix& inputs,
                                             std::span<const int> labels);

/// Versioned JSON checkpoint.
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(std::string_view text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace relaxmia::nn
