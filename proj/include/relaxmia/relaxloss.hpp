#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "relaxmia/common.hpp"
#include "relaxmia/data.hpp"
#include "relaxmia/nn.hpp"
#include "relaxmia/trace.hpp"

namespace relaxmia::relax {

enum class FlattenScope { kAllSamples, kIncorrectOnly };

std::string_view to_string(FlattenScope scope);
FlattenScope parse_flatten_scope(std::string_view name);

/// Default ground-truth cap suggested for categorical-record data.
inline constexpr double kDefaultGtCap = 0.3;

struct RelaxConfig {
  /// Target mean training loss. Zero reproduces vanilla training.
  double alpha = 1.0;
  FlattenScope flatten_scope = FlattenScope::kAllSamples;
  std::optional<double> gt_cap;
  int epochs = 30;
  std::size_t batch_size = 128;

  void validate() const;
};

enum class Branch { kDescent, kAscent, kFlatten };

std::string_view to_string(Branch branch);

struct EpochPhaseDecision {
  Branch branch = Branch::kDescent;
  double batch_mean_loss = 0.0;
  int epoch_index = 1;
};

/// Descent iff loss >= alpha; otherwise ascent on even epochs and flattening on odd ones.
EpochPhaseDecision decide_branch(double batch_mean_loss, double alpha, int epoch_index);

/// Flattened targets: keep min(p^gt, cap) on the ground truth and spread the
/// remaining mass evenly over the other classes. With kIncorrectOnly, samples
/// whose argmax already equals the label keep their one-hot target.
Matrix construct_softlabels(const nn::Posteriors& posteriors, std::span<const int> labels,
                            const RelaxConfig& config);

/// A scalar loss and its gradient with respect to the logits (batch mean).
struct LossWithGradient {
  double loss = 0.0;
  Matrix logit_gradient;
};

/// alpha * KL(U || p) + (1 - alpha) * CE, averaged over the batch.
LossWithGradient label_smoothing_loss(const nn::Posteriors& posteriors, std::span<const int> labels,
                                      double alpha_ls);

/// CE - alpha * H(p), averaged over the batch.
LossWithGradient confidence_penalty_loss(const nn::Posteriors& posteriors,
                                         std::span<const int> labels, double alpha_cp);

enum class Method { kVanilla, kRelaxLoss, kLabelSmoothing, kConfidencePenalty };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Work done by one epoch, including the number of forward and backward
/// passes actually issued.
struct EpochStats {
  std::size_t branch_desc = 0;
  std::size_t branch_asc = 0;
  std::size_t branch_flat = 0;
  std::size_t forward_passes = 0;
  std::size_t backward_passes = 0;
};

/// One RelaxLoss epoch over the given sample indices. Each batch shares a
/// single forward pass between the branch decision and the update.
EpochStats relaxloss_epoch(nn::MlpModel& model, nn::OptimizerState& optimizer,
                           const data::Dataset& dataset, std::span<const std::size_t> indices,
                           const RelaxConfig& config, int epoch_index, std::uint64_t batch_seed);

struct TrainOptions {
  Method method = Method::kVanilla;
  RelaxConfig relax;
  double ls_alpha = 0.0;
  double cp_alpha = 0.0;
  nn::OptimizerState optimizer;
  std::vector<int> checkpoint_epochs;
  std::uint64_t batch_seed = 0;

  void validate() const;
};

struct TrainResult {
  nn::MlpModel model;
  TrainTrace trace;
  std::vector<std::pair<int, nn::MlpModel>> checkpoints;
};

/// Thrown when training hits a non-finite loss; carries the trace so far.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainTrace trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

/// Trains from the given initial model. Deterministic in (model, options).
TrainResult train(nn::MlpModel model, const data::Dataset& dataset,
                  std::span<const std::size_t> train_indices,
                  std::span<const std::size_t> test_indices, const TrainOptions& options);

struct SplitEvaluation {
  std::vector<double> losses;
  double loss_mean = 0.0;
  double loss_var = 0.0;
  double acc1 = 0.0;  // percent
  double acc5 = 0.0;  // percent
};

SplitEvaluation evaluate_split(const nn::MlpModel& model, const data::Dataset& dataset,
                               std::span<const std::size_t> indices);

}  // namespace relaxmia::relax
