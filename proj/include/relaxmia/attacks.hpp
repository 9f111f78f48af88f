#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaxmia/analysis.hpp"
#include "relaxmia/data.hpp"
#include "relaxmia/nn.hpp"
#include "relaxmia/relaxloss.hpp"

namespace relaxmia::attacks {

enum class AttackKind { kLoss, kEntropy, kMEntropy, kNn, kGradXL1, kGradXL2, kGradWL1, kGradWL2 };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack(std::string_view name);
/// Parses a comma-separated list; "all" expands to every attack.
std::vector<AttackKind> parse_attack_list(std::string_view text);
std::vector<AttackKind> all_attacks();
/// Loss, Entropy, M-Entropy and NN only use the model's output.
bool is_black_box(AttackKind kind);

// Score functions. Every score is "higher = more member-like".

/// -CE(p, y).
std::vector<double> loss_scores(const nn::Posteriors& posteriors, std::span<const int> labels);
/// -H(p), with 0 log 0 = 0.
std::vector<double> entropy_scores(const nn::Posteriors& posteriors);
/// -Mentr(p, y), Mentr = -(1 - p_y) log p_y - sum_{c != y} p_c log(1 - p_c).
std::vector<double> m_entropy_scores(const nn::Posteriors& posteriors, std::span<const int> labels);

enum class GradNormKind { kXL1, kXL2, kWL1, kWL2 };

/// -||grad||, taken from precomputed per-sample gradient norms.
std::vector<double> grad_norm_scores(std::span<const nn::GradNorms> norms, GradNormKind kind);

std::vector<double> score_loss(const nn::MlpModel& model, const Matrix& inputs, std::span<const int> labels);
std::vector<double> score_entropy(const nn::MlpModel& model, const Matrix& inputs);
std::vector<double> score_m_entropy(const nn::MlpModel& model, const Matrix& inputs,
                                    std::span<const int> labels);
std::vector<double> score_grad_norm(const nn::MlpModel& model, const Matrix& inputs,
                                    std::span<const int> labels, GradNormKind kind);

/// Constant threshold: predict member iff score > threshold.
struct ThresholdRule {
  double threshold = 0.0;
  std::string attack_name;
  /// Balanced accuracy reached on the calibration data.
  double shadow_accuracy = 0.5;
  /// Set when no candidate beats chance (all scores identical).
  bool degenerate = false;
};

/// Chooses the candidate threshold (midpoints of adjacent distinct pooled
/// scores plus one sentinel on each side) with the best balanced accuracy;
/// ties go to the smallest threshold.
ThresholdRule select_threshold(std::span<const double> member_scores,
                               std::span<const double> non_member_scores,
                               std::string attack_name = {});

struct AttackEvaluation {
  double accuracy = 0.0;
  bool balanced = true;
};

/// Accuracy of the rule on a query set. Unbalanced sets are rejected with a
/// ConfigError unless allow_unbalanced is set.
AttackEvaluation evaluate_attack(const ThresholdRule& rule, const MembershipScoreSet& query,
                                 bool allow_unbalanced = false);

enum class NnFeatureKind { kLogits, kPosteriors };

std::string_view to_string(NnFeatureKind kind);
NnFeatureKind parse_nn_feature_kind(std::string_view name);

struct NnAttackOptions {
  std::vector<std::size_t> hidden = {64, 64};
  int epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  /// Fraction of shadow member / non-member features held out for validation.
  double holdout_fraction = 0.2;
  NnFeatureKind feature_kind = NnFeatureKind::kLogits;
  std::uint64_t seed = 0;
};

struct NnAttackModel {
  nn::MlpModel classifier;  // C inputs, 2 outputs (index 1 = member)
  NnFeatureKind feature_kind = NnFeatureKind::kLogits;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  double validation_auc = 0.5;
  double validation_accuracy = 0.5;
};

/// Descending-sorted logits or posteriors of the model on the inputs.
Matrix nn_attack_features(const nn::MlpModel& model, const Matrix& inputs, NnFeatureKind kind);

/// Trains the attack classifier on shadow-train (member) vs shadow-test
/// (non-member) features. The surrogate fold, when non-empty, adds held-out
/// non-member features to the validation set.
NnAttackModel train_nn_attack(const nn::MlpModel& shadow_model, const data::Dataset& dataset,
                              std::span<const std::size_t> shadow_train,
                              std::span<const std::size_t> shadow_test,
                              std::span<const std::size_t> surrogate, const NnAttackOptions& options);

/// Classifier member probability for each input row of the target model.
std::vector<double> nn_attack_scores(const NnAttackModel& attack, const nn::MlpModel& target,
                                     const Matrix& inputs);

struct QuerySet {
  std::vector<std::size_t> members;
  std::vector<std::size_t> non_members;
};

/// Target-train vs target-test, the larger truncated to the smaller's size by
/// a seeded subsample (kept in ascending index order).
QuerySet balanced_query(const data::SplitPlan& split, std::uint64_t seed);

struct AttackResult {
  std::string attack_name;
  double threshold = 0.0;
  double shadow_accuracy = 0.0;
  double target_accuracy = 0.0;
  double target_auc = 0.0;
  bool adaptive = false;
  bool degenerate = false;
  std::vector<double> per_class_auc_top10;
};

struct AttackSuiteOptions {
  std::uint64_t seed = 0;
  NnAttackOptions nn;
};

/// Calibrates each attack on the shadow model and evaluates it on the
/// target's balanced query set.
std::vector<AttackResult> run_attack_suite(const nn::MlpModel& target, const nn::MlpModel& shadow,
                                           const data::Dataset& dataset, const data::SplitPlan& split,
                                           std::span<const AttackKind> attacks,
                                           const AttackSuiteOptions& options, bool adaptive);

struct AdaptiveReport {
  std::vector<AttackResult> results;
  nn::MlpModel shadow_model;
  double max_accuracy = 0.0;
  std::string max_attack;
};

/// Trains a shadow model from `shadow_init` with the defender's exact training
/// options on the shadow folds, then runs the suite against the target.
AdaptiveReport run_adaptive_attack(const nn::MlpModel& target, const nn::MlpModel& shadow_init,
                                   const relax::TrainOptions& defense, const data::Dataset& dataset,
                                   const data::SplitPlan& split, std::span<const AttackKind> attacks,
                                   const AttackSuiteOptions& options, bool adaptive = true);

/// Per-class AUCs sorted descending, at most `limit` of them.
std::vector<double> per_class_auc_top(const MembershipScoreSet& set, std::size_t limit = 10);

inline constexpr std::string_view kAttackCsvHeader =
    "attack_name,threshold,shadow_accuracy,target_accuracy,target_auc,adaptive_flag,per_class_auc_top10";

std::string attack_report_csv(std::span<const AttackResult> results);
std::vector<AttackResult> parse_attack_report_csv(std::string_view text);

}  // namespace relaxmia::attacks
