#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaxmia/attacks.hpp"
#include "relaxmia/data.hpp"
#include "relaxmia/nn.hpp"
#include "relaxmia/relaxloss.hpp"

namespace relaxmia::harness {

/// Every setting of one experiment. Serialised as the run manifest, from
/// which a run can be reproduced byte for byte.
struct ExperimentConfig {
  // Dataset.
  std::string dataset = "synthetic";  // synthetic | csv
  std::string dataset_path;
  std::string label_col = "label";
  data::FeatureKind feature_kind = data::FeatureKind::kRealValued;
  data::SyntheticMode synthetic_mode = data::SyntheticMode::kGaussianBlobs;
  std::size_t classes = 20;
  std::size_t dim = 50;
  std::size_t per_class = 500;
  double class_separation = 2.0;
  double noise_sigma = 1.0;

  // Model.
  std::vector<std::size_t> hidden = {128};
  nn::Activation activation = nn::Activation::kRelu;
  double dropout = 0.0;

  // Method.
  relax::Method method = relax::Method::kVanilla;
  double alpha = 1.0;
  double ls_alpha = 0.0;
  double cp_alpha = 0.0;
  relax::FlattenScope flatten_scope = relax::FlattenScope::kAllSamples;
  std::optional<double> gt_cap;
  std::vector<int> checkpoint_epochs;

  // Optimisation.
  int epochs = 40;
  std::size_t batch_size = 128;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<nn::LrMilestone> lr_schedule = {{30, 0.1}};

  // Attacks.
  std::vector<attacks::AttackKind> attack_list = attacks::all_attacks();
  attacks::NnFeatureKind nn_feature = attacks::NnFeatureKind::kLogits;
  int nn_epochs = 40;
  double nn_lr = 0.05;

  // One seed per concern.
  std::uint64_t seed_data = 1;
  std::uint64_t seed_init = 2;
  std::uint64_t seed_batch = 3;
  std::uint64_t seed_attack = 4;

  std::string output_dir = "run";

  void validate() const;
};

/// Applies one `key = value` setting. Unknown keys raise ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses the plain-text config format: one `key = value` per line, `#` comments.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Full manifest listing every key; parse_config(to_manifest(c)) == c.
std::string to_manifest(const ExperimentConfig& config);

/// Documentation of every key (used by `--help-config`).
std::string config_schema();

struct PreparedData {
  data::Dataset dataset;
  data::SplitPlan split;
};

PreparedData prepare_data(const ExperimentConfig& config);

enum class ModelRole : std::uint64_t { kTarget = 0, kShadow = 1 };

/// Freshly initialised classifier for the given role.
nn::MlpModel initial_model(const ExperimentConfig& config, const data::Dataset& dataset, ModelRole role);

relax::TrainOptions train_options(const ExperimentConfig& config, ModelRole role);

/// Training options an attacker without knowledge of the defence uses for shadow models.
ExperimentConfig undefended_variant(const ExperimentConfig& config);

attacks::AttackSuiteOptions attack_options(const ExperimentConfig& config);

struct TrainedRun {
  PreparedData data;
  relax::TrainResult result;
};

TrainedRun train_target(const ExperimentConfig& config);

/// Writes manifest.txt, checkpoint.json, trace.csv, checkpoints/epoch_NNN.json.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const relax::TrainResult& result);

/// `train`: trains the target and writes the run directory.
TrainedRun cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// `attack`: writes attack_report.csv (or attack_report_adaptive.csv) into the run directory.
std::vector<attacks::AttackResult> cmd_attack(const std::filesystem::path& run_dir,
                                              const std::vector<attacks::AttackKind>& attack_list,
                                              bool adaptive);

/// Attacks a trained target in memory. Non-adaptive attacks calibrate on an
/// undefended shadow model; adaptive ones on a shadow trained like the target.
attacks::AdaptiveReport attack_run(const ExperimentConfig& config, const PreparedData& data,
                                   const nn::MlpModel& target,
                                   const std::vector<attacks::AttackKind>& attack_list, bool adaptive);

struct SweepRow {
  std::string method;
  double value = 0.0;
  std::string attack_name;
  double attack_auc = 0.0;
  double attack_accuracy = 0.0;
  double test_acc_top1 = 0.0;
  double test_acc_top5 = 0.0;
  double train_loss_mean = 0.0;
  double train_loss_var = 0.0;
  double generalization_gap = 0.0;
  std::string error;  // empty on success
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool complete() const;
  std::string to_csv() const;
};

inline constexpr std::string_view kSweepCsvHeader =
    "method,value,attack_name,attack_auc,attack_accuracy,test_acc_top1,test_acc_top5,"
    "train_loss_mean,train_loss_var,generalization_gap,error";

/// Names accepted by cmd_sweep: relaxloss, label_smoothing, confidence_penalty,
/// dropout, early_stopping, vanilla (values ignored beyond their count).
struct SweepOptions {
  std::string method = "relaxloss";
  std::vector<double> values;
  std::size_t jobs = 1;
  /// When set, every run directory is written below it.
  std::optional<std::filesystem::path> runs_dir;
};

/// `sweep`: independent seeded runs per value, attacked with the configured list.
SweepResult cmd_sweep(const ExperimentConfig& config, const SweepOptions& options);

/// Config of one sweep point.
ExperimentConfig sweep_point(const ExperimentConfig& base, std::string_view method, double value);

struct AnalyzeOptions {
  std::size_t bins = 50;
  double hist_lo = 0.0;
  double hist_hi = 5.0;
  bool correlation = true;
};

/// `analyze`: loss statistics, histograms, Gaussian fits, bound report per run
/// and the cross-run correlation of training-loss variance with mean
/// black-box attack AUC. Returns the JSON report text.
std::string cmd_analyze(const std::vector<std::filesystem::path>& run_dirs, const AnalyzeOptions& options);

struct GridSpec {
  double x_min = -3.0;
  double x_max = 3.0;
  double y_min = -3.0;
  double y_max = 3.0;
  std::size_t nx = 10;
  std::size_t ny = 10;
};

/// Parses "xmin,xmax,ymin,ymax,nx,ny".
GridSpec parse_grid(std::string_view text);

/// `boundary`: posteriors of a 2-input model on a regular grid as CSV
/// (x, y, score_0..score_{C-1}, argmax).
std::string boundary_csv(const nn::MlpModel& model, const GridSpec& grid);
std::string cmd_boundary(const std::filesystem::path& run_dir, const GridSpec& grid);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace relaxmia::harness
