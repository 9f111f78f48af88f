#include "relaxmia/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "relaxmia/analysis.hpp"

namespace relaxmia::harness {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view text, char sep = ',') {
  std::vector<std::string_view> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  value = trim(value);
  if (!value.empty() && value.front() == '+') value.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  }
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view value) {
  Int out{};
  value = trim(value);
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& render, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += render(items[i]);
  }
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
}

void ExperimentConfig::validate() const {
  if (dataset != "synthetic" && dataset != "csv") throw ConfigError("dataset must be 'synthetic' or 'csv'");
  if (dataset == "csv" && dataset_path.empty()) throw ConfigError("dataset = csv needs dataset_path");
  if (dataset == "synthetic" && (classes < 2 || dim == 0 || per_class == 0)) {
    throw ConfigError("synthetic dataset needs classes >= 2, dim > 0, per_class > 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (attack_list.empty()) throw ConfigError("attack list is empty");
  if (nn_epochs < 1 || !(nn_lr > 0.0)) throw ConfigError("NN attack needs epochs >= 1 and lr > 0");
  train_options(*this, ModelRole::kTarget).validate();
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "dataset") c.dataset = std::string(value);
  else if (key == "dataset_path") c.dataset_path = std::string(value);
  else if (key == "label_col") c.label_col = std::string(value);
  else if (key == "feature_kind") c.feature_kind = data::parse_feature_kind(value);
  else if (key == "synthetic_mode") c.synthetic_mode = data::parse_synthetic_mode(value);
  else if (key == "classes") c.classes = to_int<std::size_t>(key, value);
  else if (key == "dim") c.dim = to_int<std::size_t>(key, value);
  else if (key == "per_class") c.per_class = to_int<std::size_t>(key, value);
  else if (key == "class_separation") c.class_separation = to_double(key, value);
  else if (key == "noise_sigma") c.noise_sigma = to_double(key, value);
  else if (key == "hidden") {
    c.hidden.clear();
    for (auto item : split_list(value)) c.hidden.push_back(to_int<std::size_t>(key, item));
  } else if (key == "activation") c.activation = nn::parse_activation(value);
  else if (key == "dropout") c.dropout = to_double(key, value);
  else if (key == "method") c.method = relax::parse_method(value);
  else if (key == "alpha") c.alpha = to_double(key, value);
  else if (key == "ls_alpha") c.ls_alpha = to_double(key, value);
  else if (key == "cp_alpha") c.cp_alpha = to_double(key, value);
  else if (key == "flatten_scope") c.flatten_scope = relax::parse_flatten_scope(value);
  else if (key == "gt_cap") {
    if (value == "none" || value.empty()) c.gt_cap.reset();
    else if (value == "default") c.gt_cap = relax::kDefaultGtCap;
    else c.gt_cap = to_double(key, value);
  } else if (key == "checkpoint_epochs") {
    c.checkpoint_epochs.clear();
    for (auto item : split_list(value)) c.checkpoint_epochs.push_back(to_int<int>(key, item));
  } else if (key == "epochs") c.epochs = to_int<int>(key, value);
  else if (key == "batch_size") c.batch_size = to_int<std::size_t>(key, value);
  else if (key == "lr") c.lr = to_double(key, value);
  else if (key == "momentum") c.momentum = to_double(key, value);
  else if (key == "weight_decay") c.weight_decay = to_double(key, value);
  else if (key == "lr_schedule") {
    c.lr_schedule.clear();
    for (auto item : split_list(value)) {
      const auto parts = split_list(item, ':');
      if (parts.size() != 2) throw ConfigError("lr_schedule entries look like epoch:multiplier");
      c.lr_schedule.push_back({to_int<int>(key, parts[0]), to_double(key, parts[1])});
    }
  } else if (key == "attacks") c.attack_list = attacks::parse_attack_list(value);
  else if (key == "nn_feature") c.nn_feature = attacks::parse_nn_feature_kind(value);
  else if (key == "nn_epochs") c.nn_epochs = to_int<int>(key, value);
  else if (key == "nn_lr") c.nn_lr = to_double(key, value);
  else if (key == "seed_data") c.seed_data = to_int<std::uint64_t>(key, value);
  else if (key == "seed_init") c.seed_init = to_int<std::uint64_t>(key, value);
  else if (key == "seed_batch") c.seed_batch = to_int<std::uint64_t>(key, value);
  else if (key == "seed_attack") c.seed_attack = to_int<std::uint64_t>(key, value);
  else if (key == "output_dir") c.output_dir = std::string(value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string to_manifest(const ExperimentConfig& c) {
  std::string out = "# relaxmia run manifest\n";
  auto put = [&](std::string_view key, const std::string& value) {
    out += std::string(key) + " = " + value + "\n";
  };
  put("dataset", c.dataset);
  put("dataset_path", c.dataset_path);
  put("label_col", c.label_col);
  put("feature_kind", std::string(data::to_string(c.feature_kind)));
  put("synthetic_mode", std::string(data::to_string(c.synthetic_mode)));
  put("classes", std::to_string(c.classes));
  put("dim", std::to_string(c.dim));
  put("per_class", std::to_string(c.per_class));
  put("class_separation", fmt(c.class_separation));
  put("noise_sigma", fmt(c.noise_sigma));
  put("hidden", join(c.hidden, [](std::size_t v) { return std::to_string(v); }));
  put("activation", std::string(nn::to_string(c.activation)));
  put("dropout", fmt(c.dropout));
  put("method", std::string(relax::to_string(c.method)));
  put("alpha", fmt(c.alpha));
  put("ls_alpha", fmt(c.ls_alpha));
  put("cp_alpha", fmt(c.cp_alpha));
  put("flatten_scope", std::string(relax::to_string(c.flatten_scope)));
  put("gt_cap", c.gt_cap ? fmt(*c.gt_cap) : "none");
  put("checkpoint_epochs", join(c.checkpoint_epochs, [](int v) { return std::to_string(v); }));
  put("epochs", std::to_string(c.epochs));
  put("batch_size", std::to_string(c.batch_size));
  put("lr", fmt(c.lr));
  put("momentum", fmt(c.momentum));
  put("weight_decay", fmt(c.weight_decay));
  put("lr_schedule",
      join(c.lr_schedule, [](const nn::LrMilestone& m) { return std::to_string(m.epoch) + ":" + fmt(m.multiplier); }));
  put("attacks", join(c.attack_list, [](attacks::AttackKind k) { return std::string(attacks::to_string(k)); }));
  put("nn_feature", std::string(attacks::to_string(c.nn_feature)));
  put("nn_epochs", std::to_string(c.nn_epochs));
  put("nn_lr", fmt(c.nn_lr));
  put("seed_data", std::to_string(c.seed_data));
  put("seed_init", std::to_string(c.seed_init));
  put("seed_batch", std::to_string(c.seed_batch));
  put("seed_attack", std::to_string(c.seed_attack));
  put("output_dir", c.output_dir);
  return out;
}

std::string config_schema() {
  return R"(Config file: one `key = value` per line; `#` starts a comment. Flags override file values.

dataset            synthetic | csv
dataset_path       CSV file (dataset = csv)
label_col          label column name in the CSV header
feature_kind       real_valued | binary
synthetic_mode     gaussian_blobs | binary_records
classes, dim, per_class          synthetic task size
class_separation, noise_sigma    synthetic task difficulty
hidden             comma-separated hidden layer widths, e.g. 128 or 256,128
activation         relu | tanh
dropout            dropout rate on the last hidden layer, in [0, 1)
method             vanilla | relaxloss | label_smoothing | confidence_penalty
alpha              RelaxLoss target mean loss (>= 0)
ls_alpha           label-smoothing weight in [0, 1]
cp_alpha           confidence-penalty weight (>= 0)
flatten_scope      all_samples | incorrect_only
gt_cap             none | default (0.3) | value in (0, 1]
checkpoint_epochs  comma-separated epochs at which to save extra checkpoints
epochs, batch_size, lr, momentum, weight_decay
lr_schedule        comma-separated epoch:multiplier milestones, e.g. 30:0.1
attacks            all | comma list of loss,entropy,m_entropy,nn,grad_x_l1,grad_x_l2,grad_w_l1,grad_w_l2
nn_feature         logits | posteriors (NN attack input, sorted descending)
nn_epochs, nn_lr   NN attack training
seed_data, seed_init, seed_batch, seed_attack    one seed per concern
output_dir         run directory
)";
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  if (config.dataset == "csv") {
    out.dataset = data::load_csv(config.dataset_path, config.label_col, config.feature_kind);
  } else {
    data::SyntheticSpec spec;
    spec.classes = config.classes;
    spec.dim = config.dim;
    spec.per_class = config.per_class;
    spec.class_separation = config.class_separation;
    spec.noise_sigma = config.noise_sigma;
    spec.mode = config.synthetic_mode;
    spec.seed = config.seed_data;
    out.dataset = data::generate_synthetic(spec);
  }
  out.dataset.validate();
  out.split = data::five_fold_split(out.dataset, mix_seed(config.seed_data, 0x5b117));
  return out;
}

nn::MlpModel initial_model(const ExperimentConfig& config, const data::Dataset& dataset, ModelRole role) {
  std::vector<std::size_t> dims{dataset.dim()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(dataset.num_classes);
  return nn::MlpModel::create(dims, config.activation, config.dropout,
                              mix_seed(config.seed_init, static_cast<std::uint64_t>(role)));
}

relax::TrainOptions train_options(const ExperimentConfig& config, ModelRole role) {
  relax::TrainOptions o;
  o.method = config.method;
  o.relax.alpha = config.alpha;
  o.relax.flatten_scope = config.flatten_scope;
  o.relax.gt_cap = config.gt_cap;
  o.relax.epochs = config.epochs;
  o.relax.batch_size = config.batch_size;
  o.ls_alpha = config.ls_alpha;
  o.cp_alpha = config.cp_alpha;
  o.optimizer.learning_rate = config.lr;
  o.optimizer.momentum = config.momentum;
  o.optimizer.weight_decay = config.weight_decay;
  o.optimizer.lr_schedule = config.lr_schedule;
  if (role == ModelRole::kTarget) o.checkpoint_epochs = config.checkpoint_epochs;
  o.batch_seed = mix_seed(config.seed_batch, static_cast<std::uint64_t>(role));
  return o;
}

ExperimentConfig undefended_variant(const ExperimentConfig& config) {
  ExperimentConfig plain = config;
  plain.method = relax::Method::kVanilla;
  plain.dropout = 0.0;
  plain.checkpoint_epochs.clear();
  return plain;
}

attacks::AttackSuiteOptions attack_options(const ExperimentConfig& config) {
  attacks::AttackSuiteOptions o;
  o.seed = config.seed_attack;
  o.nn.feature_kind = config.nn_feature;
  o.nn.epochs = config.nn_epochs;
  o.nn.learning_rate = config.nn_lr;
  return o;
}

TrainedRun train_target(const ExperimentConfig& config) {
  config.validate();
  TrainedRun run;
  run.data = prepare_data(config);
  const auto& split = run.data.split;
  run.result = relax::train(initial_model(config, run.data.dataset, ModelRole::kTarget), run.data.dataset,
                            split.fold(data::FoldRole::kTargetTrain), split.fold(data::FoldRole::kTargetTest),
                            train_options(config, ModelRole::kTarget));
  return run;
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const relax::TrainResult& result) {
  std::filesystem::create_directories(dir);
  ExperimentConfig recorded = config;
  recorded.output_dir = dir.string();
  write_file(dir / "manifest.txt", to_manifest(recorded));
  write_file(dir / "checkpoint.json", nn::model_to_json(result.model));
  write_file(dir / "trace.csv", result.trace.to_csv());
  for (const auto& [epoch, model] : result.checkpoints) {
    char name[64];
    std::snprintf(name, sizeof(name), "epoch_%03d.json", epoch);
    write_file(dir / "checkpoints" / name, nn::model_to_json(model));
  }
}

TrainedRun cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  TrainedRun run = train_target(config);
  write_run(out_dir, config, run.result);
  return run;
}

attacks::AdaptiveReport attack_run(const ExperimentConfig& config, const PreparedData& data,
                                   const nn::MlpModel& target,
                                   const std::vector<attacks::AttackKind>& attack_list, bool adaptive) {
  const ExperimentConfig shadow_config = adaptive ? config : undefended_variant(config);
  return attacks::run_adaptive_attack(target, initial_model(shadow_config, data.dataset, ModelRole::kShadow),
                                      train_options(shadow_config, ModelRole::kShadow), data.dataset, data.split,
                                      attack_list, attack_options(config), adaptive);
}

std::vector<attacks::AttackResult> cmd_attack(const std::filesystem::path& run_dir,
                                              const std::vector<attacks::AttackKind>& attack_list,
                                              bool adaptive) {
  for (const char* required : {"manifest.txt", "checkpoint.json"}) {
    if (!std::filesystem::exists(run_dir / required)) {
      throw Error("run directory " + run_dir.string() + " lacks " + required);
    }
  }
  const ExperimentConfig config = load_config(run_dir / "manifest.txt");
  config.validate();
  const PreparedData data = prepare_data(config);
  const nn::MlpModel target = nn::load_model(run_dir / "checkpoint.json");
  const auto report = attack_run(config, data, target, attack_list, adaptive);
  write_file(run_dir / (adaptive ? "attack_report_adaptive.csv" : "attack_report.csv"),
             attacks::attack_report_csv(report.results));
  return report.results;
}

bool SweepResult::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.error.empty(); });
}

std::string SweepResult::to_csv() const {
  std::string out(kSweepCsvHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += r.method + "," + fmt(r.value) + "," + r.attack_name + "," + fmt(r.attack_auc) + "," +
           fmt(r.attack_accuracy) + "," + fmt(r.test_acc_top1) + "," + fmt(r.test_acc_top5) + "," +
           fmt(r.train_loss_mean) + "," + fmt(r.train_loss_var) + "," + fmt(r.generalization_gap) + "," +
           r.error + "\n";
  }
  return out;
}

ExperimentConfig sweep_point(const ExperimentConfig& base, std::string_view method, double value) {
  ExperimentConfig c = base;
  if (method == "relaxloss") {
    c.method = relax::Method::kRelaxLoss;
    c.alpha = value;
  } else if (method == "label_smoothing") {
    c.method = relax::Method::kLabelSmoothing;
    c.ls_alpha = value;
  } else if (method == "confidence_penalty") {
    c.method = relax::Method::kConfidencePenalty;
    c.cp_alpha = value;
  } else if (method == "dropout") {
    c.method = relax::Method::kVanilla;
    c.dropout = value;
  } else if (method == "vanilla") {
    c.method = relax::Method::kVanilla;
  } else {
    throw ConfigError("unknown sweep method '" + std::string(method) + "'");
  }
  return c;
}

namespace {

std::vector<SweepRow> rows_for(const std::string& method, double value, const EpochRecord& record,
                               const std::vector<attacks::AttackResult>& results) {
  std::vector<SweepRow> rows;
  for (const auto& a : results) {
    SweepRow r;
    r.method = method;
    r.value = value;
    r.attack_name = a.attack_name;
    r.attack_auc = a.target_auc;
    r.attack_accuracy = a.target_accuracy;
    r.test_acc_top1 = record.test_acc1;
    r.test_acc_top5 = record.test_acc5;
    r.train_loss_mean = record.train_loss_mean;
    r.train_loss_var = record.train_loss_var;
    r.generalization_gap = record.train_acc1 - record.test_acc1;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SweepRow> error_rows(const std::string& method, double value,
                                 const std::vector<attacks::AttackKind>& attack_list, const std::string& what) {
  std::string message = what;
  std::replace(message.begin(), message.end(), ',', ';');
  std::replace(message.begin(), message.end(), '\n', ' ');
  std::vector<SweepRow> rows;
  for (auto kind : attack_list) {
    SweepRow r;
    r.method = method;
    r.value = value;
    r.attack_name = std::string(attacks::to_string(kind));
    r.attack_auc = r.attack_accuracy = std::nan("");
    r.test_acc_top1 = r.test_acc_top5 = r.train_loss_mean = r.train_loss_var = r.generalization_gap = std::nan("");
    r.error = "ERROR: " + message;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string value_dir_name(double value) {
  std::string s = "value_" + fmt(value);
  std::replace(s.begin(), s.end(), '.', 'p');
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

}  // namespace

SweepResult cmd_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  if (options.values.empty()) throw ConfigError("sweep needs a non-empty value list");
  if (options.method != "early_stopping") sweep_point(config, options.method, 0.0);
  config.validate();
  std::vector<double> values = options.values;
  std::sort(values.begin(), values.end());

  const PreparedData data = prepare_data(config);
  // The non-adaptive shadow model is shared by every sweep point.
  const ExperimentConfig plain = undefended_variant(config);
  const auto& split = data.split;
  const nn::MlpModel shadow =
      relax::train(initial_model(plain, data.dataset, ModelRole::kShadow), data.dataset,
                   split.fold(data::FoldRole::kShadowTrain), split.fold(data::FoldRole::kShadowTest),
                   train_options(plain, ModelRole::kShadow))
          .model;
  const auto suite_options = attack_options(config);
  auto attack = [&](const nn::MlpModel& target) {
    return attacks::run_attack_suite(target, shadow, data.dataset, split, config.attack_list, suite_options, false);
  };

  std::vector<std::vector<SweepRow>> per_value(values.size());

  if (options.method == "early_stopping") {
    ExperimentConfig c = config;
    c.method = relax::Method::kVanilla;
    c.checkpoint_epochs.clear();
    for (double v : values) {
      const double rounded = std::round(v);
      if (rounded != v) throw ConfigError("early_stopping values are epoch numbers");
      c.checkpoint_epochs.push_back(static_cast<int>(rounded));
    }
    c.validate();
    const auto result = relax::train(initial_model(c, data.dataset, ModelRole::kTarget), data.dataset,
                                     split.fold(data::FoldRole::kTargetTrain),
                                     split.fold(data::FoldRole::kTargetTest), train_options(c, ModelRole::kTarget));
    if (options.runs_dir) write_run(*options.runs_dir / "early_stopping", c, result);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const int epoch = c.checkpoint_epochs[i];
      const auto it = std::find_if(result.checkpoints.begin(), result.checkpoints.end(),
                                   [&](const auto& cp) { return cp.first == epoch; });
      const auto results = attack(it->second);
      per_value[i] = rows_for(options.method, values[i], result.trace.epochs[static_cast<std::size_t>(epoch - 1)], results);
      if (options.runs_dir) {
        write_file(*options.runs_dir / "early_stopping" / ("attack_report_epoch_" + std::to_string(epoch) + ".csv"),
                   attacks::attack_report_csv(results));
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&]() {
      for (std::size_t i = next++; i < values.size(); i = next++) {
        try {
          const ExperimentConfig c = sweep_point(config, options.method, values[i]);
          c.validate();
          const auto result = relax::train(initial_model(c, data.dataset, ModelRole::kTarget), data.dataset,
                                           split.fold(data::FoldRole::kTargetTrain),
                                           split.fold(data::FoldRole::kTargetTest),
                                           train_options(c, ModelRole::kTarget));
          const auto results = attack(result.model);
          per_value[i] = rows_for(options.method, values[i], result.trace.epochs.back(), results);
          if (options.runs_dir) {
            const auto dir = *options.runs_dir / value_dir_name(values[i]);
            std::lock_guard lock(io);
            write_run(dir, c, result);
            write_file(dir / "attack_report.csv", attacks::attack_report_csv(results));
          }
        } catch (const std::exception& e) {
          per_value[i] = error_rows(options.method, values[i], config.attack_list, e.what());
        }
      }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, values.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  SweepResult sweep;
  for (auto& rows : per_value) {
    for (auto& r : rows) sweep.rows.push_back(std::move(r));
  }
  return sweep;
}

namespace {

json stats_json(const analysis::LossStats& s) {
  return {{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}};
}

json histogram_json(const analysis::Histogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}, {"underflow", h.underflow}, {"overflow", h.overflow}};
}

}  // namespace

std::string cmd_analyze(const std::vector<std::filesystem::path>& run_dirs, const AnalyzeOptions& options) {
  if (run_dirs.empty()) throw ConfigError("analyze needs at least one run directory");
  if (options.correlation && run_dirs.size() < 2) {
    throw ConfigError("correlation across runs needs at least 2 run directories");
  }
  json report;
  report["variance_convention"] = "population";
  report["runs"] = json::array();
  std::vector<double> variances;
  std::vector<double> black_box_aucs;

  for (const auto& dir : run_dirs) {
    const ExperimentConfig config = load_config(dir / "manifest.txt");
    const PreparedData data = prepare_data(config);
    const nn::MlpModel model = nn::load_model(dir / "checkpoint.json");
    const auto& split = data.split;
    const auto train_eval = relax::evaluate_split(model, data.dataset, split.fold(data::FoldRole::kTargetTrain));
    const auto test_eval = relax::evaluate_split(model, data.dataset, split.fold(data::FoldRole::kTargetTest));
    const auto train_stats = analysis::loss_stats(train_eval.losses);
    const auto test_stats = analysis::loss_stats(test_eval.losses);
    const auto member_fit = analysis::fit_gaussian(train_eval.losses);
    const auto non_member_fit = analysis::fit_gaussian(test_eval.losses);
    const auto bounds = analysis::bound_report(member_fit, non_member_fit);

    std::vector<double> member_scores = train_eval.losses;
    std::vector<double> non_member_scores = test_eval.losses;
    for (double& v : member_scores) v = -v;
    for (double& v : non_member_scores) v = -v;
    const double empirical_auc = analysis::compute_auc(member_scores, non_member_scores);

    json run;
    run["run"] = dir.string();
    run["method"] = std::string(relax::to_string(config.method));
    run["alpha"] = config.alpha;
    run["loss_stats"] = {{"train", stats_json(train_stats)}, {"test", stats_json(test_stats)}};
    run["gaussian_fits"] = {{"train", {{"mu", member_fit.mu}, {"sigma", member_fit.sigma}}},
                            {"test", {{"mu", non_member_fit.mu}, {"sigma", non_member_fit.sigma}}}};
    run["bound_report"] = {{"d_hellinger", bounds.d_hellinger}, {"d_tv_upper", bounds.d_tv_upper},
                           {"auc_upper", bounds.auc_upper},     {"term_star", bounds.term_star},
                           {"term_dstar", bounds.term_dstar},   {"c_ratio", bounds.c_ratio}};
    run["empirical_loss_auc"] = empirical_auc;
    run["histograms"] = {
        {"train", histogram_json(analysis::loss_histogram(train_eval.losses, options.bins, options.hist_lo, options.hist_hi))},
        {"test", histogram_json(analysis::loss_histogram(test_eval.losses, options.bins, options.hist_lo, options.hist_hi))}};

    json attack_json = json::object();
    std::vector<double> bb;
    if (std::filesystem::exists(dir / "attack_report.csv")) {
      for (const auto& r : attacks::parse_attack_report_csv(read_file(dir / "attack_report.csv"))) {
        attack_json[r.attack_name] = {{"auc", r.target_auc}, {"accuracy", r.target_accuracy}};
        if (attacks::is_black_box(attacks::parse_attack(r.attack_name))) bb.push_back(r.target_auc);
      }
    } else {
      // Without a calibrated report, fall back to the threshold-free AUCs of the score attacks.
      const attacks::QuerySet query = attacks::balanced_query(split, config.seed_attack);
      const auto members = nn::predict(model, data.dataset.features_of(query.members));
      const auto non_members = nn::predict(model, data.dataset.features_of(query.non_members));
      const auto ml = data.dataset.labels_of(query.members);
      const auto nl = data.dataset.labels_of(query.non_members);
      const std::pair<std::string, double> aucs[] = {
          {"loss", analysis::compute_auc(attacks::loss_scores(members, ml), attacks::loss_scores(non_members, nl))},
          {"entropy", analysis::compute_auc(attacks::entropy_scores(members), attacks::entropy_scores(non_members))},
          {"m_entropy",
           analysis::compute_auc(attacks::m_entropy_scores(members, ml), attacks::m_entropy_scores(non_members, nl))}};
      for (const auto& [name, auc] : aucs) {
        attack_json[name] = {{"auc", auc}};
        bb.push_back(auc);
      }
    }
    run["attacks"] = attack_json;
    double mean_bb = 0.0;
    for (double v : bb) mean_bb += v;
    mean_bb = bb.empty() ? std::nan("") : mean_bb / static_cast<double>(bb.size());
    run["mean_black_box_auc"] = mean_bb;
    variances.push_back(train_stats.variance);
    black_box_aucs.push_back(mean_bb);
    report["runs"].push_back(std::move(run));
  }

  if (options.correlation) {
    report["pearson_var_auc"] = analysis::pearson_correlation(variances, black_box_aucs);
  }
  return report.dump(2) + "\n";
}

GridSpec parse_grid(std::string_view text) {
  const auto parts = split_list(text);
  if (parts.size() != 6) throw ConfigError("grid spec is xmin,xmax,ymin,ymax,nx,ny");
  GridSpec g;
  g.x_min = to_double("grid", parts[0]);
  g.x_max = to_double("grid", parts[1]);
  g.y_min = to_double("grid", parts[2]);
  g.y_max = to_double("grid", parts[3]);
  g.nx = to_int<std::size_t>("grid", parts[4]);
  g.ny = to_int<std::size_t>("grid", parts[5]);
  if (g.nx == 0 || g.ny == 0 || !(g.x_max >= g.x_min) || !(g.y_max >= g.y_min)) {
    throw ConfigError("grid needs nx, ny >= 1 and ordered bounds");
  }
  return g;
}

std::string boundary_csv(const nn::MlpModel& model, const GridSpec& grid) {
  if (model.input_dim() != 2) {
    throw ConfigError("decision boundary dumps need a 2-input model, this one has " +
                      std::to_string(model.input_dim()));
  }
  auto coord = [](double lo, double hi, std::size_t n, std::size_t i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  Matrix points(grid.nx * grid.ny, 2);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      points(iy * grid.nx + ix, 0) = coord(grid.x_min, grid.x_max, grid.nx, ix);
      points(iy * grid.nx + ix, 1) = coord(grid.y_min, grid.y_max, grid.ny, iy);
    }
  }
  const auto posteriors = nn::predict(model, points);
  std::string out = "x,y";
  for (std::size_t c = 0; c < model.num_classes(); ++c) out += ",score_" + std::to_string(c);
  out += ",argmax\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out += fmt(points(i, 0)) + "," + fmt(points(i, 1));
    for (double p : posteriors.row(i)) out += "," + fmt(p);
    out += "," + std::to_string(argmax(posteriors.row(i))) + "\n";
  }
  return out;
}

std::string cmd_boundary(const std::filesystem::path& run_dir, const GridSpec& grid) {
  return boundary_csv(nn::load_model(run_dir / "checkpoint.json"), grid);
}

}  // namespace relaxmia::harness
