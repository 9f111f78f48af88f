#include <charconv>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relaxmia/harness.hpp"

namespace {

using namespace relaxmia;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed_data, seed_init, seed_batch, seed_attack;
  std::string label_col;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "key = value config file");
    app->add_option("--set", settings, "override one setting, key=value (repeatable)");
    app->add_option("--seed-data", seed_data, "seed for data generation and splitting");
    app->add_option("--seed-init", seed_init, "seed for weight initialisation");
    app->add_option("--seed-batch", seed_batch, "seed for batch order and dropout");
    app->add_option("--seed-attack", seed_attack, "seed for attack subsampling and the NN attack");
    app->add_option("--label-col", label_col, "label column of a CSV dataset");
  }

  harness::ExperimentConfig resolve() const {
    harness::ExperimentConfig config;
    if (!config_path.empty()) config = harness::load_config(config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      std::string key = s.substr(0, eq);
      while (!key.empty() && key.back() == ' ') key.pop_back();
      harness::apply_setting(config, key, s.substr(eq + 1));
    }
    if (seed_data) config.seed_data = *seed_data;
    if (seed_init) config.seed_init = *seed_init;
    if (seed_batch) config.seed_batch = *seed_batch;
    if (seed_attack) config.seed_attack = *seed_attack;
    if (!label_col.empty()) config.label_col = label_col;
    config.validate();
    return config;
  }
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    harness::write_file(out_path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference defence experiments: train, attack, sweep, analyze, boundary."};
  app.require_subcommand(0, 1);
  bool help_config = false;
  app.add_flag("--help-config", help_config, "print the config file schema");

  CommonFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a target model and write its run directory");
  train_flags.attach(train);
  train->add_option("-o,--out", train_out, "run directory (default: output_dir setting)");

  std::string attack_dir, attack_list = "all";
  bool adaptive = false;
  auto* attack = app.add_subcommand("attack", "attack a trained run, writing attack_report.csv");
  attack->add_option("run_dir", attack_dir, "run directory")->required();
  attack->add_option("--attacks", attack_list, "all or a comma list of attack names");
  attack->add_flag("--adaptive", adaptive, "calibrate on a shadow trained with the target's defence");

  CommonFlags sweep_flags;
  harness::SweepOptions sweep_options;
  std::string sweep_values, sweep_out, sweep_runs;
  auto* sweep = app.add_subcommand("sweep", "train and attack one run per hyperparameter value");
  sweep_flags.attach(sweep);
  sweep->add_option("--method", sweep_options.method,
                    "relaxloss | label_smoothing | confidence_penalty | dropout | early_stopping | vanilla");
  sweep->add_option("--values", sweep_values, "comma list of values")->required();
  sweep->add_option("-j,--jobs", sweep_options.jobs, "parallel runs");
  sweep->add_option("-o,--out", sweep_out, "sweep CSV path (default: stdout)");
  sweep->add_option("--runs-dir", sweep_runs, "also write each run directory below this path");

  std::vector<std::string> analyze_dirs;
  harness::AnalyzeOptions analyze_options;
  bool no_correlation = false;
  std::string analyze_out;
  auto* analyze = app.add_subcommand("analyze", "loss statistics, bounds and correlation over runs");
  analyze->add_option("run_dirs", analyze_dirs, "run directories")->required();
  analyze->add_option("--bins", analyze_options.bins, "histogram bins");
  analyze->add_option("--hist-lo", analyze_options.hist_lo, "histogram lower edge");
  analyze->add_option("--hist-hi", analyze_options.hist_hi, "histogram upper edge");
  analyze->add_flag("--no-correlation", no_correlation, "skip the cross-run correlation");
  analyze->add_option("-o,--out", analyze_out, "report JSON path (default: stdout)");

  std::string boundary_dir, grid_text = "-3,3,-3,3,10,10", boundary_out;
  auto* boundary = app.add_subcommand("boundary", "posteriors of a 2-input model on a grid");
  boundary->add_option("run_dir", boundary_dir, "run directory")->required();
  boundary->add_option("--grid", grid_text, "xmin,xmax,ymin,ymax,nx,ny");
  boundary->add_option("-o,--out", boundary_out, "grid CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (help_config) {
      std::cout << harness::config_schema();
      return 0;
    }
    if (*train) {
      const auto config = train_flags.resolve();
      const std::string dir = train_out.empty() ? config.output_dir : train_out;
      const auto run = harness::cmd_train(config, dir);
      const auto& last = run.result.trace.epochs.back();
      std::printf("wrote %s: train loss %.4f, test top-1 %.2f%%\n", dir.c_str(), last.train_loss_mean,
                  last.test_acc1);
    } else if (*attack) {
      const auto results = harness::cmd_attack(attack_dir, attacks::parse_attack_list(attack_list), adaptive);
      for (const auto& r : results) {
        std::printf("%-10s auc %.4f  accuracy %.4f\n", r.attack_name.c_str(), r.target_auc, r.target_accuracy);
      }
    } else if (*sweep) {
      const auto config = sweep_flags.resolve();
      for (const auto& v : CLI::detail::split(sweep_values, ',')) {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
        if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad sweep value '" + v + "'");
        sweep_options.values.push_back(value);
      }
      if (!sweep_runs.empty()) sweep_options.runs_dir = sweep_runs;
      const auto result = harness::cmd_sweep(config, sweep_options);
      emit(sweep_out, result.to_csv());
      if (!result.complete()) {
        std::cerr << "sweep incomplete: some runs failed (see error column)\n";
        return 2;
      }
    } else if (*analyze) {
      analyze_options.correlation = !no_correlation;
      std::vector<std::filesystem::path> dirs(analyze_dirs.begin(), analyze_dirs.end());
      emit(analyze_out, harness::cmd_analyze(dirs, analyze_options));
    } else if (*boundary) {
      emit(boundary_out, harness::cmd_boundary(boundary_dir, harness::parse_grid(grid_text)));
    } else {
      std::cout << app.help();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
