// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relaxmia/analysis.hpp"
#include "relaxmia/attacks.hpp"
#include "relaxmia/harness.hpp"
#include "relaxmia/relaxloss.hpp"

using namespace relaxmia;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s  %2d. %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, title.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), pattern, args...);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::vector<double> kAlphas{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0};

struct SweepRun {
  double alpha = 0.0;
  double loss_auc = 0.0;
  double black_box_auc = 0.0;
  double max_accuracy = 0.0;
  double test_acc = 0.0;
  double train_loss_mean = 0.0;
  double train_loss_var = 0.0;
};

struct DeskSweep {
  fs::path runs;
  std::vector<SweepRun> points;
  double seconds = 0.0;
};

const DeskSweep& desk_sweep() {
  static const DeskSweep sweep = [] {
    DeskSweep s;
    s.runs = fs::temp_directory_path() / "relaxmia_acceptance_sweep";
    fs::remove_all(s.runs);
    harness::SweepOptions o;
    o.method = "relaxloss";
    o.values = kAlphas;
    o.jobs = 1;
    o.runs_dir = s.runs;
    const auto start = std::chrono::steady_clock::now();
    const auto result = harness::cmd_sweep(harness::ExperimentConfig{}, o);
    s.seconds = seconds_since(start);
    if (!result.complete()) throw Error("desk-scale sweep has failed runs");
    for (double a : kAlphas) {
      SweepRun p;
      p.alpha = a;
      int bb = 0;
      for (const auto& r : result.rows) {
        if (r.value != a) continue;
        p.test_acc = r.test_acc_top1;
        p.train_loss_mean = r.train_loss_mean;
        p.train_loss_var = r.train_loss_var;
        p.max_accuracy = std::max(p.max_accuracy, r.attack_accuracy);
        if (r.attack_name == "loss") p.loss_auc = r.attack_auc;
        if (attacks::is_black_box(attacks::parse_attack(r.attack_name))) {
          p.black_box_auc += r.attack_auc;
          ++bb;
        }
      }
      p.black_box_auc /= bb;
      s.points.push_back(p);
    }
    return s;
  }();
  return sweep;
}

/// Lowest Loss-attack AUC among defended runs whose test accuracy stays within
/// 2 points of (or above) vanilla.
const SweepRun& selected_run() {
  const auto& pts = desk_sweep().points;
  const SweepRun* best = nullptr;
  for (const auto& p : pts) {
    if (p.alpha == 0.0 || p.test_acc < pts.front().test_acc - 2.0) continue;
    if (!best || p.loss_auc < best->loss_auc) best = &p;
  }
  if (!best) throw Error("no swept alpha keeps utility");
  return *best;
}

std::string run_dir_name(double alpha) {
  std::string s = fmt("value_%.17g", alpha);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

int run_cli(const std::string& args) {
#ifdef RELAXMIA_CLI
  const std::string cmd = std::string(RELAXMIA_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  (void)args;
  return -1;
#endif
}

}  // namespace

int main() {
  report(1, "gradient correctness vs central finite differences", [] {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(20240901);
    double worst = 0.0;
    const int models = 24;
    for (int trial = 0; trial < models; ++trial) {
      std::vector<std::size_t> dims{1 + rng.below(6)};
      const std::size_t hidden = rng.below(3);
      for (std::size_t l = 0; l < hidden; ++l) dims.push_back(2 + rng.below(9));
      dims.push_back(2 + rng.below(5));
      const auto act = trial % 2 ? nn::Activation::kTanh : nn::Activation::kRelu;
      const auto m = nn::MlpModel::create(dims, act, 0.0, 7000 + trial);
      const std::size_t batch = 1 + rng.below(5);
      Matrix x(batch, dims.front());
      for (double& v : x.data()) v = rng.normal();
      Matrix t(batch, dims.back());
      for (std::size_t r = 0; r < batch; ++r) t(r, rng.below(dims.back())) = 1.0;
      const auto out = nn::forward(m, x);
      const auto analytic = nn::backward(m, out.cache, out.posteriors, t);
      const auto numeric =
          oracle::finite_difference(m, [&](const nn::MlpModel& mm) { return oracle::reference_loss(mm, x, t); });
      worst = std::max(worst, oracle::max_relative_error(analytic, numeric));
    }
    const double secs = seconds_since(start);
    return Outcome{worst < 1e-5 && secs < 10.0,
                   fmt("max relative error %.2e over %d models in %.2f s", worst, models, secs)};
  });

  report(2, "softlabel suite", [] {
    Rng rng(2);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t classes = 2 + rng.below(9);
      Matrix logits(1, classes);
      for (double& v : logits.data()) v = 4.0 * rng.normal();
      const auto p = nn::Posteriors::softmax(logits);
      const int gt = static_cast<int>(rng.below(classes));
      relax::RelaxConfig cfg;
      if (i % 2) cfg.gt_cap = 0.01 + 0.99 * rng.uniform();
      const auto t = relax::construct_softlabels(p, std::vector<int>{gt}, cfg);
      double sum = 0.0;
      bool ok = true;
      for (double v : t.row(0)) {
        sum += v;
        ok = ok && v >= 0.0;
      }
      const double expected = cfg.gt_cap ? std::min(p(0, gt), *cfg.gt_cap) : p(0, gt);
      if (!ok || std::abs(sum - 1.0) > 1e-9 || t(0, gt) != expected) ++bad;
    }
    return Outcome{bad == 0, fmt("%d of 1000 rows violate the contract", bad)};
  });

  report(3, "branch truth table", [] {
    using relax::Branch;
    struct Row {
      double loss;
      int epoch;
      Branch expected;
    };
    const double alpha = 1.0;
    const Row table[] = {
        {0.5, 2, Branch::kAscent},  {0.5, 1, Branch::kFlatten}, {1.0, 2, Branch::kDescent},
        {1.0, 1, Branch::kDescent}, {1.5, 2, Branch::kDescent}, {1.5, 1, Branch::kDescent},
    };
    int bad = 0;
    for (const auto& r : table) {
      for (int shift : {0, 2, 10}) bad += relax::decide_branch(r.loss, alpha, r.epoch + shift).branch != r.expected;
    }
    return Outcome{bad == 0, fmt("%d mismatches over 18 cases", bad)};
  });

  report(4, "variance decomposition identity", [] {
    Rng rng(4);
    double worst = 0.0;
    int cov_positive = 0, violations = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 2 + rng.below(200);
      std::vector<double> l(n), dl(n);
      const double rho = rng.uniform(-2.0, 2.0);
      const double scale = std::exp(rng.uniform(-3.0, 3.0));
      for (std::size_t k = 0; k < n; ++k) {
        l[k] = scale * std::abs(rng.normal());
        dl[k] = rho * l[k] + scale * rng.uniform(-0.5, 0.5);
      }
      const auto d = analysis::variance_decomposition(l, dl);
      worst = std::max(worst, d.identity_residual);
      if (d.cov > 0.0) {
        ++cov_positive;
        violations += !(d.var_sum > d.var_l);
      }
    }
    return Outcome{worst < 1e-10 && violations == 0,
                   fmt("max residual %.2e; %d positive-covariance cases, %d without variance increase", worst,
                       cov_positive, violations)};
  });

  report(5, "rank AUC equals threshold-sweep AUC", [] {
    Rng rng(5);
    int mismatches = 0, cases = 0;
    for (int i = 0; i < 800; ++i) {
      const std::size_t total = 2 + rng.below(49);
      const std::size_t members = 1 + rng.below(total - 1);
      const std::size_t levels = 1 + rng.below(i % 4 == 0 ? 3 : 30);
      std::vector<double> m, n;
      for (std::size_t k = 0; k < total; ++k) {
        (k < members ? m : n).push_back(static_cast<double>(rng.below(levels)) * 0.1);
      }
      ++cases;
      mismatches += analysis::compute_auc(m, n) != oracle::sweep_auc(m, n);
    }
    return Outcome{mismatches == 0, fmt("%d mismatches over %d score sets", mismatches, cases)};
  });

  report(6, "bound chain on Gaussian samples", [] {
    Rng rng(6);
    double worst_margin = -1.0;
    for (double gap : {0.0, 0.5, 1.0, 2.0}) {
      for (double c : {1.0, 2.0, 4.0}) {
        const double mu1 = 0.5, sigma1 = 0.5;
        const double mu2 = mu1 + gap, sigma2 = c * sigma1;
        std::vector<double> members(10000), non_members(10000);
        for (double& v : members) v = -(mu1 + sigma1 * rng.normal());
        for (double& v : non_members) v = -(mu2 + sigma2 * rng.normal());
        const double auc = analysis::compute_auc(members, non_members);
        const double bound = analysis::auc_upper_bound(
            analysis::tv_upper_bound(analysis::hellinger_gaussian({mu1, sigma1}, {mu2, sigma2})));
        worst_margin = std::max(worst_margin, auc - bound);
      }
    }
    const double a = analysis::hellinger_gaussian({0, 1}, {2, 1});
    const double b = analysis::hellinger_gaussian({0, 1}, {0, 3});
    const bool hand = std::abs(a - 0.62727) <= 1e-4 && std::abs(b - 0.47476) <= 1e-4;
    return Outcome{worst_margin <= 0.02 && hand,
                   fmt("max(AUC - bound) = %.4f over 12 pairs; D_H = %.5f, %.5f", worst_margin, a, b)};
  });

  report(7, "bound-term monotonicity in c", [] {
    double prev_star = 2.0, prev_dstar = -1.0;
    int bad = 0;
    for (int i = 0; i <= 900; ++i) {
      const double c = 1.0 + 0.01 * i;
      const auto t = analysis::bound_terms(0.0, 1.0, 1.0, c);
      bad += t.term_star > prev_star;
      bad += t.term_dstar < prev_dstar;
      prev_star = t.term_star;
      prev_dstar = t.term_dstar;
    }
    const bool unit = analysis::bound_terms(0.0, 1.0, 1.0, 1.0).term_star == 1.0;
    return Outcome{bad == 0 && unit, fmt("%d monotonicity violations on 901 grid points; term_star(1) %s 1", bad,
                                         unit ? "==" : "!=")};
  });

  report(8, "desk-scale RelaxLoss reproduction", [] {
    const auto& sweep = desk_sweep();
    const auto& vanilla = sweep.points.front();
    const auto& chosen = selected_run();
    const double drop = vanilla.loss_auc - chosen.loss_auc;
    const double rel = std::abs(chosen.train_loss_mean - chosen.alpha) / chosen.alpha;
    const bool pass = vanilla.loss_auc >= 0.70 && drop >= 0.10 && chosen.test_acc >= vanilla.test_acc - 2.0 &&
                      rel <= 0.25 && sweep.seconds < 300.0;
    return Outcome{pass, fmt("vanilla loss AUC %.3f, acc %.2f%%; alpha %.2f: loss AUC %.3f (drop %.3f), acc %.2f%%, "
                             "train loss %.3f (%.1f%% off alpha); %zu-run sweep %.0f s",
                             vanilla.loss_auc, vanilla.test_acc, chosen.alpha, chosen.loss_auc, drop, chosen.test_acc,
                             chosen.train_loss_mean, 100.0 * rel, sweep.points.size(), sweep.seconds)};
  });

  report(9, "training-loss variance increases", [] {
    const auto& pts = desk_sweep().points;
    const double base = pts.front().train_loss_var;
    double lowest = 1e300;
    int bad = 0;
    for (const auto& p : pts) {
      if (p.alpha < 0.5) continue;
      lowest = std::min(lowest, p.train_loss_var);
      bad += !(p.train_loss_var > base);
    }
    return Outcome{bad == 0, fmt("vanilla variance %.4f; smallest variance at alpha >= 0.5 is %.4f", base, lowest)};
  });

  report(10, "variance vs black-box AUC correlation", [] {
    const auto& pts = desk_sweep().points;
    std::vector<double> vars, aucs;
    for (const auto& p : pts) {
      vars.push_back(p.train_loss_var);
      aucs.push_back(p.black_box_auc);
    }
    const double r = analysis::pearson_correlation(vars, aucs);
    return Outcome{r <= -0.5 && pts.size() >= 6, fmt("Pearson r = %.3f over %zu runs, alpha in [0, 2]", r, pts.size())};
  });

  report(11, "adaptive attack", [] {
    const auto& sweep = desk_sweep();
    const auto& chosen = selected_run();
    const auto dir = sweep.runs / run_dir_name(chosen.alpha);
    const auto plain = attacks::parse_attack_report_csv(harness::read_file(dir / "attack_report.csv"));
    const auto adaptive = harness::cmd_attack(dir, attacks::all_attacks(), true);
    double worst = 1.0, max_adaptive = 0.0;
    for (std::size_t i = 0; i < adaptive.size(); ++i) {
      worst = std::min(worst, adaptive[i].target_accuracy - plain[i].target_accuracy);
      max_adaptive = std::max(max_adaptive, adaptive[i].target_accuracy);
    }
    const double vanilla_max = sweep.points.front().max_accuracy;
    return Outcome{worst >= -0.03 && max_adaptive < vanilla_max,
                   fmt("min(adaptive - non-adaptive) = %+.4f; highest adaptive accuracy %.4f vs undefended %.4f",
                       worst, max_adaptive, vanilla_max)};
  });

  report(12, "byte reproducibility from manifests", [] {
#ifndef RELAXMIA_CLI
    return Outcome{false, "command-line tool not built"};
#else
    const auto root = fs::temp_directory_path() / "relaxmia_acceptance_repro";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto source = desk_sweep().runs / run_dir_name(selected_run().alpha);
    int mismatches = 0, codes = 0;
    for (const char* name : {"a", "b"}) {
      codes += run_cli("train -c " + (source / "manifest.txt").string() + " -o " + (root / name).string());
      codes += run_cli("attack " + (root / name).string());
    }
    for (const char* f : {"checkpoint.json", "trace.csv", "attack_report.csv"}) {
      const auto a = harness::read_file(root / "a" / f);
      mismatches += a != harness::read_file(root / "b" / f);
      mismatches += a != harness::read_file(source / f);
    }
    return Outcome{mismatches == 0 && codes == 0,
                   fmt("%d byte mismatches across checkpoint, trace and attack report (sweep run vs 2 CLI reruns)",
                       mismatches)};
#endif
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
