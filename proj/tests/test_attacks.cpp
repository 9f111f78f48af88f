#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "relaxmia/analysis.hpp"
#include "relaxmia/attacks.hpp"
#include "relaxmia/harness.hpp"

using namespace relaxmia;
using namespace relaxmia::attacks;

namespace {

nn::Posteriors rows(std::initializer_list<std::initializer_list<double>> r) {
  return nn::Posteriors::from_probabilities(Matrix::from_rows(r));
}

MembershipScoreSet make_set(std::vector<double> members, std::vector<double> non_members) {
  MembershipScoreSet s;
  for (double v : members) {
    s.scores.push_back(v);
    s.truths.push_back(1);
  }
  for (double v : non_members) {
    s.scores.push_back(v);
    s.truths.push_back(0);
  }
  return s;
}

std::vector<double> random_scores(Rng& rng, std::size_t n, int levels) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<double>(rng.below(levels)) * 0.25);
  return out;
}

}  // namespace

TEST_CASE("loss scores") {
  const auto s = loss_scores(rows({{1.0, 0.0}, {0.5, 0.5}, {0.9, 0.1}, {0.6, 0.4}}), std::vector<int>{0, 0, 0, 0});
  CHECK(std::abs(s[0]) < 1e-12);
  CHECK(s[1] == doctest::Approx(-std::log(2.0)));
  CHECK(s[2] > s[3]);
  for (double v : s) CHECK(v <= s[0]);
}

TEST_CASE("entropy scores") {
  const auto s = entropy_scores(rows({{0.0, 1.0, 0.0, 0.0}, {0.25, 0.25, 0.25, 0.25}, {0.7, 0.1, 0.1, 0.1}}));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(-std::log(4.0)));
  CHECK(s[2] > s[1]);
  // Label independence is structural: the score function takes no labels.
}

TEST_CASE("modified entropy scores") {
  const auto p = rows({{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}});
  const auto s = m_entropy_scores(p, std::vector<int>{0, 0, 0});
  CHECK(std::abs(s[0]) < 1e-9);
  CHECK(s[1] == doctest::Approx(-std::log(2.0)));
  CHECK(s[2] < -20.0);
  // Mentr increases as the ground-truth probability falls.
  const auto t = m_entropy_scores(rows({{0.9, 0.1}, {0.7, 0.3}, {0.55, 0.45}}), std::vector<int>{0, 0, 0});
  CHECK(t[0] > t[1]);
  CHECK(t[1] > t[2]);
}

TEST_CASE("gradient-norm scores") {
  std::vector<nn::GradNorms> norms{{0, 0, 0, 0}, {3, 2, 5, 4}, {1, 0.5, 2, 1.5}};
  const auto l1 = grad_norm_scores(norms, GradNormKind::kWL1);
  const auto l2 = grad_norm_scores(norms, GradNormKind::kWL2);
  CHECK(l1[0] == 0.0);
  CHECK(l2[0] == 0.0);
  CHECK(l1[2] > l1[1]);
  CHECK(grad_norm_scores(norms, GradNormKind::kXL2)[1] == -2.0);

  auto m = nn::MlpModel::create({4, 6, 3}, nn::Activation::kRelu, 0.0, 3);
  Rng rng(2);
  Matrix x(25, 4);
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> y;
  for (int i = 0; i < 25; ++i) y.push_back(static_cast<int>(rng.below(3)));
  const auto w1 = score_grad_norm(m, x, y, GradNormKind::kWL1);
  const auto w2 = score_grad_norm(m, x, y, GradNormKind::kWL2);
  const auto x1 = score_grad_norm(m, x, y, GradNormKind::kXL1);
  const auto x2 = score_grad_norm(m, x, y, GradNormKind::kXL2);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(w2[i] >= w1[i]);
    CHECK(x2[i] >= x1[i]);
  }
  CHECK(score_loss(m, x, y) == loss_scores(nn::predict(m, x), y));
  CHECK(score_entropy(m, x) == entropy_scores(nn::predict(m, x)));
  CHECK(score_m_entropy(m, x, y) == m_entropy_scores(nn::predict(m, x), y));
}

TEST_CASE("select_threshold examples") {
  const std::vector<double> m1{0.9, 0.8}, n1{0.2, 0.1};
  const auto r1 = select_threshold(m1, n1, "loss");
  CHECK(r1.threshold == doctest::Approx(0.5));
  CHECK(r1.shadow_accuracy == 1.0);
  CHECK_FALSE(r1.degenerate);
  CHECK(r1.attack_name == "loss");

  const std::vector<double> same{0.3, 0.7, 0.7};
  const auto r2 = select_threshold(same, same);
  CHECK(r2.shadow_accuracy == 0.5);
  CHECK(r2.degenerate);
  CHECK(std::isfinite(r2.threshold));

  const std::vector<double> one{1.0}, zero{0.0};
  const auto r3 = select_threshold(one, zero);
  CHECK(r3.threshold == 0.5);
  CHECK(r3.shadow_accuracy == 1.0);

  CHECK_THROWS_AS(select_threshold(std::vector<double>{}, zero), ConfigError);
}

TEST_CASE("select_threshold matches an exhaustive sweep") {
  Rng rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto members = random_scores(rng, 1 + rng.below(50), 2 + trial % 12);
    const auto non_members = random_scores(rng, 1 + rng.below(50), 2 + trial % 12);
    const auto rule = select_threshold(members, non_members);
    const double best = oracle::best_balanced_accuracy(members, non_members);
    CHECK(rule.shadow_accuracy == doctest::Approx(best).epsilon(1e-12));
    CHECK(oracle::balanced_accuracy(members, non_members, rule.threshold) ==
          doctest::Approx(rule.shadow_accuracy).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_attack examples") {
  ThresholdRule rule;
  rule.threshold = 0.5;
  CHECK(evaluate_attack(rule, make_set({0.9, 0.8}, {0.2, 0.1})).accuracy == 1.0);
  rule.threshold = -10.0;
  CHECK(evaluate_attack(rule, make_set({0.9, 0.8}, {0.2, 0.1})).accuracy == 0.5);
  // Members {2, 0}, non-members {1, -1} at 0.5: 2 -> member (right), 0 -> non-member
  // (wrong), 1 -> member (wrong), -1 -> non-member (right).
  rule.threshold = 0.5;
  CHECK(evaluate_attack(rule, make_set({2, 0}, {1, -1})).accuracy == 0.5);
}

TEST_CASE("evaluate_attack rejects unbalanced sets unless overridden") {
  ThresholdRule rule;
  const auto set = make_set({1, 2, 3}, {0});
  CHECK_THROWS_AS(evaluate_attack(rule, set), ConfigError);
  const auto ev = evaluate_attack(rule, set, true);
  CHECK_FALSE(ev.balanced);
  CHECK(ev.accuracy == 1.0);
}

TEST_CASE("evaluate_attack is invariant to sample order") {
  Rng rng(8);
  auto set = make_set(random_scores(rng, 30, 9), random_scores(rng, 30, 9));
  ThresholdRule rule;
  rule.threshold = 0.8;
  const double base = evaluate_attack(rule, set).accuracy;
  std::vector<std::size_t> order(set.scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  MembershipScoreSet shuffled;
  for (auto i : order) {
    shuffled.scores.push_back(set.scores[i]);
    shuffled.truths.push_back(set.truths[i]);
  }
  CHECK(evaluate_attack(rule, shuffled).accuracy == base);
}

TEST_CASE("AUC is invariant under increasing transforms of scores") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto set = make_set(random_scores(rng, 20, 7), random_scores(rng, 20, 7));
    const double base = analysis::compute_auc(set);
    for (double& s : set.scores) s = std::exp(3.0 * s) - 7.0;
    CHECK(analysis::compute_auc(set) == base);
  }
}

TEST_CASE("balanced_query truncates the larger fold deterministically") {
  data::SplitPlan plan = data::five_fold_split(23, 1);
  const auto q = balanced_query(plan, 5);
  CHECK(q.members.size() == q.non_members.size());
  CHECK(q.members.size() == std::min(plan.folds[0].size(), plan.folds[1].size()));
  CHECK(std::is_sorted(q.members.begin(), q.members.end()));
  CHECK(std::is_sorted(q.non_members.begin(), q.non_members.end()));
  for (auto i : q.members) CHECK(std::count(plan.folds[0].begin(), plan.folds[0].end(), i) == 1);
  const auto again = balanced_query(plan, 5);
  CHECK(again.members == q.members);
}

TEST_CASE("NN attack") {
  data::SyntheticSpec spec;
  spec.classes = 5;
  spec.dim = 6;
  spec.per_class = 120;
  spec.class_separation = 0.0;
  spec.seed = 3;
  const auto ds = data::generate_synthetic(spec);
  const auto split = data::five_fold_split(ds, 4);
  const auto untrained = nn::MlpModel::create({6, 16, 5}, nn::Activation::kRelu, 0.0, 5);
  NnAttackOptions opts;
  opts.epochs = 10;
  opts.seed = 6;

  SUBCASE("no signal gives chance-level validation AUC") {
    const auto attack = train_nn_attack(untrained, ds, split.fold(data::FoldRole::kShadowTrain),
                                        split.fold(data::FoldRole::kShadowTest),
                                        split.fold(data::FoldRole::kSurrogate), opts);
    CHECK(std::abs(attack.validation_auc - 0.5) <= 0.05);
    CHECK(attack.classifier.input_dim() == 5);
    CHECK(attack.classifier.num_classes() == 2);
  }
  SUBCASE("deterministic given the seed") {
    const auto a = train_nn_attack(untrained, ds, split.folds[2], split.folds[3], split.folds[4], opts);
    const auto b = train_nn_attack(untrained, ds, split.folds[2], split.folds[3], split.folds[4], opts);
    CHECK(nn::model_to_json(a.classifier) == nn::model_to_json(b.classifier));
  }
  SUBCASE("single-class shadow data is an error") {
    CHECK_THROWS_AS(train_nn_attack(untrained, ds, split.folds[2], {}, {}, opts), Error);
  }
  SUBCASE("features are sorted descending") {
    const auto f = nn_attack_features(untrained, ds.features_of(split.folds[0]), NnFeatureKind::kPosteriors);
    for (std::size_t i = 0; i < f.rows(); ++i) {
      CHECK(std::is_sorted(f.row(i).begin(), f.row(i).end(), std::greater<>()));
    }
  }
}

TEST_CASE("attack suite on an overfit model") {
  harness::ExperimentConfig cfg;
  cfg.per_class = 100;
  cfg.hidden = {256};
  cfg.epochs = 60;
  const auto run = harness::train_target(cfg);
  const auto report = harness::attack_run(cfg, run.data, run.result.model, all_attacks(), false);
  REQUIRE(report.results.size() == 8);
  for (const auto& r : report.results) {
    if (r.attack_name == "nn") CHECK(r.target_auc >= 0.7);
    CHECK(r.target_auc > 0.6);
    CHECK(r.per_class_auc_top10.size() == 10);
    CHECK(std::is_sorted(r.per_class_auc_top10.begin(), r.per_class_auc_top10.end(), std::greater<>()));
  }
  const auto q = balanced_query(run.data.split, cfg.seed_attack);
  for (auto kind : {GradNormKind::kXL1, GradNormKind::kWL2}) {
    const auto ms = score_grad_norm(run.result.model, run.data.dataset.features_of(q.members),
                                    run.data.dataset.labels_of(q.members), kind);
    const auto ns = score_grad_norm(run.result.model, run.data.dataset.features_of(q.non_members),
                                    run.data.dataset.labels_of(q.non_members), kind);
    CHECK(oracle::mean_var(ms).first > oracle::mean_var(ns).first);
  }
  CHECK(report.max_accuracy == std::max_element(report.results.begin(), report.results.end(),
                                                [](const auto& a, const auto& b) {
                                                  return a.target_accuracy < b.target_accuracy;
                                                })->target_accuracy);

  // Undefended target: the adaptive shadow is trained exactly like the non-adaptive one.
  const auto adaptive = harness::attack_run(cfg, run.data, run.result.model, all_attacks(), true);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(adaptive.results[i].target_accuracy == report.results[i].target_accuracy);
    CHECK(adaptive.results[i].adaptive);
  }
}

TEST_CASE("adaptive attack needs shadow folds") {
  data::SyntheticSpec spec;
  spec.classes = 2;
  spec.dim = 2;
  spec.per_class = 10;
  const auto ds = data::generate_synthetic(spec);
  data::SplitPlan plan = data::five_fold_split(ds, 1);
  plan.folds[3].clear();
  const auto m = nn::MlpModel::create({2, 2}, nn::Activation::kRelu, 0.0, 1);
  relax::TrainOptions opts;
  CHECK_THROWS_AS(run_adaptive_attack(m, m, opts, ds, plan, all_attacks(), {}), ConfigError);
}

TEST_CASE("attack report CSV round-trips") {
  AttackResult a;
  a.attack_name = "loss";
  a.threshold = -0.1234567890123;
  a.shadow_accuracy = 0.75;
  a.target_accuracy = 0.7;
  a.target_auc = 0.8;
  a.adaptive = true;
  a.per_class_auc_top10 = {0.9, 0.85};
  AttackResult b;
  b.attack_name = "nn";
  const std::vector<AttackResult> in{a, b};
  const auto text = attack_report_csv(in);
  CHECK(text.rfind(std::string(kAttackCsvHeader), 0) == 0);
  const auto back = parse_attack_report_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].threshold == a.threshold);
  CHECK(back[0].adaptive);
  CHECK(back[0].per_class_auc_top10 == a.per_class_auc_top10);
  CHECK(back[1].per_class_auc_top10.empty());
  CHECK(attack_report_csv(back) == text);
  CHECK_THROWS_AS(parse_attack_report_csv("bogus\n"), ParseError);
}

TEST_CASE("attack names") {
  CHECK(all_attacks().size() == 8);
  for (auto k : all_attacks()) CHECK(parse_attack(to_string(k)) == k);
  CHECK(parse_attack_list("all") == all_attacks());
  CHECK(parse_attack_list("loss, nn").size() == 2);
  CHECK(is_black_box(AttackKind::kNn));
  CHECK_FALSE(is_black_box(AttackKind::kGradWL1));
  CHECK_THROWS_AS(parse_attack("label_only"), ConfigError);
}
