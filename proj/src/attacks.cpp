#include "relaxmia/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace relaxmia::attacks {

namespace {

double safe_log(double p) { return std::log(std::max(p, nn::kLogClamp)); }

void check_labels(const nn::Posteriors& posteriors, std::span<const int> labels) {
  if (labels.size() != posteriors.rows()) throw DimensionError("label count differs from batch size");
}

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kLoss: return "loss";
    case AttackKind::kEntropy: return "entropy";
    case AttackKind::kMEntropy: return "m_entropy";
    case AttackKind::kNn: return "nn";
    case AttackKind::kGradXL1: return "grad_x_l1";
    case AttackKind::kGradXL2: return "grad_x_l2";
    case AttackKind::kGradWL1: return "grad_w_l1";
    case AttackKind::kGradWL2: return "grad_w_l2";
  }
  return "unknown";
}

std::vector<AttackKind> all_attacks() {
  return {AttackKind::kLoss,    AttackKind::kEntropy, AttackKind::kMEntropy, AttackKind::kNn,
          AttackKind::kGradXL1, AttackKind::kGradXL2, AttackKind::kGradWL1,  AttackKind::kGradWL2};
}

AttackKind parse_attack(std::string_view name) {
  for (AttackKind kind : all_attacks()) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown attack '" + std::string(name) + "'");
}

std::vector<AttackKind> parse_attack_list(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "all") return all_attacks();
  std::vector<AttackKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    auto item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_attack(item));
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty attack list");
  return out;
}

bool is_black_box(AttackKind kind) {
  return kind == AttackKind::kLoss || kind == AttackKind::kEntropy || kind == AttackKind::kMEntropy ||
         kind == AttackKind::kNn;
}

std::vector<double> loss_scores(const nn::Posteriors& posteriors, std::span<const int> labels) {
  check_labels(posteriors, labels);
  auto losses = nn::per_sample_cross_entropy(posteriors, one_hot(labels, posteriors.cols()));
  for (double& v : losses) v = -v;
  return losses;
}

std::vector<double> entropy_scores(const nn::Posteriors& posteriors) {
  std::vector<double> scores(posteriors.rows());
  for (std::size_t i = 0; i < posteriors.rows(); ++i) {
    double entropy = 0.0;
    for (double p : posteriors.row(i)) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    scores[i] = -entropy;
  }
  return scores;
}

std::vector<double> m_entropy_scores(const nn::Posteriors& posteriors, std::span<const int> labels) {
  check_labels(posteriors, labels);
  std::vector<double> scores(posteriors.rows());
  for (std::size_t i = 0; i < posteriors.rows(); ++i) {
    const auto gt = static_cast<std::size_t>(labels[i]);
    auto p = posteriors.row(i);
    double mentr = -(1.0 - p[gt]) * safe_log(p[gt]);
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (c != gt) mentr -= p[c] * safe_log(1.0 - p[c]);
    }
    scores[i] = -mentr;
  }
  return scores;
}

std::vector<double> grad_norm_scores(std::span<const nn::GradNorms> norms, GradNormKind kind) {
  std::vector<double> scores(norms.size());
  for (std::size_t i = 0; i < norms.size(); ++i) {
    switch (kind) {
      case GradNormKind::kXL1: scores[i] = -norms[i].x_l1; break;
      case GradNormKind::kXL2: scores[i] = -norms[i].x_l2; break;
      case GradNormKind::kWL1: scores[i] = -norms[i].w_l1; break;
      case GradNormKind::kWL2: scores[i] = -norms[i].w_l2; break;
    }
  }
  return scores;
}

std::vector<double> score_loss(const nn::MlpModel& model, const Matrix& inputs, std::span<const int> labels) {
  return loss_scores(nn::predict(model, inputs), labels);
}

std::vector<double> score_entropy(const nn::MlpModel& model, const Matrix& inputs) {
  return entropy_scores(nn::predict(model, inputs));
}

std::vector<double> score_m_entropy(const nn::MlpModel& model, const Matrix& inputs,
                                    std::span<const int> labels) {
  return m_entropy_scores(nn::predict(model, inputs), labels);
}

std::vector<double> score_grad_norm(const nn::MlpModel& model, const Matrix& inputs,
                                    std::span<const int> labels, GradNormKind kind) {
  const auto norms = nn::per_sample_grad_norms(model, inputs, labels);
  return grad_norm_scores(norms, kind);
}

ThresholdRule select_threshold(std::span<const double> member_scores,
                               std::span<const double> non_member_scores, std::string attack_name) {
  if (member_scores.empty() || non_member_scores.empty()) {
    throw ConfigError("threshold selection needs member and non-member scores");
  }
  struct Entry {
    double score;
    bool member;
  };
  std::vector<Entry> pooled;
  for (double s : member_scores) pooled.push_back({s, true});
  for (double s : non_member_scores) pooled.push_back({s, false});
  std::sort(pooled.begin(), pooled.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  const auto n_members = static_cast<std::uint64_t>(member_scores.size());
  const auto n_non = static_cast<std::uint64_t>(non_member_scores.size());
  // Balanced accuracy scaled by 2 * n_members * n_non, so comparisons are exact:
  // (members above) * n_non + (non-members at or below) * n_members.
  auto scaled = [&](std::uint64_t members_le, std::uint64_t non_le) {
    return (n_members - members_le) * n_non + non_le * n_members;
  };

  ThresholdRule rule;
  rule.attack_name = std::move(attack_name);
  rule.threshold = pooled.front().score - 1.0;
  std::uint64_t best = scaled(0, 0);
  std::uint64_t members_le = 0;
  std::uint64_t non_le = 0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].score == pooled[i].score) {
      (pooled[j].member ? members_le : non_le) += 1;
      ++j;
    }
    const double candidate = j < pooled.size() ? pooled[i].score + (pooled[j].score - pooled[i].score) / 2.0
                                               : pooled[i].score + 1.0;
    const std::uint64_t value = scaled(members_le, non_le);
    if (value > best) {
      best = value;
      rule.threshold = candidate;
    }
    i = j;
  }
  const std::uint64_t chance = n_members * n_non;
  rule.shadow_accuracy = static_cast<double>(best) / static_cast<double>(2 * chance);
  rule.degenerate = best <= chance;
  return rule;
}

AttackEvaluation evaluate_attack(const ThresholdRule& rule, const MembershipScoreSet& query,
                                 bool allow_unbalanced) {
  query.validate();
  AttackEvaluation out;
  out.balanced = query.balanced();
  if (!out.balanced && !allow_unbalanced) {
    throw ConfigError("attack evaluation requires a balanced query set (" +
                      std::to_string(query.member_count()) + " members vs " +
                      std::to_string(query.non_member_count()) + " non-members)");
  }
  out.accuracy = analysis::threshold_accuracy(query, rule.threshold);
  return out;
}

std::string_view to_string(NnFeatureKind kind) {
  return kind == NnFeatureKind::kLogits ? "logits" : "posteriors";
}

NnFeatureKind parse_nn_feature_kind(std::string_view name) {
  if (name == "logits") return NnFeatureKind::kLogits;
  if (name == "posteriors") return NnFeatureKind::kPosteriors;
  throw ConfigError("unknown NN attack feature kind '" + std::string(name) + "'");
}

Matrix nn_attack_features(const nn::MlpModel& model, const Matrix& inputs, NnFeatureKind kind) {
  const auto fwd = nn::forward(model, inputs);
  Matrix features = kind == NnFeatureKind::kLogits ? fwd.logits : fwd.posteriors.values();
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = features.row(i);
    std::sort(row.begin(), row.end(), std::greater<>());
  }
  return features;
}

namespace {

Matrix standardize(const Matrix& features, const std::vector<double>& mean,
                   const std::vector<double>& scale) {
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
  }
  return out;
}

}  // namespace

NnAttackModel train_nn_attack(const nn::MlpModel& shadow_model, const data::Dataset& dataset,
                              std::span<const std::size_t> shadow_train,
                              std::span<const std::size_t> shadow_test,
                              std::span<const std::size_t> surrogate, const NnAttackOptions& options) {
  if (shadow_train.empty() || shadow_test.empty()) {
    throw Error("NN attack training needs both member and non-member shadow features");
  }
  if (!(options.holdout_fraction >= 0.0 && options.holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
  const Matrix member_features =
      nn_attack_features(shadow_model, dataset.features_of(shadow_train), options.feature_kind);
  const Matrix non_member_features =
      nn_attack_features(shadow_model, dataset.features_of(shadow_test), options.feature_kind);

  // Seeded holdout of each group.
  Rng rng(mix_seed(options.seed, 0x401d));
  auto split_rows = [&](std::size_t n, std::vector<std::size_t>& fit, std::vector<std::size_t>& held) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_held = static_cast<std::size_t>(std::floor(options.holdout_fraction * static_cast<double>(n)));
    held.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
    fit.assign(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
    std::sort(held.begin(), held.end());
    std::sort(fit.begin(), fit.end());
  };
  std::vector<std::size_t> member_fit, member_held, non_fit, non_held;
  split_rows(member_features.rows(), member_fit, member_held);
  split_rows(non_member_features.rows(), non_fit, non_held);
  if (member_fit.empty() || non_fit.empty()) {
    throw Error("NN attack training split left one class empty");
  }

  const std::size_t dim = member_features.cols();
  data::Dataset train_set;
  train_set.name = "nn_attack";
  train_set.num_classes = 2;
  train_set.features = Matrix(member_fit.size() + non_fit.size(), dim);
  std::size_t row = 0;
  for (std::size_t i : member_fit) {
    std::copy_n(member_features.row(i).begin(), dim, train_set.features.row(row++).begin());
    train_set.labels.push_back(1);
  }
  for (std::size_t i : non_fit) {
    std::copy_n(non_member_features.row(i).begin(), dim, train_set.features.row(row++).begin());
    train_set.labels.push_back(0);
  }

  NnAttackModel attack;
  attack.feature_kind = options.feature_kind;
  attack.feature_mean.assign(dim, 0.0);
  attack.feature_scale.assign(dim, 1.0);
  const double n = static_cast<double>(train_set.size());
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train_set.size(); ++i) mean += train_set.features(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      var += (train_set.features(i, j) - mean) * (train_set.features(i, j) - mean);
    }
    const double sd = std::sqrt(var / n);
    attack.feature_mean[j] = mean;
    attack.feature_scale[j] = sd > 1e-8 ? sd : 1.0;
  }
  train_set.features = standardize(train_set.features, attack.feature_mean, attack.feature_scale);

  std::vector<std::size_t> dims{dim};
  dims.insert(dims.end(), options.hidden.begin(), options.hidden.end());
  dims.push_back(2);
  auto init = nn::MlpModel::create(dims, nn::Activation::kRelu, 0.0, mix_seed(options.seed, 0x1417));

  relax::TrainOptions train_options;
  train_options.method = relax::Method::kVanilla;
  train_options.relax.epochs = options.epochs;
  train_options.relax.batch_size = options.batch_size;
  train_options.optimizer.learning_rate = options.learning_rate;
  train_options.optimizer.momentum = options.momentum;
  train_options.optimizer.weight_decay = options.weight_decay;
  train_options.batch_seed = mix_seed(options.seed, 0xba7c);
  std::vector<std::size_t> all(train_set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  attack.classifier = relax::train(std::move(init), train_set, all, {}, train_options).model;

  // Validation: held-out shadow members vs held-out shadow non-members plus surrogate non-members.
  MembershipScoreSet validation;
  validation.attack_name = "nn";
  auto add_scores = [&](const Matrix& raw, int truth) {
    if (raw.rows() == 0) return;
    const auto post = nn::predict(attack.classifier, standardize(raw, attack.feature_mean, attack.feature_scale));
    for (std::size_t i = 0; i < post.rows(); ++i) {
      validation.scores.push_back(post(i, 1));
      validation.truths.push_back(truth);
    }
  };
  add_scores(member_features.select_rows(member_held), 1);
  add_scores(non_member_features.select_rows(non_held), 0);
  if (!surrogate.empty()) {
    add_scores(nn_attack_features(shadow_model, dataset.features_of(surrogate), options.feature_kind), 0);
  }
  if (validation.member_count() > 0 && validation.non_member_count() > 0) {
    attack.validation_auc = analysis::compute_auc(validation);
    // Balanced accuracy of the 0.5 decision rule.
    double tp = 0, tn = 0;
    for (std::size_t i = 0; i < validation.scores.size(); ++i) {
      const bool predicted = validation.scores[i] > 0.5;
      if (validation.truths[i] == 1 && predicted) tp += 1;
      if (validation.truths[i] == 0 && !predicted) tn += 1;
    }
    attack.validation_accuracy = 0.5 * (tp / static_cast<double>(validation.member_count()) +
                                        tn / static_cast<double>(validation.non_member_count()));
  }
  return attack;
}

std::vector<double> nn_attack_scores(const NnAttackModel& attack, const nn::MlpModel& target,
                                     const Matrix& inputs) {
  const Matrix raw = nn_attack_features(target, inputs, attack.feature_kind);
  if (raw.cols() != attack.classifier.input_dim()) {
    throw DimensionError("NN attack input dim does not match the target's class count");
  }
  const auto post = nn::predict(attack.classifier, standardize(raw, attack.feature_mean, attack.feature_scale));
  std::vector<double> scores(post.rows());
  for (std::size_t i = 0; i < post.rows(); ++i) scores[i] = post(i, 1);
  return scores;
}

QuerySet balanced_query(const data::SplitPlan& split, std::uint64_t seed) {
  QuerySet q;
  q.members = split.fold(data::FoldRole::kTargetTrain);
  q.non_members = split.fold(data::FoldRole::kTargetTest);
  const std::size_t n = std::min(q.members.size(), q.non_members.size());
  Rng rng(mix_seed(seed, 0x9e57));
  for (auto* group : {&q.members, &q.non_members}) {
    if (group->size() > n) {
      rng.shuffle(std::span<std::size_t>(*group));
      group->resize(n);
    }
    std::sort(group->begin(), group->end());
  }
  return q;
}

std::vector<double> per_class_auc_top(const MembershipScoreSet& set, std::size_t limit) {
  set.validate();
  if (set.class_labels.empty()) return {};
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_class;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    auto& entry = by_class[set.class_labels[i]];
    (set.truths[i] == 1 ? entry.first : entry.second).push_back(set.scores[i]);
  }
  std::vector<double> aucs;
  for (const auto& [label, groups] : by_class) {
    if (groups.first.empty() || groups.second.empty()) continue;
    aucs.push_back(analysis::compute_auc(groups.first, groups.second));
  }
  std::sort(aucs.begin(), aucs.end(), std::greater<>());
  if (aucs.size() > limit) aucs.resize(limit);
  return aucs;
}

namespace {

/// Scores of one model on one set of samples, computed lazily per attack family.
class ScoreSource {
 public:
  ScoreSource(const nn::MlpModel& model, const data::Dataset& dataset, std::span<const std::size_t> indices)
      : model_(model), inputs_(dataset.features_of(indices)), labels_(dataset.labels_of(indices)),
        posteriors_(nn::predict(model, inputs_)) {}

  const Matrix& inputs() const { return inputs_; }
  const std::vector<int>& labels() const { return labels_; }

  std::vector<double> scores(AttackKind kind) {
    switch (kind) {
      case AttackKind::kLoss: return loss_scores(posteriors_, labels_);
      case AttackKind::kEntropy: return entropy_scores(posteriors_);
      case AttackKind::kMEntropy: return m_entropy_scores(posteriors_, labels_);
      case AttackKind::kGradXL1: return grad_norm_scores(norms(), GradNormKind::kXL1);
      case AttackKind::kGradXL2: return grad_norm_scores(norms(), GradNormKind::kXL2);
      case AttackKind::kGradWL1: return grad_norm_scores(norms(), GradNormKind::kWL1);
      case AttackKind::kGradWL2: return grad_norm_scores(norms(), GradNormKind::kWL2);
      case AttackKind::kNn: break;
    }
    throw UsageError("NN attack scores are not threshold scores");
  }

 private:
  const std::vector<nn::GradNorms>& norms() {
    if (!norms_) norms_ = nn::per_sample_grad_norms(model_, inputs_, labels_);
    return *norms_;
  }

  const nn::MlpModel& model_;
  Matrix inputs_;
  std::vector<int> labels_;
  nn::Posteriors posteriors_;
  std::optional<std::vector<nn::GradNorms>> norms_;
};

}  // namespace

std::vector<AttackResult> run_attack_suite(const nn::MlpModel& target, const nn::MlpModel& shadow,
                                           const data::Dataset& dataset, const data::SplitPlan& split,
                                           std::span<const AttackKind> attacks,
                                           const AttackSuiteOptions& options, bool adaptive) {
  if (target.num_classes() != shadow.num_classes() || target.input_dim() != shadow.input_dim()) {
    throw DimensionError("shadow and target models differ in shape");
  }
  for (auto role : {data::FoldRole::kTargetTrain, data::FoldRole::kTargetTest, data::FoldRole::kShadowTrain,
                    data::FoldRole::kShadowTest}) {
    if (split.fold(role).empty()) {
      throw ConfigError("insufficient folds: " + std::string(data::to_string(role)) + " is empty");
    }
  }
  const QuerySet query = balanced_query(split, options.seed);
  ScoreSource query_members(target, dataset, query.members);
  ScoreSource query_non_members(target, dataset, query.non_members);
  ScoreSource shadow_members(shadow, dataset, split.fold(data::FoldRole::kShadowTrain));
  ScoreSource shadow_non_members(shadow, dataset, split.fold(data::FoldRole::kShadowTest));

  auto make_query = [&](std::string name, std::vector<double> member_scores,
                        std::vector<double> non_member_scores) {
    MembershipScoreSet set;
    set.attack_name = std::move(name);
    set.scores = std::move(member_scores);
    set.truths.assign(set.scores.size(), 1);
    set.scores.insert(set.scores.end(), non_member_scores.begin(), non_member_scores.end());
    set.truths.resize(set.scores.size(), 0);
    set.class_labels = query_members.labels();
    set.class_labels.insert(set.class_labels.end(), query_non_members.labels().begin(),
                            query_non_members.labels().end());
    return set;
  };

  std::vector<AttackResult> results;
  for (AttackKind kind : attacks) {
    AttackResult r;
    r.attack_name = std::string(to_string(kind));
    r.adaptive = adaptive;
    ThresholdRule rule;
    MembershipScoreSet set;
    if (kind == AttackKind::kNn) {
      NnAttackOptions nn_options = options.nn;
      nn_options.seed = mix_seed(options.seed, 0x77);
      const auto attack = train_nn_attack(shadow, dataset, split.fold(data::FoldRole::kShadowTrain),
                                          split.fold(data::FoldRole::kShadowTest),
                                          split.fold(data::FoldRole::kSurrogate), nn_options);
      rule = {0.5, r.attack_name, attack.validation_accuracy, false};
      set = make_query(r.attack_name, nn_attack_scores(attack, target, query_members.inputs()),
                       nn_attack_scores(attack, target, query_non_members.inputs()));
    } else {
      rule = select_threshold(shadow_members.scores(kind), shadow_non_members.scores(kind), r.attack_name);
      set = make_query(r.attack_name, query_members.scores(kind), query_non_members.scores(kind));
    }
    r.threshold = rule.threshold;
    r.shadow_accuracy = rule.shadow_accuracy;
    r.degenerate = rule.degenerate;
    r.target_accuracy = evaluate_attack(rule, set).accuracy;
    r.target_auc = analysis::compute_auc(set);
    r.per_class_auc_top10 = per_class_auc_top(set, 10);
    results.push_back(std::move(r));
  }
  return results;
}

AdaptiveReport run_adaptive_attack(const nn::MlpModel& target, const nn::MlpModel& shadow_init,
                                   const relax::TrainOptions& defense, const data::Dataset& dataset,
                                   const data::SplitPlan& split, std::span<const AttackKind> attacks,
                                   const AttackSuiteOptions& options, bool adaptive) {
  if (split.fold(data::FoldRole::kShadowTrain).empty() || split.fold(data::FoldRole::kShadowTest).empty()) {
    throw ConfigError("insufficient folds for shadow training");
  }
  AdaptiveReport report;
  report.shadow_model = relax::train(shadow_init, dataset, split.fold(data::FoldRole::kShadowTrain),
                                     split.fold(data::FoldRole::kShadowTest), defense)
                            .model;
  report.results = run_attack_suite(target, report.shadow_model, dataset, split, attacks, options, adaptive);
  for (const auto& r : report.results) {
    if (report.max_attack.empty() || r.target_accuracy > report.max_accuracy) {
      report.max_accuracy = r.target_accuracy;
      report.max_attack = r.attack_name;
    }
  }
  return report;
}

std::string attack_report_csv(std::span<const AttackResult> results) {
  std::string out(kAttackCsvHeader);
  out += "\n";
  for (const auto& r : results) {
    std::string per_class;
    for (std::size_t i = 0; i < r.per_class_auc_top10.size(); ++i) {
      if (i) per_class += ";";
      per_class += format_double(r.per_class_auc_top10[i]);
    }
    out += r.attack_name + "," + format_double(r.threshold) + "," + format_double(r.shadow_accuracy) + "," +
           format_double(r.target_accuracy) + "," + format_double(r.target_auc) + "," +
           (r.adaptive ? "1" : "0") + "," + per_class + "\n";
  }
  return out;
}

std::vector<AttackResult> parse_attack_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kAttackCsvHeader) throw ParseError("bad attack report header", 1);
  std::vector<AttackResult> results;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 7) throw ParseError("attack report row needs 7 fields", lineno);
    AttackResult r;
    try {
      r.attack_name = fields[0];
      r.threshold = std::stod(fields[1]);
      r.shadow_accuracy = std::stod(fields[2]);
      r.target_accuracy = std::stod(fields[3]);
      r.target_auc = std::stod(fields[4]);
      r.adaptive = fields[5] == "1";
      std::stringstream pc(fields[6]);
      std::string v;
      while (std::getline(pc, v, ';')) {
        if (!v.empty()) r.per_class_auc_top10.push_back(std::stod(v));
      }
    } catch (const std::exception&) {
      throw ParseError("non-numeric attack report cell", lineno);
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace relaxmia::attacks
