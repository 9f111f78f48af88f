#include "relaxmia/relaxloss.hpp"

#include <algorithm>
#include <cmath>

#include "relaxmia/analysis.hpp"

namespace relaxmia::relax {

namespace {

void check_labels(const nn::Posteriors& posteriors, std::span<const int> labels) {
  if (labels.size() != posteriors.rows()) throw DimensionError("label count differs from batch size");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= posteriors.cols()) {
      throw DimensionError("label outside [0, C)");
    }
  }
}

double safe_log(double p) { return std::log(std::max(p, nn::kLogClamp)); }

}  // namespace

std::string_view to_string(FlattenScope scope) {
  return scope == FlattenScope::kIncorrectOnly ? "incorrect_only" : "all_samples";
}

FlattenScope parse_flatten_scope(std::string_view name) {
  if (name == "all_samples") return FlattenScope::kAllSamples;
  if (name == "incorrect_only") return FlattenScope::kIncorrectOnly;
  throw ConfigError("unknown flatten scope '" + std::string(name) + "'");
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::kDescent: return "descent";
    case Branch::kAscent: return "ascent";
    case Branch::kFlatten: return "flatten";
  }
  return "unknown";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kVanilla: return "vanilla";
    case Method::kRelaxLoss: return "relaxloss";
    case Method::kLabelSmoothing: return "label_smoothing";
    case Method::kConfidencePenalty: return "confidence_penalty";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "vanilla") return Method::kVanilla;
  if (name == "relaxloss") return Method::kRelaxLoss;
  if (name == "label_smoothing") return Method::kLabelSmoothing;
  if (name == "confidence_penalty") return Method::kConfidencePenalty;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void RelaxConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a finite value >= 0");
  if (gt_cap && !(*gt_cap > 0.0 && *gt_cap <= 1.0)) throw ConfigError("gt_cap must lie in (0, 1]");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
}

EpochPhaseDecision decide_branch(double batch_mean_loss, double alpha, int epoch_index) {
  EpochPhaseDecision d{Branch::kDescent, batch_mean_loss, epoch_index};
  if (batch_mean_loss >= alpha) return d;
  d.branch = epoch_index % 2 == 0 ? Branch::kAscent : Branch::kFlatten;
  return d;
}

Matrix construct_softlabels(const nn::Posteriors& posteriors, std::span<const int> labels,
                            const RelaxConfig& config) {
  const std::size_t classes = posteriors.cols();
  if (classes < 2) throw ConfigError("posterior flattening needs at least 2 classes");
  check_labels(posteriors, labels);
  Matrix targets(posteriors.rows(), classes);
  for (std::size_t i = 0; i < posteriors.rows(); ++i) {
    const auto gt = static_cast<std::size_t>(labels[i]);
    auto p = posteriors.row(i);
    auto t = targets.row(i);
    if (config.flatten_scope == FlattenScope::kIncorrectOnly && argmax(p) == gt) {
      t[gt] = 1.0;
      continue;
    }
    double keep = p[gt];
    if (config.gt_cap) keep = std::min(keep, *config.gt_cap);
    const double rest = (1.0 - keep) / static_cast<double>(classes - 1);
    std::fill(t.begin(), t.end(), rest);
    t[gt] = keep;
  }
  return targets;
}

LossWithGradient label_smoothing_loss(const nn::Posteriors& posteriors, std::span<const int> labels,
                                      double alpha_ls) {
  if (!(alpha_ls >= 0.0 && alpha_ls <= 1.0)) throw ConfigError("label smoothing alpha must lie in [0, 1]");
  check_labels(posteriors, labels);
  const std::size_t batch = posteriors.rows();
  const std::size_t classes = posteriors.cols();
  if (batch == 0) throw DimensionError("empty batch");
  const double uniform = 1.0 / static_cast<double>(classes);
  const double log_uniform = std::log(uniform);
  const double scale = 1.0 / static_cast<double>(batch);

  LossWithGradient out{0.0, Matrix(batch, classes)};
  for (std::size_t i = 0; i < batch; ++i) {
    const auto gt = static_cast<std::size_t>(labels[i]);
    double kl = 0.0;
    for (std::size_t c = 0; c < classes; ++c) kl += uniform * (log_uniform - safe_log(posteriors(i, c)));
    const double ce = -safe_log(posteriors(i, gt));
    out.loss += alpha_ls * kl + (1.0 - alpha_ls) * ce;
    // d/dz of both terms is p - target with target = alpha * U + (1 - alpha) * onehot.
    for (std::size_t c = 0; c < classes; ++c) {
      const double target = alpha_ls * uniform + (c == gt ? 1.0 - alpha_ls : 0.0);
      out.logit_gradient(i, c) = (posteriors(i, c) - target) * scale;
    }
  }
  out.loss *= scale;
  return out;
}

LossWithGradient confidence_penalty_loss(const nn::Posteriors& posteriors,
                                         std::span<const int> labels, double alpha_cp) {
  if (!(alpha_cp >= 0.0)) throw ConfigError("confidence penalty alpha must be non-negative");
  check_labels(posteriors, labels);
  const std::size_t batch = posteriors.rows();
  const std::size_t classes = posteriors.cols();
  if (batch == 0) throw DimensionError("empty batch");
  const double scale = 1.0 / static_cast<double>(batch);

  LossWithGradient out{0.0, Matrix(batch, classes)};
  for (std::size_t i = 0; i < batch; ++i) {
    const auto gt = static_cast<std::size_t>(labels[i]);
    double entropy = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = posteriors(i, c);
      if (p > 0.0) entropy -= p * safe_log(p);
    }
    out.loss += -safe_log(posteriors(i, gt)) - alpha_cp * entropy;
    // dH/dz_k = -p_k (log p_k + H).
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = posteriors(i, c);
      const double ce_grad = p - (c == gt ? 1.0 : 0.0);
      const double penalty_grad = p > 0.0 ? alpha_cp * p * (safe_log(p) + entropy) : 0.0;
      out.logit_gradient(i, c) = (ce_grad + penalty_grad) * scale;
    }
  }
  out.loss *= scale;
  return out;
}

EpochStats relaxloss_epoch(nn::MlpModel& model, nn::OptimizerState& optimizer,
                           const data::Dataset& dataset, std::span<const std::size_t> indices,
                           const RelaxConfig& config, int epoch_index, std::uint64_t batch_seed) {
  if (epoch_index < 1) throw ConfigError("epoch index is 1-based");
  EpochStats stats;
  const auto batches = data::batch_iter(indices, config.batch_size, batch_seed, true);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Matrix inputs = dataset.features_of(batches[b]);
    const std::vector<int> labels = dataset.labels_of(batches[b]);
    const Matrix hard = one_hot(labels, model.num_classes());

    const auto fwd = nn::forward(model, inputs, true, mix_seed(batch_seed, 0xd20, b));
    ++stats.forward_passes;
    const double loss = nn::cross_entropy(fwd.posteriors, hard);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite batch loss at epoch " + std::to_string(epoch_index));
    }

    const auto decision = decide_branch(loss, config.alpha, epoch_index);
    switch (decision.branch) {
      case Branch::kDescent: {
        const auto grads = nn::backward(model, fwd.cache, fwd.posteriors, hard);
        ++stats.backward_passes;
        nn::sgd_step(model, optimizer, grads, nn::StepDirection::kDescent);
        ++stats.branch_desc;
        break;
      }
      case Branch::kAscent: {
        const auto grads = nn::backward(model, fwd.cache, fwd.posteriors, hard);
        ++stats.backward_passes;
        nn::sgd_step(model, optimizer, grads, nn::StepDirection::kAscent);
        ++stats.branch_asc;
        break;
      }
      case Branch::kFlatten: {
        const Matrix soft = construct_softlabels(fwd.posteriors, labels, config);
        const auto grads = nn::backward(model, fwd.cache, fwd.posteriors, soft);
        ++stats.backward_passes;
        nn::sgd_step(model, optimizer, grads, nn::StepDirection::kDescent);
        ++stats.branch_flat;
        break;
      }
    }
  }
  return stats;
}

namespace {

EpochStats regularized_epoch(nn::MlpModel& model, nn::OptimizerState& optimizer,
                             const data::Dataset& dataset, std::span<const std::size_t> indices,
                             const TrainOptions& options, int epoch_index, std::uint64_t batch_seed) {
  EpochStats stats;
  const auto batches = data::batch_iter(indices, options.relax.batch_size, batch_seed, true);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Matrix inputs = dataset.features_of(batches[b]);
    const std::vector<int> labels = dataset.labels_of(batches[b]);
    const auto fwd = nn::forward(model, inputs, true, mix_seed(batch_seed, 0xd20, b));
    ++stats.forward_passes;
    const LossWithGradient lg = options.method == Method::kLabelSmoothing
                                    ? label_smoothing_loss(fwd.posteriors, labels, options.ls_alpha)
                                    : confidence_penalty_loss(fwd.posteriors, labels, options.cp_alpha);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("non-finite batch loss at epoch " + std::to_string(epoch_index));
    }
    const auto bp = nn::backpropagate(model, fwd.cache, lg.logit_gradient);
    ++stats.backward_passes;
    nn::sgd_step(model, optimizer, bp.gradients, nn::StepDirection::kDescent);
    ++stats.branch_desc;
  }
  return stats;
}

}  // namespace

void TrainOptions::validate() const {
  relax.validate();
  optimizer.validate();
  if (method == Method::kLabelSmoothing && !(ls_alpha >= 0.0 && ls_alpha <= 1.0)) {
    throw ConfigError("label smoothing alpha must lie in [0, 1]");
  }
  if (method == Method::kConfidencePenalty && !(cp_alpha >= 0.0)) {
    throw ConfigError("confidence penalty alpha must be non-negative");
  }
  for (int e : checkpoint_epochs) {
    if (e < 1 || e > relax.epochs) throw ConfigError("checkpoint epoch outside [1, epochs]");
  }
}

SplitEvaluation evaluate_split(const nn::MlpModel& model, const data::Dataset& dataset,
                               std::span<const std::size_t> indices) {
  SplitEvaluation ev;
  if (indices.empty()) return ev;
  const auto posteriors = nn::predict(model, dataset.features_of(indices));
  const std::vector<int> labels = dataset.labels_of(indices);
  ev.losses = nn::per_sample_cross_entropy(posteriors, one_hot(labels, model.num_classes()));
  const auto stats = analysis::loss_stats(ev.losses);
  ev.loss_mean = stats.mean;
  ev.loss_var = stats.variance;
  std::size_t top1 = 0;
  std::size_t top5 = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto p = posteriors.row(i);
    const double own = p[static_cast<std::size_t>(labels[i])];
    std::size_t better = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      // Ties are resolved in favour of the lower class index, as argmax does.
      if (p[c] > own || (p[c] == own && c < static_cast<std::size_t>(labels[i]))) ++better;
    }
    if (better == 0) ++top1;
    if (better < 5) ++top5;
  }
  const double n = static_cast<double>(labels.size());
  ev.acc1 = 100.0 * static_cast<double>(top1) / n;
  ev.acc5 = 100.0 * static_cast<double>(top5) / n;
  return ev;
}

TrainResult train(nn::MlpModel model, const data::Dataset& dataset,
                  std::span<const std::size_t> train_indices,
                  std::span<const std::size_t> test_indices, const TrainOptions& options) {
  options.validate();
  model.validate();
  if (train_indices.empty()) throw ConfigError("empty training split");
  if (dataset.dim() != model.input_dim() || dataset.num_classes != model.num_classes()) {
    throw DimensionError("model shape does not match the dataset");
  }

  TrainResult result;
  nn::OptimizerState optimizer = options.optimizer;
  optimizer.velocity = {};
  RelaxConfig relax = options.relax;
  if (options.method == Method::kVanilla) relax.alpha = 0.0;

  for (int epoch = 1; epoch <= relax.epochs; ++epoch) {
    optimizer.epoch = epoch;
    const std::uint64_t epoch_seed = mix_seed(options.batch_seed, static_cast<std::uint64_t>(epoch));
    EpochStats stats;
    try {
      if (options.method == Method::kVanilla || options.method == Method::kRelaxLoss) {
        stats = relaxloss_epoch(model, optimizer, dataset, train_indices, relax, epoch, epoch_seed);
      } else {
        stats = regularized_epoch(model, optimizer, dataset, train_indices, options, epoch, epoch_seed);
      }
    } catch (const NumericError& e) {
      throw TrainingAborted(e.what(), std::move(result.trace));
    }

    EpochRecord record;
    record.epoch = epoch;
    record.branch_desc = stats.branch_desc;
    record.branch_asc = stats.branch_asc;
    record.branch_flat = stats.branch_flat;
    record.lr = optimizer.current_rate();
    const auto train_eval = evaluate_split(model, dataset, train_indices);
    record.train_loss_mean = train_eval.loss_mean;
    record.train_loss_var = train_eval.loss_var;
    record.train_acc1 = train_eval.acc1;
    record.train_acc5 = train_eval.acc5;
    if (!test_indices.empty()) {
      const auto test_eval = evaluate_split(model, dataset, test_indices);
      record.test_loss_mean = test_eval.loss_mean;
      record.test_acc1 = test_eval.acc1;
      record.test_acc5 = test_eval.acc5;
    }
    result.trace.epochs.push_back(record);

    if (std::find(options.checkpoint_epochs.begin(), options.checkpoint_epochs.end(), epoch) !=
        options.checkpoint_epochs.end()) {
      result.checkpoints.emplace_back(epoch, model);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace relaxmia::relax
