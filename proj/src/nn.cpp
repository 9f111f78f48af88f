#include "relaxmia/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace relaxmia::nn {

namespace {

using json = nlohmann::json;

double activate(Activation activation, double z) {
  return activation == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_derivative(Activation activation, double z) {
  if (activation == Activation::kRelu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

// out = x * w + bias (row broadcast).
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& bias) {
  Matrix out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(bias.begin(), bias.end(), dst.begin());
    auto src = x.row(i);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double a = src[k];
      if (a == 0.0) continue;
      auto wk = w.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += a * wk[j];
    }
  }
  return out;
}

void check_same_shape(const Gradients& g, const MlpModel& model) {
  if (g.weights.size() != model.weights.size() || g.biases.size() != model.biases.size()) {
    throw DimensionError("gradient layer count does not match model");
  }
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    if (g.weights[l].rows() != model.weights[l].rows() ||
        g.weights[l].cols() != model.weights[l].cols() ||
        g.biases[l].size() != model.biases[l].size()) {
      throw DimensionError("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

MlpModel MlpModel::create(std::vector<std::size_t> layer_dims, Activation activation,
                          double dropout_rate, std::uint64_t seed) {
  MlpModel model;
  model.layer_dims = std::move(layer_dims);
  model.activation = activation;
  model.dropout_rate = dropout_rate;
  if (model.layer_dims.size() < 2) throw ConfigError("model needs at least input and output dims");
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    const std::size_t in = model.layer_dims[l];
    const std::size_t out = model.layer_dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
    Matrix w(in, out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    std::vector<double> b(out);
    for (double& v : b) v = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  model.validate();
  return model;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpModel::validate() const {
  if (layer_dims.size() < 2) throw ConfigError("model needs at least input and output dims");
  if (layer_dims.back() < 2) throw ConfigError("model needs at least 2 output classes");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw DimensionError("layer count does not match layer_dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l] || weights[l].cols() != layer_dims[l + 1] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw DimensionError("weight shape mismatch at layer " + std::to_string(l));
    }
  }
}

bool MlpModel::same_parameters(const MlpModel& other) const {
  return layer_dims == other.layer_dims && activation == other.activation &&
         dropout_rate == other.dropout_rate && weights == other.weights &&
         biases == other.biases;
}

Posteriors Posteriors::softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto z = logits.row(i);
    auto p = probs.row(i);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - peak);
      total += p[c];
    }
    for (double& v : p) v /= total;
  }
  return Posteriors(std::move(probs));
}

Posteriors Posteriors::from_probabilities(Matrix probabilities) {
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    double total = 0.0;
    for (double v : probabilities.row(i)) {
      if (!(v >= 0.0 && v <= 1.0)) throw DimensionError("posterior entry outside [0, 1]");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw DimensionError("posterior row " + std::to_string(i) + " does not sum to 1");
    }
  }
  return Posteriors(std::move(probabilities));
}

ForwardResult forward(const MlpModel& model, const Matrix& inputs, bool train_mode,
                      std::uint64_t rng_seed) {
  if (inputs.cols() != model.input_dim()) {
    throw DimensionError("input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
  }
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.revision = model.revision;
  cache.layer_dims = model.layer_dims;
  cache.inputs.push_back(inputs);

  const std::size_t layers = model.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = affine(cache.inputs.back(), model.weights[l], model.biases[l]);
    if (l + 1 == layers) {
      result.logits = std::move(z);
      break;
    }
    Matrix a(z.rows(), z.cols());
    for (std::size_t k = 0; k < z.size(); ++k) a.data()[k] = activate(model.activation, z.data()[k]);
    if (l + 2 == layers && train_mode && model.dropout_rate > 0.0) {
      Rng rng(rng_seed);
      const double keep = 1.0 - model.dropout_rate;
      Matrix mask(a.rows(), a.cols());
      for (std::size_t k = 0; k < mask.size(); ++k) {
        mask.data()[k] = rng.uniform() < keep ? 1.0 / keep : 0.0;
        a.data()[k] *= mask.data()[k];
      }
      cache.dropout_mask = std::move(mask);
    }
    cache.pre_activations.push_back(std::move(z));
    cache.inputs.push_back(std::move(a));
  }
  result.posteriors = Posteriors::softmax(result.logits);
  return result;
}

Matrix predict_logits(const MlpModel& model, const Matrix& inputs) {
  return forward(model, inputs).logits;
}

Posteriors predict(const MlpModel& model, const Matrix& inputs) {
  return forward(model, inputs).posteriors;
}

std::vector<double> per_sample_cross_entropy(const Posteriors& posteriors, const Matrix& targets) {
  if (posteriors.rows() != targets.rows() || posteriors.cols() != targets.cols()) {
    throw DimensionError("posteriors and targets differ in shape");
  }
  std::vector<double> losses(posteriors.rows());
  for (std::size_t i = 0; i < posteriors.rows(); ++i) {
    double loss = 0.0;
    for (std::size_t c = 0; c < posteriors.cols(); ++c) {
      const double t = targets(i, c);
      if (t != 0.0) loss -= t * std::log(std::max(posteriors(i, c), kLogClamp));
    }
    losses[i] = loss;
  }
  return losses;
}

double cross_entropy(const Posteriors& posteriors, const Matrix& targets) {
  const auto losses = per_sample_cross_entropy(posteriors, targets);
  if (losses.empty()) throw DimensionError("cross entropy of an empty batch");
  double total = 0.0;
  for (double v : losses) total += v;
  return total / static_cast<double>(losses.size());
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    g.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  return g;
}

double Gradients::l1_norm() const {
  double total = 0.0;
  for (const auto& w : weights)
    for (double v : w.data()) total += std::abs(v);
  for (const auto& b : biases)
    for (double v : b) total += std::abs(v);
  return total;
}

double Gradients::l2_norm() const {
  double total = 0.0;
  for (const auto& w : weights)
    for (double v : w.data()) total += v * v;
  for (const auto& b : biases)
    for (double v : b) total += v * v;
  return std::sqrt(total);
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    if (!w.all_finite()) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

BackpropResult backpropagate(const MlpModel& model, const ForwardCache& cache,
                             const Matrix& logit_gradient, bool with_input_gradient) {
  if (cache.revision != model.revision || cache.layer_dims != model.layer_dims ||
      cache.inputs.size() != model.num_layers()) {
    throw UsageError("forward cache does not belong to this model state");
  }
  const std::size_t batch = cache.batch_size();
  if (logit_gradient.rows() != batch || logit_gradient.cols() != model.num_classes()) {
    throw DimensionError("logit gradient shape does not match the cached batch");
  }

  BackpropResult result;
  result.gradients = Gradients::zeros_like(model);
  Matrix delta = logit_gradient;
  for (std::size_t l = model.num_layers(); l-- > 0;) {
    const Matrix& input = cache.inputs[l];
    Matrix& gw = result.gradients.weights[l];
    auto& gb = result.gradients.biases[l];
    for (std::size_t i = 0; i < batch; ++i) {
      auto d = delta.row(i);
      auto x = input.row(i);
      for (std::size_t j = 0; j < d.size(); ++j) gb[j] += d[j];
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double a = x[k];
        if (a == 0.0) continue;
        auto row = gw.row(k);
        for (std::size_t j = 0; j < d.size(); ++j) row[j] += a * d[j];
      }
    }
    if (l == 0 && !with_input_gradient) break;

    const Matrix& w = model.weights[l];
    Matrix upstream(batch, w.rows());
    for (std::size_t i = 0; i < batch; ++i) {
      auto d = delta.row(i);
      auto u = upstream.row(i);
      for (std::size_t k = 0; k < w.rows(); ++k) {
        auto wk = w.row(k);
        double s = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) s += d[j] * wk[j];
        u[k] = s;
      }
    }
    if (l == 0) {
      result.input_gradient = std::move(upstream);
      break;
    }
    if (l + 1 == model.num_layers() && !cache.dropout_mask.empty()) {
      for (std::size_t k = 0; k < upstream.size(); ++k) upstream.data()[k] *= cache.dropout_mask.data()[k];
    }
    const Matrix& pre = cache.pre_activations[l - 1];
    for (std::size_t k = 0; k < upstream.size(); ++k) {
      upstream.data()[k] *= activate_derivative(model.activation, pre.data()[k]);
    }
    delta = std::move(upstream);
  }
  return result;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Posteriors& posteriors,
                   const Matrix& targets) {
  if (posteriors.rows() != targets.rows() || posteriors.cols() != targets.cols()) {
    throw DimensionError("posteriors and targets differ in shape");
  }
  if (posteriors.rows() != cache.batch_size()) {
    throw UsageError("posteriors do not come from the cached forward pass");
  }
  const double scale = 1.0 / static_cast<double>(posteriors.rows());
  Matrix residual(targets.rows(), targets.cols());
  for (std::size_t k = 0; k < residual.size(); ++k) {
    residual.data()[k] = (posteriors.values().data()[k] - targets.data()[k]) * scale;
  }
  return backpropagate(model, cache, residual).gradients;
}

double OptimizerState::current_rate() const {
  double rate = learning_rate;
  for (const auto& m : lr_schedule) {
    if (epoch >= m.epoch) rate *= m.multiplier;
  }
  return rate;
}

void OptimizerState::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  for (const auto& m : lr_schedule) {
    if (!(m.multiplier > 0.0)) throw ConfigError("lr schedule multipliers must be positive");
  }
}

void sgd_step(MlpModel& model, OptimizerState& state, const Gradients& gradients,
              StepDirection direction) {
  check_same_shape(gradients, model);
  if (!gradients.all_finite()) throw NumericError("non-finite gradient entry");
  const double rate = state.current_rate();

  if (direction == StepDirection::kAscent) {
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      auto w = model.weights[l].data();
      auto gw = gradients.weights[l].data();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += rate * gw[k];
      for (std::size_t j = 0; j < model.biases[l].size(); ++j) {
        model.biases[l][j] += rate * gradients.biases[l][j];
      }
    }
    ++model.revision;
    return;
  }

  if (state.velocity.weights.empty()) state.velocity = Gradients::zeros_like(model);
  check_same_shape(state.velocity, model);
  auto update = [&](double& param, double& velocity, double grad) {
    const double g = grad + state.weight_decay * param;
    velocity = state.momentum * velocity + g;
    param -= rate * velocity;
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    auto w = model.weights[l].data();
    auto v = state.velocity.weights[l].data();
    auto gw = gradients.weights[l].data();
    for (std::size_t k = 0; k < w.size(); ++k) update(w[k], v[k], gw[k]);
    for (std::size_t j = 0; j < model.biases[l].size(); ++j) {
      update(model.biases[l][j], state.velocity.biases[l][j], gradients.biases[l][j]);
    }
  }
  ++model.revision;
}

std::vector<GradNorms> per_sample_grad_norms(const MlpModel& model, const Matrix& inputs,
                                             std::span<const int> labels) {
  if (labels.size() != inputs.rows()) throw DimensionError("label count differs from input rows");
  const Matrix targets = one_hot(labels, model.num_classes());
  std::vector<GradNorms> norms(inputs.rows());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const std::size_t index[] = {i};
    const auto fwd = forward(model, inputs.select_rows(index));
    Matrix residual(1, model.num_classes());
    for (std::size_t c = 0; c < residual.cols(); ++c) {
      residual(0, c) = fwd.posteriors(0, c) - targets(i, c);
    }
    const auto bp = backpropagate(model, fwd.cache, residual, true);
    GradNorms& n = norms[i];
    double sq = 0.0;
    for (double v : bp.input_gradient.data()) {
      n.x_l1 += std::abs(v);
      sq += v * v;
    }
    n.x_l2 = std::sqrt(sq);
    n.w_l1 = bp.gradients.l1_norm();
    n.w_l2 = bp.gradients.l2_norm();
  }
  return norms;
}

std::string model_to_json(const MlpModel& model) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["layer_dims"] = model.layer_dims;
  doc["activation"] = std::string(to_string(model.activation));
  doc["dropout_rate"] = model.dropout_rate;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    auto w = model.weights[l].data();
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    biases.push_back(model.biases[l]);
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc.dump() + "\n";
}

MlpModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ConfigError("unsupported checkpoint format_version");
    }
    MlpModel model;
    model.layer_dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    model.activation = parse_activation(doc.at("activation").get<std::string>());
    model.dropout_rate = doc.at("dropout_rate").get<double>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (model.layer_dims.size() < 2 || weights.size() + 1 != model.layer_dims.size() ||
        biases.size() != weights.size()) {
      throw DimensionError("checkpoint layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      model.weights.emplace_back(model.layer_dims[l], model.layer_dims[l + 1],
                                 weights[l].get<std::vector<double>>());
      model.biases.push_back(biases[l].get<std::vector<double>>());
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << model_to_json(model);
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace relaxmia::nn
