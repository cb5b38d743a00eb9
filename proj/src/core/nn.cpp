#include "wcv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "wcv/error.hpp"
#include "wcv/rng.hpp"

namespace wcv {

using json = nlohmann::ordered_json;

double clamp_probability(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void validate_posterior(const Posterior& p) {
  if (!(p.p_pos >= 0.0 && p.p_pos <= 1.0 && p.p_neg >= 0.0 && p.p_neg <= 1.0))
    throw ConfigError("posterior components must lie in [0, 1]");
  if (std::abs(p.p_pos + p.p_neg - 1.0) > 1e-9) throw ConfigError("posterior components must sum to 1");
}

void MlpConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (hidden_sizes.empty()) throw ConfigError("at least one hidden layer is required");
  for (auto h : hidden_sizes)
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpModel init_model(const MlpConfig& config, std::uint64_t seed) {
  config.validate();
  MlpModel model;
  model.config = config;
  Rng rng(derive_seed(seed, {stream::init}));
  std::size_t fan_in = config.input_dim;
  auto add_layer = [&](std::size_t out) {
    DenseLayer layer;
    layer.in = fan_in;
    layer.out = out;
    layer.weights.resize(out * fan_in);
    layer.bias.assign(out, 0.0);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& w : layer.weights) w = dist(rng);
    model.layers.push_back(std::move(layer));
    fan_in = out;
  };
  for (auto h : config.hidden_sizes) add_layer(h);
  add_layer(2);
  return model;
}

Posterior softmax2(double logit_pos, double logit_neg) {
  const double m = std::max(logit_pos, logit_neg);
  const double ep = std::exp(logit_pos - m);
  const double en = std::exp(logit_neg - m);
  const double s = ep + en;
  return {ep / s, en / s};
}

double bce_loss(const Posterior& posterior, Label label, double weight) {
  return weight * -std::log(clamp_probability(posterior.of(label)));
}

namespace {

double xlogy_ratio(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }

} // namespace

double kl_loss(const Posterior& student, const Posterior& teacher) {
  return xlogy_ratio(student.p_pos, clamp_probability(teacher.p_pos)) +
         xlogy_ratio(student.p_neg, clamp_probability(teacher.p_neg));
}

double kl_loss_reverse(const Posterior& student, const Posterior& teacher) {
  const double tp = clamp_probability(teacher.p_pos);
  const double tn = clamp_probability(teacher.p_neg);
  return tp * std::log(tp / clamp_probability(student.p_pos)) +
         tn * std::log(tn / clamp_probability(student.p_neg));
}

double sample_loss(const Posterior& output, const Dataset& dataset, std::size_t index,
                   const Objective& objective) {
  if (const auto* bce = std::get_if<WeightedBce>(&objective)) {
    const double w = bce->weights.empty() ? 1.0 : bce->weights[index];
    return bce_loss(output, dataset[index].label, w);
  }
  const auto& soft = std::get<SoftTargets>(objective);
  return soft.direction == KlDirection::as_written ? kl_loss(output, soft.targets[index])
                                                   : kl_loss_reverse(output, soft.targets[index]);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

namespace {

void check_input(const MlpModel& model, std::size_t size) {
  if (size != model.config.input_dim)
    throw DimensionError("feature vector has " + std::to_string(size) + " values, model expects " +
                         std::to_string(model.config.input_dim));
}

// Forward/backward buffers reused across samples.
class Backprop {
public:
  explicit Backprop(const MlpModel& model) : model_(model) {
    acts_.resize(model.layers.size() + 1);
    deltas_.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      acts_[l + 1].resize(model.layers[l].out);
      deltas_[l].resize(model.layers[l].out);
    }
  }

  // Returns the output logits (positive, negative).
  std::pair<double, double> forward(std::span<const double> x) {
    acts_[0].assign(x.begin(), x.end());
    const std::size_t last = model_.layers.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
      const auto& layer = model_.layers[l];
      const auto& in = acts_[l];
      auto& out = acts_[l + 1];
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double* row = layer.weights.data() + r * layer.in;
        double z = layer.bias[r];
        for (std::size_t c = 0; c < layer.in; ++c) z += row[c] * in[c];
        out[r] = (l == last || z > 0.0) ? z : 0.0;
      }
    }
    return {acts_.back()[0], acts_.back()[1]};
  }

  // Accumulates dL/dtheta given dL/dlogits into grad.
  void backward(double d_pos, double d_neg, Gradients& grad) {
    const std::size_t n = model_.layers.size();
    deltas_[n - 1][0] = d_pos;
    deltas_[n - 1][1] = d_neg;
    for (std::size_t l = n; l-- > 0;) {
      const auto& layer = model_.layers[l];
      auto& g = grad.layers[l];
      const auto& in = acts_[l];
      const auto& delta = deltas_[l];
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        double* grow = g.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * in[c];
        g.bias[r] += d;
      }
      if (l == 0) break;
      auto& prev = deltas_[l - 1];
      std::fill(prev.begin(), prev.end(), 0.0);
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = layer.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) prev[c] += d * row[c];
      }
      // ReLU derivative: activation > 0 iff pre-activation > 0.
      for (std::size_t c = 0; c < prev.size(); ++c)
        if (!(in[c] > 0.0)) prev[c] = 0.0;
    }
  }

private:
  const MlpModel& model_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> deltas_;
};

struct OutputGrad {
  double loss;
  double d_pos;
  double d_neg;
};

// Loss and dL/dlogits for one sample.
OutputGrad output_gradient(double z_pos, double z_neg, const Dataset& dataset, std::size_t index,
                           const Objective& objective) {
  const Posterior s = softmax2(z_pos, z_neg);
  if (const auto* bce = std::get_if<WeightedBce>(&objective)) {
    const double w = bce->weights.empty() ? 1.0 : bce->weights[index];
    const Label y = dataset[index].label;
    const double p = s.of(y);
    const double loss = w * -std::log(clamp_probability(p));
    if (p <= kProbClamp || p >= 1.0 - kProbClamp) return {loss, 0.0, 0.0};
    const double y_pos = y == Label::positive ? 1.0 : 0.0;
    return {loss, w * (s.p_pos - y_pos), w * (s.p_neg - (1.0 - y_pos))};
  }

  const auto& soft = std::get<SoftTargets>(objective);
  const Posterior& t = soft.targets[index];
  const double tp = clamp_probability(t.p_pos);
  const double tn = clamp_probability(t.p_neg);
  const double m = std::max(z_pos, z_neg);
  const double lse = m + std::log(std::exp(z_pos - m) + std::exp(z_neg - m));
  const double ls_pos = z_pos - lse;
  const double ls_neg = z_neg - lse;
  if (soft.direction == KlDirection::as_written) {
    const double g_pos = ls_pos - std::log(tp);
    const double g_neg = ls_neg - std::log(tn);
    const double loss = s.p_pos * g_pos + s.p_neg * g_neg;
    return {loss, s.p_pos * (g_pos - loss), s.p_neg * (g_neg - loss)};
  }
  const double loss = tp * (std::log(tp) - ls_pos) + tn * (std::log(tn) - ls_neg);
  const double mass = tp + tn;
  return {loss, s.p_pos * mass - tp, s.p_neg * mass - tn};
}

void check_objective(const Dataset& dataset, const Objective& objective) {
  if (const auto* bce = std::get_if<WeightedBce>(&objective)) {
    if (!bce->weights.empty() && bce->weights.size() != dataset.size())
      throw ConfigError("sample weights (" + std::to_string(bce->weights.size()) +
                        ") are not aligned with the dataset (" + std::to_string(dataset.size()) + ")");
    for (double w : bce->weights)
      if (!(std::isfinite(w) && w >= 0.0)) throw ConfigError("sample weights must be finite and >= 0");
    return;
  }
  const auto& soft = std::get<SoftTargets>(objective);
  if (soft.targets.size() != dataset.size())
    throw ConfigError("soft targets (" + std::to_string(soft.targets.size()) +
                      ") are not aligned with the dataset (" + std::to_string(dataset.size()) + ")");
  for (const auto& t : soft.targets) validate_posterior(t);
}

} // namespace

Posterior forward(const MlpModel& model, std::span<const double> features) {
  check_input(model, features.size());
  Backprop bp(model);
  auto [zp, zn] = bp.forward(features);
  return softmax2(zp, zn);
}

std::vector<Posterior> predict(const MlpModel& model, const Dataset& dataset) {
  check_input(model, dataset.dim());
  Backprop bp(model);
  std::vector<Posterior> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset) {
    auto [zp, zn] = bp.forward(s.features);
    out.push_back(softmax2(zp, zn));
  }
  return out;
}

Gradients zero_gradients(const MlpModel& model) {
  Gradients g;
  g.layers.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    DenseLayer z;
    z.in = l.in;
    z.out = l.out;
    z.weights.assign(l.weights.size(), 0.0);
    z.bias.assign(l.bias.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

namespace {

double accumulate_batch(Backprop& bp, const Dataset& dataset, std::span<const std::size_t> batch,
                        const Objective& objective, Gradients& grad) {
  for (auto& l : grad.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  double total = 0.0;
  for (auto i : batch) {
    auto [zp, zn] = bp.forward(dataset[i].features);
    auto og = output_gradient(zp, zn, dataset, i, objective);
    total += og.loss;
    bp.backward(og.d_pos, og.d_neg, grad);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto& l : grad.layers) {
    for (auto& v : l.weights) v *= scale;
    for (auto& v : l.bias) v *= scale;
  }
  return total * scale;
}

} // namespace

double loss_and_gradient(const MlpModel& model, const Dataset& dataset,
                         std::span<const std::size_t> batch, const Objective& objective,
                         Gradients& grad) {
  check_input(model, dataset.dim());
  check_objective(dataset, objective);
  if (batch.empty()) throw ConfigError("empty batch");
  if (grad.layers.size() != model.layers.size()) grad = zero_gradients(model);
  Backprop bp(model);
  return accumulate_batch(bp, dataset, batch, objective, grad);
}

double mean_loss(const MlpModel& model, const Dataset& dataset, const Objective& objective) {
  check_objective(dataset, objective);
  const auto outputs = predict(model, dataset);
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) total += sample_loss(outputs[i], dataset, i, objective);
  return total / static_cast<double>(dataset.size());
}

namespace {

std::vector<std::size_t> draw_balanced(const Dataset& dataset, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (dataset[i].label == Label::positive ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw ConfigError("class-balanced sampling needs both classes");
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
  std::vector<std::size_t> out(dataset.size());
  for (auto& o : out) o = coin(rng) ? pos[pick_pos(rng)] : neg[pick_neg(rng)];
  return out;
}

} // namespace

std::vector<std::size_t> balanced_draw(const Dataset& dataset, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::resample}));
  return draw_balanced(dataset, rng);
}

MlpModel train(MlpModel model, const Dataset& dataset, const TrainConfig& config,
               const Objective& objective) {
  config.validate();
  check_input(model, dataset.dim());
  check_objective(dataset, objective);
  if (config.epochs == 0) return model;

  Gradients grad = zero_gradients(model);
  Gradients m = zero_gradients(model);
  Gradients v = zero_gradients(model);
  Backprop bp(model);
  Rng rng(derive_seed(config.seed, {stream::shuffle}));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;

  auto adam_update = [&](std::vector<double>& param, std::vector<double>& g, std::vector<double>& mm,
                         std::vector<double>& vv, double c1, double c2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      mm[i] = config.beta1 * mm[i] + (1.0 - config.beta1) * g[i];
      vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * g[i] * g[i];
      param[i] -= config.learning_rate * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + config.epsilon);
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.sampling == Sampling::class_balanced) {
      order = draw_balanced(dataset, rng);
    } else {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
      }
    }
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, len);
      const double loss = accumulate_batch(bp, dataset, batch, objective, grad);
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + " (step " + std::to_string(step) + ")");
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        adam_update(model.layers[l].weights, grad.layers[l].weights, m.layers[l].weights,
                    v.layers[l].weights, c1, c2);
        adam_update(model.layers[l].bias, grad.layers[l].bias, m.layers[l].bias, v.layers[l].bias, c1, c2);
      }
    }
  }
  for (const auto& l : model.layers) {
    for (double w : l.weights)
      if (!std::isfinite(w)) throw NumericError("training produced a non-finite weight");
    for (double b : l.bias)
      if (!std::isfinite(b)) throw NumericError("training produced a non-finite bias");
  }
  return model;
}

namespace {

json model_to_json(const MlpModel& model) {
  json j;
  j["format"] = "wcv-mlp";
  j["version"] = 1;
  j["input_dim"] = model.config.input_dim;
  j["hidden_sizes"] = model.config.hidden_sizes;
  j["activation"] = "relu";
  j["output"] = "softmax2(pos,neg)";
  json layers = json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  }
  j["layers"] = std::move(layers);
  return j;
}

MlpModel model_from_json(const json& j) {
  if (j.value("format", "") != "wcv-mlp") throw ConfigError("not a wcv-mlp model document");
  MlpModel model;
  model.config.input_dim = j.at("input_dim").get<std::size_t>();
  model.config.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
  model.config.validate();
  std::size_t fan_in = model.config.input_dim;
  auto sizes = model.config.hidden_sizes;
  sizes.push_back(2);
  const auto& layers = j.at("layers");
  if (layers.size() != sizes.size()) throw DimensionError("model layer count does not match hidden_sizes");
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = layers[l].at("in").get<std::size_t>();
    layer.out = layers[l].at("out").get<std::size_t>();
    layer.weights = layers[l].at("weights").get<std::vector<double>>();
    layer.bias = layers[l].at("bias").get<std::vector<double>>();
    if (layer.in != fan_in || layer.out != sizes[l] || layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out)
      throw DimensionError("layer " + std::to_string(l) + " shape is inconsistent with the config");
    fan_in = layer.out;
    model.layers.push_back(std::move(layer));
  }
  return model;
}

} // namespace

std::string serialize_model(const MlpModel& model) { return model_to_json(model).dump(1) + "\n"; }

MlpModel deserialize_model(std::string_view text) {
  try {
    return model_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  }
}

std::string serialize_models(std::span<const MlpModel> models) {
  if (models.empty()) throw ConfigError("no models to serialize");
  if (models.size() == 1) return serialize_model(models.front());
  json j;
  j["format"] = "wcv-ensemble";
  j["version"] = 1;
  j["fusion"] = "mean-posterior";
  json comps = json::array();
  for (const auto& m : models) comps.push_back(model_to_json(m));
  j["components"] = std::move(comps);
  return j.dump(1) + "\n";
}

std::vector<MlpModel> deserialize_models(std::string_view text) {
  try {
    auto j = json::parse(text);
    if (j.value("format", "") == "wcv-ensemble") {
      std::vector<MlpModel> out;
      for (const auto& c : j.at("components")) out.push_back(model_from_json(c));
      if (out.empty()) throw ConfigError("ensemble document has no components");
      return out;
    }
    return {model_from_json(j)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  }
}

} // namespace wcv
