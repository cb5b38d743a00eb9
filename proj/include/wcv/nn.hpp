#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wcv/dataset.hpp"

namespace wcv {

// Lower/upper clamp applied to every probability before a logarithm.
inline constexpr double kProbClamp = 1e-7;

double clamp_probability(double p);

struct Posterior {
  double p_pos = 0.5;
  double p_neg = 0.5;

  double of(Label label) const { return label == Label::positive ? p_pos : p_neg; }
  bool operator==(const Posterior&) const = default;
};

// Throws ConfigError unless both components lie in [0,1] and sum to 1 within 1e-9.
void validate_posterior(const Posterior& p);

struct MlpConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes{32, 16};

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

// Dense layer, weights row-major [out][in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
  bool operator==(const DenseLayer&) const = default;
};

// ReLU hidden layers followed by a two-unit softmax head. Output unit 0 is the
// positive class, unit 1 the negative class.
struct MlpModel {
  MlpConfig config;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  bool operator==(const MlpModel&) const = default;
};

// He-normal weights (variance 2 / fan_in), zero biases.
MlpModel init_model(const MlpConfig& config, std::uint64_t seed);

// Throws DimensionError when features.size() != input_dim.
Posterior forward(const MlpModel& model, std::span<const double> features);
std::vector<Posterior> predict(const MlpModel& model, const Dataset& dataset);

// Softmax of the two output logits (positive, negative).
Posterior softmax2(double logit_pos, double logit_neg);

// weight * -ln(clamp(p_label)).
double bce_loss(const Posterior& posterior, Label label, double weight);

// Student-led direction: sum_k student_k * ln(student_k / clamp(teacher_k)).
double kl_loss(const Posterior& student, const Posterior& teacher);
// Conventional direction: sum_k teacher_k * ln(teacher_k / clamp(student_k)).
double kl_loss_reverse(const Posterior& student, const Posterior& teacher);

enum class KlDirection { as_written, reverse };

struct WeightedBce {
  // Aligned with dataset order; empty means all weights 1.
  std::vector<double> weights;
};

struct SoftTargets {
  // Aligned with dataset order.
  std::vector<Posterior> targets;
  KlDirection direction = KlDirection::as_written;
};

using Objective = std::variant<WeightedBce, SoftTargets>;

double sample_loss(const Posterior& output, const Dataset& dataset, std::size_t index,
                   const Objective& objective);

enum class Sampling {
  shuffle,        // permutation of the dataset every epoch
  class_balanced  // with-replacement draw, per-sample rate ~ 1 / class frequency
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Sampling sampling = Sampling::shuffle;

  void validate() const;
};

// Same shapes as the model's layers.
struct Gradients {
  std::vector<DenseLayer> layers;
};

Gradients zero_gradients(const MlpModel& model);

// Mean loss over `batch` plus its gradient w.r.t. every parameter (written to
// `grad`, which is resized as needed).
double loss_and_gradient(const MlpModel& model, const Dataset& dataset,
                         std::span<const std::size_t> batch, const Objective& objective,
                         Gradients& grad);

// Mean per-sample loss over the whole dataset.
double mean_loss(const MlpModel& model, const Dataset& dataset, const Objective& objective);

// Mini-batch Adam. Throws NumericError on a non-finite loss, ConfigError on
// misaligned weights/targets, DimensionError on a feature-size mismatch.
MlpModel train(MlpModel model, const Dataset& dataset, const TrainConfig& config,
               const Objective& objective);

// Indices of one class-balanced epoch draw (size = dataset.size()).
std::vector<std::size_t> balanced_draw(const Dataset& dataset, std::uint64_t seed);

std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::string_view text);

// A single model is written in the plain model format; several models as an
// ensemble document. Both formats are accepted on read.
std::string serialize_models(std::span<const MlpModel> models);
std::vector<MlpModel> deserialize_models(std::string_view text);

} // namespace wcv
