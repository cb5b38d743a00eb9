#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/ensemble.hpp"
#include "wcv/nn.hpp"

namespace wcv {

struct KdeConfig {
  double bandwidth = 2.0;
  double bin_width = 2.0;
  // Control switch: replace every density by the same constant, which makes
  // all weights exactly 1.
  bool uniform_density = false;

  void validate() const;
};

// Bins with edges at integer multiples of bin_width.
struct Histogram {
  std::vector<double> centers;
  std::vector<double> frequencies;
};

// ln(clamp(p_pos) / clamp(p_neg)) per sample in dataset order.
std::vector<double> log_ratios(const ScoreTable& scores, const Dataset& dataset);
double log_ratio(const Posterior& score);

// Bins covering [min, max] of `ratios`; empty interior bins are kept at 0.
// Throws ConfigError on an empty input.
Histogram build_histogram(std::span<const double> ratios, const KdeConfig& config);

double gaussian_kernel(double x, double center, double bandwidth);

// p(l) = sum_b freq_b * K(l, c_b) for every l in `ratios`.
std::vector<double> kde_density(std::span<const double> ratios, const Histogram& histogram,
                                const KdeConfig& config);
// Same quantity in log space; stays finite where the density underflows.
std::vector<double> kde_log_density(std::span<const double> ratios, const Histogram& histogram,
                                    const KdeConfig& config);

struct WeightVector {
  std::vector<double> densities;
  std::vector<double> weights;
};

// Relative mass q = p / sum(p), raw weight -ln q, rescaled to mean 1.
// Throws ConfigError for fewer than two samples or non-positive densities.
WeightVector inre_weights(std::span<const double> densities);
// Same, from log densities.
std::vector<double> inre_weights_from_log(std::span<const double> log_densities);

struct InreDetail {
  std::vector<double> ratios;
  Histogram histogram;
  WeightVector weights;
};

// log_ratios -> build_histogram -> kde_density -> inre_weights.
InreDetail compute_inre_weights(const ScoreTable& scores, const Dataset& dataset,
                                const KdeConfig& config);

// Weighted-BCE training on hard labels with the weights above. The model is
// initialized and shuffled with train.seed.
MlpModel inre_train(const Dataset& dataset, const ScoreTable& scores, const KdeConfig& kde,
                    const TrainConfig& train, const MlpConfig& mlp);

// One JSON record per line: {id, l_x, density, weight, cognitive_score?}, plus
// "fold" when fold >= 0.
std::string format_weight_export(const Dataset& dataset, const InreDetail& detail, int fold = -1);

} // namespace wcv
