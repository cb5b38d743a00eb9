#include "wcv/inre.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "wcv/error.hpp"

namespace wcv {

void KdeConfig::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ConfigError("bandwidth must be a finite value > 0");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw ConfigError("bin width must be a finite value > 0");
}

double log_ratio(const Posterior& score) {
  return std::log(clamp_probability(score.p_pos) / clamp_probability(score.p_neg));
}

std::vector<double> log_ratios(const ScoreTable& scores, const Dataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset) out.push_back(log_ratio(scores.at(s.id)));
  return out;
}

Histogram build_histogram(std::span<const double> ratios, const KdeConfig& config) {
  config.validate();
  if (ratios.empty()) throw ConfigError("cannot build a histogram from no values");
  for (double r : ratios)
    if (!std::isfinite(r)) throw ConfigError("log ratios must be finite");
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double first = std::floor(*lo / config.bin_width);
  const double last = std::floor(*hi / config.bin_width);
  const double span = last - first + 1.0;
  if (span > 1e7) throw ConfigError("bin width too small for the range of log ratios");
  const auto nbins = static_cast<std::size_t>(span);

  Histogram h;
  h.centers.resize(nbins);
  h.frequencies.assign(nbins, 0.0);
  for (std::size_t b = 0; b < nbins; ++b)
    h.centers[b] = (first + static_cast<double>(b) + 0.5) * config.bin_width;
  std::vector<std::size_t> counts(nbins, 0);
  for (double r : ratios) {
    auto b = static_cast<std::size_t>(std::floor(r / config.bin_width) - first);
    ++counts[std::min(b, nbins - 1)];
  }
  const double n = static_cast<double>(ratios.size());
  for (std::size_t b = 0; b < nbins; ++b) h.frequencies[b] = static_cast<double>(counts[b]) / n;
  return h;
}

double gaussian_kernel(double x, double center, double bandwidth) {
  const double u = (x - center) / bandwidth;
  return std::exp(-0.5 * u * u) / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> kde_density(std::span<const double> ratios, const Histogram& histogram,
                                const KdeConfig& config) {
  config.validate();
  std::vector<double> out;
  out.reserve(ratios.size());
  for (double l : ratios) {
    double p = 0.0;
    for (std::size_t b = 0; b < histogram.centers.size(); ++b)
      p += histogram.frequencies[b] * gaussian_kernel(l, histogram.centers[b], config.bandwidth);
    out.push_back(p);
  }
  return out;
}

std::vector<double> kde_log_density(std::span<const double> ratios, const Histogram& histogram,
                                    const KdeConfig& config) {
  config.validate();
  const double h = config.bandwidth;
  const double log_norm = -std::log(h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> terms;
  std::vector<double> out;
  out.reserve(ratios.size());
  for (double l : ratios) {
    terms.clear();
    for (std::size_t b = 0; b < histogram.centers.size(); ++b) {
      if (histogram.frequencies[b] <= 0.0) continue;
      const double u = (l - histogram.centers[b]) / h;
      terms.push_back(std::log(histogram.frequencies[b]) + log_norm - 0.5 * u * u);
    }
    if (terms.empty()) throw ConfigError("histogram has no mass");
    const double m = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    out.push_back(m + std::log(s));
  }
  return out;
}

std::vector<double> inre_weights_from_log(std::span<const double> log_densities) {
  const std::size_t n = log_densities.size();
  if (n < 2) throw ConfigError("instance weights need at least two samples");
  for (double d : log_densities)
    if (!std::isfinite(d)) throw ConfigError("densities must be positive and finite");

  // raw_i = -ln(p_i / sum_j p_j), evaluated in log space.
  const double m = *std::max_element(log_densities.begin(), log_densities.end());
  double s = 0.0;
  for (double d : log_densities) s += std::exp(d - m);
  const double lse = m + std::log(s);

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = lse - log_densities[i];
    if (!(raw[i] > 0.0)) {
      // p_i dominates the total; recover the small remainder directly.
      double others = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) others += std::exp(log_densities[j] - log_densities[i]);
      raw[i] = std::log1p(others);
    }
  }

  std::vector<double> weights(n);
  if (std::all_of(raw.begin(), raw.end(), [&](double r) { return r == raw.front(); })) {
    std::fill(weights.begin(), weights.end(), 1.0);
    return weights;
  }
  double mean = 0.0;
  for (double r : raw) mean += r;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = raw[i] / mean;
  return weights;
}

WeightVector inre_weights(std::span<const double> densities) {
  std::vector<double> logs;
  logs.reserve(densities.size());
  for (double d : densities) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("densities must be positive and finite");
    logs.push_back(std::log(d));
  }
  return {{densities.begin(), densities.end()}, inre_weights_from_log(logs)};
}

InreDetail compute_inre_weights(const ScoreTable& scores, const Dataset& dataset, const KdeConfig& config) {
  InreDetail d;
  d.ratios = log_ratios(scores, dataset);
  d.histogram = build_histogram(d.ratios, config);
  std::vector<double> logd = config.uniform_density ? std::vector<double>(d.ratios.size(), 0.0)
                                                    : kde_log_density(d.ratios, d.histogram, config);
  d.weights.weights = inre_weights_from_log(logd);
  d.weights.densities.reserve(logd.size());
  for (double l : logd) d.weights.densities.push_back(std::exp(l));
  return d;
}

MlpModel inre_train(const Dataset& dataset, const ScoreTable& scores, const KdeConfig& kde,
                    const TrainConfig& train_config, const MlpConfig& mlp) {
  auto detail = compute_inre_weights(scores, dataset, kde);
  return train(init_model(mlp, train_config.seed), dataset, train_config,
               WeightedBce{std::move(detail.weights.weights)});
}

std::string format_weight_export(const Dataset& dataset, const InreDetail& detail, int fold) {
  std::string out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    nlohmann::ordered_json rec;
    if (fold >= 0) rec["fold"] = fold;
    rec["id"] = dataset[i].id;
    rec["label"] = to_int(dataset[i].label);
    rec["l_x"] = detail.ratios[i];
    rec["density"] = detail.weights.densities[i];
    rec["weight"] = detail.weights.weights[i];
    if (dataset[i].cognitive_score) rec["cognitive_score"] = *dataset[i].cognitive_score;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

} // namespace wcv
