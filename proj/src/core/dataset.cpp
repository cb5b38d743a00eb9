#include "wcv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <unordered_set>

#include "wcv/error.hpp"
#include "wcv/io.hpp"
#include "wcv/rng.hpp"

namespace wcv {

using nlohmann::json;

Dataset::Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw ConfigError("dataset is empty");
  dim_ = samples_.front().features.size();
  if (dim_ == 0) throw DimensionError("sample '" + samples_.front().id + "' has no features");
  std::unordered_set<std::string> seen;
  seen.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (s.features.size() != dim_) {
      throw DimensionError("sample '" + s.id + "' has " + std::to_string(s.features.size()) +
                           " features, expected " + std::to_string(dim_));
    }
    if (!seen.insert(s.id).second) throw DuplicateIdError("duplicate sample id '" + s.id + "'");
    if (!std::all_of(s.features.begin(), s.features.end(), [](double v) { return std::isfinite(v); }))
      throw ConfigError("sample '" + s.id + "' has a non-finite feature");
    if (s.cognitive_score && !std::isfinite(*s.cognitive_score))
      throw ConfigError("sample '" + s.id + "' has a non-finite cognitive_score");
  }
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [&](const Sample& s) { return s.label == label; }));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i));
  return Dataset(std::move(out));
}

namespace {

Sample parse_record(std::string_view line, std::size_t lineno) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(lineno, e.what());
  }
  if (!rec.is_object()) throw ParseError(lineno, "record is not an object");

  Sample s;
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string()) throw ParseError(lineno, "missing string 'id'");
  s.id = id->get<std::string>();

  auto label = rec.find("label");
  if (label == rec.end() || !label->is_number_integer())
    throw ParseError(lineno, "missing integer 'label'");
  auto lv = label->get<long long>();
  if (lv != 0 && lv != 1) throw ParseError(lineno, "label must be 0 or 1");
  s.label = lv == 1 ? Label::positive : Label::negative;

  auto feats = rec.find("features");
  if (feats == rec.end() || !feats->is_array()) throw ParseError(lineno, "missing array 'features'");
  s.features.reserve(feats->size());
  for (const auto& v : *feats) {
    if (!v.is_number()) throw ParseError(lineno, "feature values must be numbers");
    s.features.push_back(v.get<double>());
  }

  auto cog = rec.find("cognitive_score");
  if (cog != rec.end() && !cog->is_null()) {
    if (!cog->is_number()) throw ParseError(lineno, "'cognitive_score' must be a number");
    s.cognitive_score = cog->get<double>();
  }
  return s;
}

} // namespace

Dataset parse_dataset(std::string_view text) {
  std::vector<Sample> samples;
  std::size_t lineno = 0;
  std::size_t expected_dim = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto s = parse_record(line, lineno);
    if (samples.empty()) {
      expected_dim = s.features.size();
    } else if (s.features.size() != expected_dim) {
      throw DimensionError("line " + std::to_string(lineno) + ": " + std::to_string(s.features.size()) +
                           " features, expected " + std::to_string(expected_dim));
    }
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples));
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

std::string format_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset) {
    nlohmann::ordered_json rec;
    rec["id"] = s.id;
    rec["label"] = to_int(s.label);
    rec["features"] = s.features;
    if (s.cognitive_score) rec["cognitive_score"] = *s.cognitive_score;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, format_dataset(dataset));
}

void SyntheticConfig::validate() const {
  if (n_neg < 1 || n_pos < 1) throw ConfigError("n_neg and n_pos must be at least 1");
  if (dim < 1) throw ConfigError("dim must be at least 1");
  if (!(neg_std >= 0.0)) throw ConfigError("negative severity std must be >= 0");
  if (!(noise_std > 0.0)) throw ConfigError("noise_std must be > 0");
  if (pos_components.empty()) throw ConfigError("at least one positive severity component required");
  double total = 0.0;
  for (const auto& c : pos_components) {
    if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
    if (!(c.std >= 0.0)) throw ConfigError("component std must be >= 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
}

namespace {

double draw_severity(Rng& rng, double mean, double std) {
  std::normal_distribution<double> n(mean, std);
  return std::clamp(std > 0.0 ? n(rng) : mean, 0.0, kSeverityMax);
}

} // namespace

Dataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();

  // Fixed unit direction carrying the severity signal.
  Rng dir_rng(derive_seed(config.seed, {stream::synth_direction}));
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::vector<double> direction(config.dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : direction) {
      v = unit_normal(dir_rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& v : direction) v /= norm;

  Rng rng(derive_seed(config.seed, {stream::synth_samples}));
  std::normal_distribution<double> noise(0.0, config.noise_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto make = [&](std::size_t index, Label label, double severity) {
    Sample s;
    s.id = (label == Label::positive ? "pos" : "neg") + std::to_string(index);
    s.label = label;
    s.cognitive_score = severity;
    s.features.resize(config.dim);
    const double g = severity_signal(severity);
    for (std::size_t j = 0; j < config.dim; ++j) s.features[j] = direction[j] * g + noise(rng);
    return s;
  };

  std::vector<Sample> samples;
  samples.reserve(config.n_neg + config.n_pos);
  for (std::size_t i = 0; i < config.n_neg; ++i)
    samples.push_back(make(i, Label::negative, draw_severity(rng, config.neg_mean, config.neg_std)));
  for (std::size_t i = 0; i < config.n_pos; ++i) {
    double u = unit(rng);
    const SeverityComponent* comp = &config.pos_components.back();
    double acc = 0.0;
    for (const auto& c : config.pos_components) {
      acc += c.weight;
      if (u < acc) {
        comp = &c;
        break;
      }
    }
    samples.push_back(make(i, Label::positive, draw_severity(rng, comp->mean, comp->std)));
  }
  return Dataset(std::move(samples));
}

} // namespace wcv
