#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wcv {

enum class Label : std::uint8_t { negative = 0, positive = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }

struct Sample {
  std::string id;
  Label label = Label::negative;
  std::vector<double> features;
  // Assistant label (e.g. a cognitive test score). Never used for training.
  std::optional<double> cognitive_score;

  bool operator==(const Sample&) const = default;
};

// Immutable, validated collection of samples sharing one feature dimension.
class Dataset {
public:
  // Throws ConfigError (empty / non-finite), DimensionError or DuplicateIdError.
  explicit Dataset(std::vector<Sample> samples);

  std::size_t size() const { return samples_.size(); }
  std::size_t dim() const { return dim_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  std::size_t count(Label label) const;

  // Samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;

private:
  std::vector<Sample> samples_;
  std::size_t dim_ = 0;
};

// Newline-delimited JSON records: {"id", "label", "features", "cognitive_score"?}.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view text);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string format_dataset(const Dataset& dataset);

struct SeverityComponent {
  double mean = 0.0;
  double std = 1.0;
  double weight = 1.0;
};

// Synthetic severity continuum on a [0, 30] cognitive-score-like scale.
// Negatives cluster near the healthy end; positives are a skewed mixture.
struct SyntheticConfig {
  std::size_t n_neg = 240;
  std::size_t n_pos = 160;
  std::size_t dim = 32;
  double neg_mean = 27.0;
  double neg_std = 1.5;
  std::vector<SeverityComponent> pos_components{{20.0, 3.0, 0.8}, {8.0, 3.0, 0.2}};
  double noise_std = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kSeverityMax = 30.0;

// Signal magnitude for a severity: 1 at severity 0, 0 at the healthy end.
inline double severity_signal(double severity) {
  return (kSeverityMax - severity) / kSeverityMax;
}

Dataset generate_synthetic(const SyntheticConfig& config);

} // namespace wcv
