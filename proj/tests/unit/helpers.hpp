#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/nn.hpp"

namespace wcv::testing {

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wcv_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Two Gaussian blobs in `dim` dimensions, centers at +-sep along every axis.
inline Dataset make_blobs(std::size_t per_class, std::size_t dim, double sep, double spread,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool pos = i % 2 == 0;
    Sample x;
    x.id = "s" + std::to_string(i);
    x.label = pos ? Label::positive : Label::negative;
    for (std::size_t d = 0; d < dim; ++d) x.features.push_back((pos ? sep : -sep) + n(rng));
    x.cognitive_score = pos ? 10.0 + n(rng) : 28.0 + n(rng);
    s.push_back(std::move(x));
  }
  return Dataset(std::move(s));
}

inline Dataset with_flipped_labels(const Dataset& d) {
  auto s = d.samples();
  for (auto& x : s) x.label = x.label == Label::positive ? Label::negative : Label::positive;
  return Dataset(std::move(s));
}

inline Posterior random_posterior(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = u(rng);
  return {p, 1.0 - p};
}

} // namespace wcv::testing
