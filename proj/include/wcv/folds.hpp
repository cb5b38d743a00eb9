#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wcv/dataset.hpp"

namespace wcv {

struct FoldPlan {
  // Disjoint held-out index sets covering the dataset, each sorted ascending.
  std::vector<std::vector<std::size_t>> test_folds;

  std::size_t k() const { return test_folds.size(); }
  // Complement of test fold `fold`, ascending.
  std::vector<std::size_t> train_indices(std::size_t fold, std::size_t n) const;
  bool operator==(const FoldPlan&) const = default;
};

// Per class: shuffle, then deal round-robin, continuing the deal position
// across classes so fold sizes differ by at most one. Throws ConfigError when
// k < 2 or a class has fewer than k members.
FoldPlan stratified_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

} // namespace wcv
