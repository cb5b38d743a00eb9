#include "wcv/folds.hpp"

#include <algorithm>
#include <numeric>

#include "wcv/error.hpp"
#include "wcv/rng.hpp"

namespace wcv {

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold, std::size_t n) const {
  const auto& test = test_folds.at(fold);
  std::vector<std::size_t> out;
  out.reserve(n - test.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < test.size() && test[t] == i) {
      ++t;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

FoldPlan stratified_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("number of folds must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (dataset[i].label == Label::positive ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k)
    throw ConfigError("each class needs at least " + std::to_string(k) + " samples for " +
                      std::to_string(k) + "-fold splitting (have " + std::to_string(pos.size()) +
                      " positive, " + std::to_string(neg.size()) + " negative)");

  Rng rng(seed);
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(v[i - 1], v[pick(rng)]);
    }
  };
  shuffle(pos);
  shuffle(neg);

  FoldPlan plan;
  plan.test_folds.resize(k);
  std::size_t slot = 0;
  for (auto i : pos) plan.test_folds[slot++ % k].push_back(i);
  for (auto i : neg) plan.test_folds[slot++ % k].push_back(i);
  for (auto& f : plan.test_folds) std::sort(f.begin(), f.end());
  return plan;
}

} // namespace wcv
