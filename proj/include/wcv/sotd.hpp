#pragma once

#include "wcv/dataset.hpp"
#include "wcv/ensemble.hpp"
#include "wcv/nn.hpp"

namespace wcv {

// Student setup for soft target distillation. The student is initialized and
// shuffled with train.seed.
struct SotdConfig {
  MlpConfig mlp;
  TrainConfig train;
  KlDirection kl_direction = KlDirection::as_written;
};

// Trains a fresh classifier on the KL divergence to `scores` only. Hard labels
// in `dataset` are never read. Throws ConfigError on a missing score entry.
MlpModel sotd_train(const Dataset& dataset, const ScoreTable& scores, const SotdConfig& config);

} // namespace wcv
