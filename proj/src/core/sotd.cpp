#include "wcv/sotd.hpp"

namespace wcv {

MlpModel sotd_train(const Dataset& dataset, const ScoreTable& scores, const SotdConfig& config) {
  SoftTargets objective{scores.aligned(dataset), config.kl_direction};
  TrainConfig tc = config.train;
  // Class-balanced sampling would read the hard labels.
  tc.sampling = Sampling::shuffle;
  return train(init_model(config.mlp, tc.seed), dataset, tc, objective);
}

} // namespace wcv
