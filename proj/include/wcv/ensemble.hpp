#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/nn.hpp"

namespace wcv {

struct EnsembleConfig {
  std::size_t n_components = 5;
  MlpConfig mlp;
  TrainConfig train;
  // Component i is initialized and shuffled with base_seed + i.
  std::uint64_t base_seed = 0;

  void validate() const;
};

// Averaged ensemble posteriors keyed by sample id, kept in insertion order.
class ScoreTable {
public:
  struct Entry {
    std::string id;
    Posterior score;
    bool operator==(const Entry&) const = default;
  };

  ScoreTable() = default;

  // Throws DuplicateIdError on a repeated id, ConfigError on an invalid posterior.
  void add(std::string id, Posterior score);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const Posterior* find(const std::string& id) const;
  // Throws ConfigError when the id is missing.
  const Posterior& at(const std::string& id) const;

  // Scores in dataset order; throws ConfigError on any missing sample.
  std::vector<Posterior> aligned(const Dataset& dataset) const;

  bool operator==(const ScoreTable& other) const { return entries_ == other.entries_; }

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Components are independent; `jobs` only bounds how many train at once.
std::vector<MlpModel> train_ensemble(const Dataset& dataset, const EnsembleConfig& config,
                                     std::size_t jobs = 1);

// Arithmetic mean of component posteriors per sample. Throws ConfigError on an
// empty model list.
ScoreTable estimate_scores(std::span<const MlpModel> models, const Dataset& dataset);

// Scores for every sample from ensembles that never saw it: stratified inner
// folds, each held-out part scored by an ensemble trained on the rest.
ScoreTable estimate_scores_cross_fitted(const Dataset& dataset, const EnsembleConfig& config,
                                        std::size_t inner_folds);

// argmax of (p_pos, p_neg); exact ties go to negative.
Label fuse_decision(const Posterior& score);
std::vector<Label> ensemble_classify(const ScoreTable& scores);

enum class AlignmentTarget { p_pos, p_neg };

// Pearson r between the chosen score component and cognitive_score, over
// samples that carry both. Throws ConfigError with fewer than two such samples
// or zero variance on either side.
double score_alignment(const ScoreTable& scores, const Dataset& dataset,
                       AlignmentTarget target = AlignmentTarget::p_pos);

double pearson(std::span<const double> x, std::span<const double> y);

// One JSON record per line: {id, p_pos, p_neg, cognitive_score?}.
std::string format_score_export(const ScoreTable& scores, const Dataset& dataset);

} // namespace wcv
