#include "wcv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "wcv/error.hpp"
#include "wcv/folds.hpp"
#include "wcv/parallel.hpp"
#include "wcv/rng.hpp"

namespace wcv {

void EnsembleConfig::validate() const {
  if (n_components < 1) throw ConfigError("ensemble needs at least one component");
  mlp.validate();
  train.validate();
}

void ScoreTable::add(std::string id, Posterior score) {
  validate_posterior(score);
  if (index_.contains(id)) throw DuplicateIdError("score table already has id '" + id + "'");
  index_.emplace(id, entries_.size());
  entries_.push_back({std::move(id), score});
}

const Posterior* ScoreTable::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second].score;
}

const Posterior& ScoreTable::at(const std::string& id) const {
  const auto* p = find(id);
  if (!p) throw ConfigError("no score for sample '" + id + "'");
  return *p;
}

std::vector<Posterior> ScoreTable::aligned(const Dataset& dataset) const {
  std::vector<Posterior> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset) out.push_back(at(s.id));
  return out;
}

std::vector<MlpModel> train_ensemble(const Dataset& dataset, const EnsembleConfig& config,
                                     std::size_t jobs) {
  config.validate();
  std::vector<MlpModel> models(config.n_components);
  parallel_for(config.n_components, jobs, [&](std::size_t i) {
    TrainConfig tc = config.train;
    tc.seed = config.base_seed + i;
    models[i] = train(init_model(config.mlp, tc.seed), dataset, tc, WeightedBce{});
  });
  return models;
}

ScoreTable estimate_scores(std::span<const MlpModel> models, const Dataset& dataset) {
  if (models.empty()) throw ConfigError("cannot estimate scores from an empty model list");
  std::vector<Posterior> sum(dataset.size(), Posterior{0.0, 0.0});
  for (const auto& m : models) {
    auto post = predict(m, dataset);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i].p_pos += post[i].p_pos;
      sum[i].p_neg += post[i].p_neg;
    }
  }
  const double k = static_cast<double>(models.size());
  ScoreTable table;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    table.add(dataset[i].id, {sum[i].p_pos / k, sum[i].p_neg / k});
  return table;
}

ScoreTable estimate_scores_cross_fitted(const Dataset& dataset, const EnsembleConfig& config,
                                        std::size_t inner_folds) {
  config.validate();
  const auto plan =
      stratified_folds(dataset, inner_folds, derive_seed(config.base_seed, {stream::fold_plan}));
  std::vector<Posterior> scores(dataset.size());
  for (std::size_t f = 0; f < plan.k(); ++f) {
    const auto train_idx = plan.train_indices(f, dataset.size());
    EnsembleConfig inner = config;
    inner.base_seed = derive_seed(config.base_seed, {stream::cell, f});
    const auto models = train_ensemble(dataset.subset(train_idx), inner);
    const auto held_out = dataset.subset(plan.test_folds[f]);
    const auto table = estimate_scores(models, held_out);
    for (std::size_t j = 0; j < plan.test_folds[f].size(); ++j)
      scores[plan.test_folds[f][j]] = table.entries()[j].score;
  }
  ScoreTable table;
  for (std::size_t i = 0; i < dataset.size(); ++i) table.add(dataset[i].id, scores[i]);
  return table;
}

Label fuse_decision(const Posterior& score) {
  return score.p_pos > score.p_neg ? Label::positive : Label::negative;
}

std::vector<Label> ensemble_classify(const ScoreTable& scores) {
  std::vector<Label> out;
  out.reserve(scores.size());
  for (const auto& e : scores.entries()) out.push_back(fuse_decision(e.score));
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  if (x.size() < 2) throw ConfigError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ConfigError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double score_alignment(const ScoreTable& scores, const Dataset& dataset, AlignmentTarget target) {
  std::vector<double> xs, ys;
  for (const auto& s : dataset) {
    const auto* p = scores.find(s.id);
    if (!p || !s.cognitive_score) continue;
    xs.push_back(target == AlignmentTarget::p_pos ? p->p_pos : p->p_neg);
    ys.push_back(*s.cognitive_score);
  }
  if (xs.size() < 2) throw ConfigError("score alignment needs at least two scored samples with cognitive scores");
  return pearson(xs, ys);
}

std::string format_score_export(const ScoreTable& scores, const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset) {
    const auto& p = scores.at(s.id);
    nlohmann::ordered_json rec;
    rec["id"] = s.id;
    rec["p_pos"] = p.p_pos;
    rec["p_neg"] = p.p_neg;
    if (s.cognitive_score) rec["cognitive_score"] = *s.cognitive_score;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

} // namespace wcv
