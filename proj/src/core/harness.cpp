#include "wcv/harness.hpp"

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "wcv/ensemble.hpp"
#include "wcv/error.hpp"
#include "wcv/io.hpp"
#include "wcv/parallel.hpp"
#include "wcv/rng.hpp"
#include "wcv/sotd.hpp"

namespace wcv {

using ojson = nlohmann::ordered_json;

Metrics compute_metrics(std::span<const Label> decisions, std::span<const Label> labels) {
  if (decisions.size() != labels.size()) throw ConfigError("decisions and labels differ in length");
  if (decisions.empty()) throw ConfigError("cannot compute metrics on no samples");
  Metrics m;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const bool pred = decisions[i] == Label::positive;
    const bool truth = labels[i] == Label::positive;
    if (pred && truth) ++m.tp;
    else if (pred) ++m.fp;
    else if (truth) ++m.fn;
    else ++m.tn;
  }
  auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(m.tp, m.tp + m.fp, m.precision_undefined);
  m.recall = ratio(m.tp, m.tp + m.fn, m.recall_undefined);
  const double specificity = ratio(m.tn, m.tn + m.fp, m.specificity_undefined);
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.balanced_accuracy = (m.recall + specificity) / 2.0;
  return m;
}

Dataset resample_balanced(const Dataset& dataset, std::uint64_t seed) {
  const auto idx = balanced_draw(dataset, seed);
  std::vector<Sample> out;
  out.reserve(idx.size());
  // Repeated draws get a suffix so the result is still a valid Dataset.
  std::vector<std::size_t> times(dataset.size(), 0);
  for (auto i : idx) {
    Sample s = dataset[i];
    if (times[i]++ > 0) s.id += "#" + std::to_string(times[i] - 1);
    out.push_back(std::move(s));
  }
  return Dataset(std::move(out));
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::ensemble: return "ensemble";
    case Method::sotd: return "sotd";
    case Method::resample: return "resample";
    case Method::inre: return "inre";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::baseline, Method::ensemble, Method::sotd, Method::resample, Method::inre})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected baseline, ensemble, sotd, resample or inre)");
}

void RunConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (hidden_sizes.empty()) throw ConfigError("at least one hidden layer is required");
  for (auto h : hidden_sizes)
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
  train.validate();
  if (n_components < 1) throw ConfigError("components must be at least 1");
  kde.validate();
  if (score_mode == ScoreMode::cross_fitted && score_folds < 2)
    throw ConfigError("score folds must be at least 2");
}

std::uint64_t plan_seed(std::uint64_t master_seed, std::size_t repeat) {
  return derive_seed(master_seed, {stream::fold_plan, repeat});
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t repeat, std::size_t fold) {
  return derive_seed(master_seed, {stream::cell, repeat, fold});
}

std::vector<Posterior> FittedMethod::predict(const Dataset& dataset) const {
  if (models.empty()) throw ConfigError("no fitted models");
  if (models.size() == 1) return wcv::predict(models.front(), dataset);
  const auto table = estimate_scores(models, dataset);
  std::vector<Posterior> out;
  out.reserve(table.size());
  for (const auto& e : table.entries()) out.push_back(e.score);
  return out;
}

std::vector<Label> FittedMethod::decide(const Dataset& dataset) const {
  std::vector<Label> out;
  for (const auto& p : predict(dataset)) out.push_back(fuse_decision(p));
  return out;
}

namespace {

MlpConfig mlp_for(const Dataset& data, const RunConfig& config) {
  return MlpConfig{data.dim(), config.hidden_sizes};
}

EnsembleConfig ensemble_for(const Dataset& data, const RunConfig& config, std::uint64_t seed) {
  EnsembleConfig ec;
  ec.n_components = config.n_components;
  ec.mlp = mlp_for(data, config);
  ec.train = config.train;
  ec.train.sampling = Sampling::shuffle;
  ec.base_seed = seed;
  return ec;
}

ScoreTable score_training_set(const Dataset& train, const RunConfig& config, std::uint64_t seed) {
  const auto ec = ensemble_for(train, config, seed);
  if (config.score_mode == ScoreMode::cross_fitted)
    return estimate_scores_cross_fitted(train, ec, config.score_folds);
  return estimate_scores(train_ensemble(train, ec), train);
}

template <class F>
auto with_context(const std::string& context, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(context + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }
}

std::string cell_context(std::size_t r, std::size_t f) {
  return "repeat " + std::to_string(r) + ", fold " + std::to_string(f);
}

} // namespace

FittedMethod fit_method(const Dataset& train_set, const RunConfig& config, std::uint64_t seed) {
  config.validate();
  const auto mlp = mlp_for(train_set, config);
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.sampling = Sampling::shuffle;

  FittedMethod fitted;
  switch (config.method) {
    case Method::baseline:
      fitted.models.push_back(train(init_model(mlp, seed), train_set, tc, WeightedBce{}));
      break;
    case Method::resample:
      tc.sampling = Sampling::class_balanced;
      fitted.models.push_back(train(init_model(mlp, seed), train_set, tc, WeightedBce{}));
      break;
    case Method::ensemble:
      fitted.models = train_ensemble(train_set, ensemble_for(train_set, config, seed));
      break;
    case Method::sotd: {
      const auto scores = score_training_set(train_set, config, seed);
      fitted.models.push_back(sotd_train(train_set, scores, SotdConfig{mlp, tc, config.kl_direction}));
      break;
    }
    case Method::inre: {
      const auto scores = score_training_set(train_set, config, seed);
      fitted.models.push_back(inre_train(train_set, scores, config.kde, tc, mlp));
      break;
    }
  }
  return fitted;
}

FittedMethod fit_cell(const Dataset& dataset, const RunConfig& config, std::size_t repeat,
                      std::size_t fold) {
  const auto plan = stratified_folds(dataset, config.folds, plan_seed(config.master_seed, repeat));
  const auto train_set = dataset.subset(plan.train_indices(fold, dataset.size()));
  return fit_method(train_set, config, cell_seed(config.master_seed, repeat, fold));
}

namespace {

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::vector<Label> labels_of(const Dataset& d) {
  std::vector<Label> out;
  out.reserve(d.size());
  for (const auto& s : d) out.push_back(s.label);
  return out;
}

std::vector<FoldPlan> make_plans(const Dataset& dataset, const RunConfig& config) {
  std::vector<FoldPlan> plans;
  plans.reserve(config.repeats);
  for (std::size_t r = 0; r < config.repeats; ++r)
    plans.push_back(stratified_folds(dataset, config.folds, plan_seed(config.master_seed, r)));
  return plans;
}

void finish_report(CvReport& report) {
  const auto& cfg = report.config;
  report.per_repeat.clear();
  for (std::size_t r = 0; r < cfg.repeats; ++r)
    report.per_repeat.push_back(
        aggregate(std::span<const CvCell>(report.cells).subspan(r * cfg.folds, cfg.folds)));
  report.overall = aggregate(report.cells);
}

} // namespace

Aggregate aggregate(std::span<const CvCell> cells) {
  std::vector<double> ba, f1, pr, re;
  for (const auto& c : cells) {
    ba.push_back(c.metrics.balanced_accuracy);
    f1.push_back(c.metrics.f1);
    pr.push_back(c.metrics.precision);
    re.push_back(c.metrics.recall);
  }
  return Aggregate{cells.size(), summarize(ba), summarize(f1), summarize(pr), summarize(re)};
}

CvReport run_cv(const Dataset& dataset, const RunConfig& config) {
  config.validate();
  const auto plans = make_plans(dataset, config);

  CvReport report;
  report.config = config;
  report.cells.resize(config.repeats * config.folds);
  parallel_for(report.cells.size(), config.jobs, [&](std::size_t cell) {
    const std::size_t r = cell / config.folds, f = cell % config.folds;
    const auto& plan = plans[r];
    const auto seed = cell_seed(config.master_seed, r, f);
    report.cells[cell] = with_context(cell_context(r, f), [&] {
      const auto train_set = dataset.subset(plan.train_indices(f, dataset.size()));
      const auto test_set = dataset.subset(plan.test_folds[f]);
      const auto fitted = fit_method(train_set, config, seed);
      const auto decisions = fitted.decide(test_set);
      return CvCell{r, f, seed, compute_metrics(decisions, labels_of(test_set))};
    });
  });
  finish_report(report);
  return report;
}

SweepReport sweep_bandwidth(const Dataset& dataset, const RunConfig& config,
                            std::span<const double> bandwidths) {
  if (config.method != Method::inre) throw ConfigError("bandwidth sweeps require method inre");
  config.validate();
  if (bandwidths.empty()) throw ConfigError("no bandwidths to sweep");
  for (double h : bandwidths) KdeConfig{h, config.kde.bin_width}.validate();

  const auto plans = make_plans(dataset, config);
  const std::size_t ncells = config.repeats * config.folds;
  SweepReport sweep;
  for (double h : bandwidths) {
    SweepRow row;
    row.bandwidth = h;
    row.report.config = config;
    row.report.config.kde.bandwidth = h;
    row.report.cells.resize(ncells);
    sweep.rows.push_back(std::move(row));
  }

  // The score ensemble does not depend on the bandwidth, so each cell trains
  // it once and reuses the table for every row.
  parallel_for(ncells, config.jobs, [&](std::size_t cell) {
    const std::size_t r = cell / config.folds, f = cell % config.folds;
    const auto seed = cell_seed(config.master_seed, r, f);
    with_context(cell_context(r, f), [&] {
      const auto train_set = dataset.subset(plans[r].train_indices(f, dataset.size()));
      const auto test_set = dataset.subset(plans[r].test_folds[f]);
      const auto labels = labels_of(test_set);
      const auto scores = score_training_set(train_set, config, seed);
      TrainConfig tc = config.train;
      tc.seed = seed;
      tc.sampling = Sampling::shuffle;
      for (auto& row : sweep.rows) {
        const auto model =
            inre_train(train_set, scores, row.report.config.kde, tc, mlp_for(train_set, config));
        const FittedMethod fitted{{model}};
        row.report.cells[cell] = CvCell{r, f, seed, compute_metrics(fitted.decide(test_set), labels)};
      }
      return 0;
    });
  });
  for (auto& row : sweep.rows) finish_report(row.report);
  return sweep;
}

namespace {

ojson config_json(const RunConfig& c) {
  ojson j;
  j["method"] = method_name(c.method);
  j["folds"] = c.folds;
  j["repeats"] = c.repeats;
  j["master_seed"] = c.master_seed;
  j["hidden_sizes"] = c.hidden_sizes;
  j["learning_rate"] = c.train.learning_rate;
  j["batch_size"] = c.train.batch_size;
  j["epochs"] = c.train.epochs;
  j["adam"] = {{"beta1", c.train.beta1}, {"beta2", c.train.beta2}, {"epsilon", c.train.epsilon}};
  j["components"] = c.n_components;
  j["bandwidth"] = c.kde.bandwidth;
  j["bin_width"] = c.kde.bin_width;
  j["uniform_density"] = c.kde.uniform_density;
  j["kl_direction"] = c.kl_direction == KlDirection::as_written ? "student-teacher" : "teacher-student";
  j["score_mode"] = c.score_mode == ScoreMode::in_sample ? "in-sample" : "cross-fitted";
  j["score_folds"] = c.score_folds;
  return j;
}

ojson summary_json(const Aggregate& a) {
  auto one = [](const MetricSummary& s) { return ojson{{"mean", s.mean}, {"std", s.std}}; };
  ojson j;
  j["cells"] = a.count;
  j["balanced_accuracy"] = one(a.balanced_accuracy);
  j["f1"] = one(a.f1);
  j["precision"] = one(a.precision);
  j["recall"] = one(a.recall);
  return j;
}

ojson report_json(const CvReport& report) {
  ojson j;
  j["format"] = "wcv-cv-report";
  j["version"] = 1;
  j["config"] = config_json(report.config);
  j["seed_derivation"] =
      "fold plan of repeat r: derive_seed(master_seed, [5, r]); models of cell (r, f): "
      "derive_seed(master_seed, [6, r, f]), component i of an ensemble uses that seed + i";
  j["std_definition"] = "sample standard deviation (n - 1) over all repeat x fold cells";
  ojson cells = ojson::array();
  for (const auto& c : report.cells) {
    const auto& m = c.metrics;
    cells.push_back({{"repeat", c.repeat},
                     {"fold", c.fold},
                     {"seed", c.seed},
                     {"tp", m.tp},
                     {"fp", m.fp},
                     {"tn", m.tn},
                     {"fn", m.fn},
                     {"balanced_accuracy", m.balanced_accuracy},
                     {"f1", m.f1},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"precision_undefined", m.precision_undefined}});
  }
  j["cells"] = std::move(cells);
  ojson per_repeat = ojson::array();
  for (const auto& a : report.per_repeat) per_repeat.push_back(summary_json(a));
  j["per_repeat"] = std::move(per_repeat);
  j["aggregate"] = summary_json(report.overall);
  return j;
}

const char* kCellHeader =
    "row,repeat,fold,seed,tp,fp,tn,fn,balanced_accuracy,f1,precision,recall,precision_undefined\n";

void append_summary_rows(std::ostringstream& out, const std::string& repeat, const Aggregate& a) {
  out << "mean," << repeat << ",,,,,,," << format_double(a.balanced_accuracy.mean) << ','
      << format_double(a.f1.mean) << ',' << format_double(a.precision.mean) << ','
      << format_double(a.recall.mean) << ",\n";
  out << "std," << repeat << ",,,,,,," << format_double(a.balanced_accuracy.std) << ','
      << format_double(a.f1.std) << ',' << format_double(a.precision.std) << ','
      << format_double(a.recall.std) << ",\n";
}

} // namespace

std::string report_to_json(const CvReport& report) { return report_json(report).dump(1) + "\n"; }

std::string report_to_csv(const CvReport& report) {
  std::ostringstream out;
  out << kCellHeader;
  for (const auto& c : report.cells) {
    const auto& m = c.metrics;
    out << "cell," << c.repeat << ',' << c.fold << ',' << c.seed << ',' << m.tp << ',' << m.fp << ','
        << m.tn << ',' << m.fn << ',' << format_double(m.balanced_accuracy) << ','
        << format_double(m.f1) << ',' << format_double(m.precision) << ','
        << format_double(m.recall) << ',' << (m.precision_undefined ? 1 : 0) << '\n';
  }
  for (std::size_t r = 0; r < report.per_repeat.size(); ++r)
    append_summary_rows(out, std::to_string(r), report.per_repeat[r]);
  append_summary_rows(out, "all", report.overall);
  return out.str();
}

std::string sweep_to_json(const SweepReport& sweep) {
  ojson j;
  j["format"] = "wcv-bandwidth-sweep";
  j["version"] = 1;
  ojson rows = ojson::array();
  for (const auto& row : sweep.rows) {
    ojson r;
    r["bandwidth"] = row.bandwidth;
    r["report"] = report_json(row.report);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(1) + "\n";
}

std::string sweep_to_csv(const SweepReport& sweep) {
  std::ostringstream out;
  out << "bandwidth,cells,balanced_accuracy_mean,balanced_accuracy_std,f1_mean,f1_std,"
         "precision_mean,precision_std,recall_mean,recall_std\n";
  for (const auto& row : sweep.rows) {
    const auto& a = row.report.overall;
    out << format_double(row.bandwidth) << ',' << a.count << ','
        << format_double(a.balanced_accuracy.mean) << ',' << format_double(a.balanced_accuracy.std)
        << ',' << format_double(a.f1.mean) << ',' << format_double(a.f1.std) << ','
        << format_double(a.precision.mean) << ',' << format_double(a.precision.std) << ','
        << format_double(a.recall.mean) << ',' << format_double(a.recall.std) << '\n';
  }
  return out.str();
}

} // namespace wcv
