#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/folds.hpp"
#include "wcv/inre.hpp"
#include "wcv/nn.hpp"

namespace wcv {

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double balanced_accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // Set when the corresponding denominator was zero and the value reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool specificity_undefined = false;

  bool operator==(const Metrics&) const = default;
};

// Throws ConfigError on empty input or a length mismatch.
Metrics compute_metrics(std::span<const Label> decisions, std::span<const Label> labels);

// One with-replacement epoch draw where each class is picked with probability
// 1/2 (per-sample rate proportional to 1 / class frequency). Throws ConfigError
// if either class is absent.
Dataset resample_balanced(const Dataset& dataset, std::uint64_t seed);

enum class Method { baseline, ensemble, sotd, resample, inre };

std::string_view method_name(Method method);
// Throws ConfigError on an unknown name.
Method parse_method(std::string_view name);

enum class ScoreMode {
  in_sample,    // ensemble trained on the training partition scores that same partition
  cross_fitted  // inner stratified folds; every score comes from an ensemble that did not see the sample
};

struct RunConfig {
  Method method = Method::baseline;
  std::size_t folds = 10;
  std::size_t repeats = 20;
  std::uint64_t master_seed = 0;
  // input_dim is taken from the dataset.
  std::vector<std::size_t> hidden_sizes{32, 16};
  TrainConfig train;
  std::size_t n_components = 5;
  KdeConfig kde;
  KlDirection kl_direction = KlDirection::as_written;
  ScoreMode score_mode = ScoreMode::in_sample;
  std::size_t score_folds = 5;
  // Worker threads for independent (repeat, fold) cells. Results do not depend on it.
  std::size_t jobs = 1;

  void validate() const;
};

// Seed of the fold plan for one repeat, and of every model trained in one cell.
std::uint64_t plan_seed(std::uint64_t master_seed, std::size_t repeat);
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t repeat, std::size_t fold);

// What a method leaves behind after training on one partition: one model, or
// the components of the fusion ensemble.
struct FittedMethod {
  std::vector<MlpModel> models;

  std::vector<Posterior> predict(const Dataset& dataset) const;
  std::vector<Label> decide(const Dataset& dataset) const;
};

// Trains `config.method` on `train` with every model seeded from `seed`.
FittedMethod fit_method(const Dataset& train, const RunConfig& config, std::uint64_t seed);

// The models of cell (repeat, fold), trained only on that fold's training partition.
FittedMethod fit_cell(const Dataset& dataset, const RunConfig& config, std::size_t repeat,
                      std::size_t fold);

struct CvCell {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  Metrics metrics;

  bool operator==(const CvCell&) const = default;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  bool operator==(const MetricSummary&) const = default;
};

struct Aggregate {
  std::size_t count = 0;
  MetricSummary balanced_accuracy, f1, precision, recall;
  bool operator==(const Aggregate&) const = default;
};

// Mean and sample standard deviation (n - 1) across the given cells.
Aggregate aggregate(std::span<const CvCell> cells);

struct CvReport {
  RunConfig config;
  std::vector<CvCell> cells;         // repeat-major, fold-minor
  std::vector<Aggregate> per_repeat; // over the folds of each repeat
  Aggregate overall;                 // over all repeat x fold cells
};

CvReport run_cv(const Dataset& dataset, const RunConfig& config);

struct SweepRow {
  double bandwidth = 0.0;
  CvReport report;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

// run_cv with method inre once per bandwidth; fold plans and cell seeds are
// shared across rows. Throws ConfigError unless config.method is inre.
SweepReport sweep_bandwidth(const Dataset& dataset, const RunConfig& config,
                            std::span<const double> bandwidths);

std::string report_to_json(const CvReport& report);
std::string report_to_csv(const CvReport& report);
std::string sweep_to_json(const SweepReport& sweep);
std::string sweep_to_csv(const SweepReport& sweep);

} // namespace wcv
