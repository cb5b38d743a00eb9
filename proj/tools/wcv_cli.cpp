// wcv-cli: dataset synthesis, training, cross-validation, score/weight export
// and bandwidth sweeps on top of the wcv C API.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wcv/wcv.h"

namespace {

struct DatasetDeleter {
  void operator()(wcv_dataset* d) const { wcv_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(wcv_model* m) const { wcv_model_free(m); }
};
using DatasetPtr = std::unique_ptr<wcv_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<wcv_model, ModelDeleter>;

// Non-zero C API status, surfaced as exit code 1.
struct ApiFailure {
  wcv_status status;
  std::string message;
};

void check(wcv_status s) {
  if (s != WCV_OK) throw ApiFailure{s, wcv_last_error()};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!text.empty() && text.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& token, const std::string& flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (token.empty() || used != token.size()) throw CLI::ValidationError(flag, "malformed list entry '" + token + "'");
  return v;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& t : split_list(text)) out.push_back(parse_number(t, flag));
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
  return path.substr(0, dot) + ext;
}

// Flags shared by every command that trains models.
struct ModelFlags {
  std::string hidden = "32,16";
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::size_t components = 5;
  double bandwidth = 2.0;
  double bin_width = 2.0;
  bool kl_reverse = false;
  bool uniform_weights = false;
  std::string score_mode = "in-sample";
  std::size_t score_folds = 5;
  std::size_t jobs = 1;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for all randomness")->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden layer sizes, comma separated")->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--components", components, "Ensemble components for scores and fusion")
        ->capture_default_str();
    app->add_option("--bandwidth", bandwidth, "InRe Gaussian kernel bandwidth")->capture_default_str();
    app->add_option("--bin-width", bin_width, "InRe histogram bin width on the log-ratio axis")
        ->capture_default_str();
    app->add_flag("--kl-reverse", kl_reverse, "SoTD: use KL(teacher || student) instead of KL(student || teacher)");
    app->add_flag("--uniform-weights", uniform_weights, "InRe control: force every weight to 1");
    app->add_option("--score-mode", score_mode, "Where ensemble scores come from")
        ->check(CLI::IsMember({"in-sample", "cross-fitted"}))
        ->capture_default_str();
    app->add_option("--score-folds", score_folds, "Inner folds for --score-mode cross-fitted")
        ->capture_default_str();
    app->add_option("--jobs", jobs, "Worker threads (outputs do not depend on it)")->capture_default_str();
  }

  wcv_options options() const {
    wcv_options o;
    wcv_options_init(&o);
    const auto sizes = split_list(hidden);
    if (sizes.empty() || sizes.size() > WCV_MAX_HIDDEN)
      throw CLI::ValidationError("--hidden", "expected 1 to " + std::to_string(WCV_MAX_HIDDEN) + " sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double v = parse_number(sizes[i], "--hidden");
      if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw CLI::ValidationError("--hidden", "sizes must be positive integers");
      o.hidden[i] = static_cast<std::size_t>(v);
    }
    o.n_hidden = sizes.size();
    o.learning_rate = lr;
    o.batch_size = batch;
    o.epochs = epochs;
    o.seed = seed;
    o.components = components;
    o.bandwidth = bandwidth;
    o.bin_width = bin_width;
    o.kl_reverse = kl_reverse ? 1 : 0;
    o.uniform_density = uniform_weights ? 1 : 0;
    o.score_mode = score_mode == "cross-fitted" ? WCV_SCORES_CROSS_FITTED : WCV_SCORES_IN_SAMPLE;
    o.score_folds = score_folds;
    o.jobs = jobs;
    return o;
  }
};

DatasetPtr load(const std::string& path) {
  wcv_dataset* d = nullptr;
  check(wcv_dataset_load(path.c_str(), &d));
  return DatasetPtr(d);
}

wcv_method method_of(const std::string& name) {
  wcv_method m;
  if (wcv_method_from_string(name.c_str(), &m) != WCV_OK) throw CLI::ValidationError("--method", wcv_last_error());
  return m;
}

void print_summary(const wcv_summary& s) {
  std::printf("cells %zu\n", s.cells);
  std::printf("balanced_accuracy %.4f +- %.4f\n", s.balanced_accuracy_mean, s.balanced_accuracy_std);
  std::printf("f1                %.4f +- %.4f\n", s.f1_mean, s.f1_std);
  std::printf("precision         %.4f +- %.4f\n", s.precision_mean, s.precision_std);
  std::printf("recall            %.4f +- %.4f\n", s.recall_mean, s.recall_std);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"wcv-cli: soft target distillation and instance-level re-balancing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wcv 0.1.0 (C ABI " + std::to_string(wcv_abi_version()) + ")");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic severity-continuum dataset");
  wcv_synth_options synth;
  wcv_synth_options_init(&synth);
  std::string gen_out, pos_components = "20:3:0.8,8:3:0.2";
  gen->add_option("--out", gen_out, "Output dataset file (JSON lines)")->required();
  gen->add_option("--n-pos", synth.n_pos, "Positive samples")->capture_default_str();
  gen->add_option("--n-neg", synth.n_neg, "Negative samples")->capture_default_str();
  gen->add_option("--dim", synth.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  gen->add_option("--noise", synth.noise_std, "Isotropic feature noise std")->capture_default_str();
  gen->add_option("--neg-mean", synth.neg_mean, "Negative-class severity mean")->capture_default_str();
  gen->add_option("--neg-std", synth.neg_std, "Negative-class severity std")->capture_default_str();
  gen->add_option("--pos-components", pos_components,
                  "Positive severity mixture as mean:std:weight, comma separated")
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train one method on a whole dataset and save the model");
  ModelFlags train_flags;
  std::string train_data, train_out, train_method = "baseline";
  train->add_option("--data", train_data, "Dataset file")->required();
  train->add_option("--out", train_out, "Output model file")->required();
  train->add_option("--method", train_method, "baseline | ensemble | sotd | resample | inre")
      ->capture_default_str();
  train_flags.add_to(train);

  // cv
  auto* cv = app.add_subcommand("cv", "Repeated stratified k-fold cross-validation");
  ModelFlags cv_flags;
  std::string cv_data, cv_out, cv_csv, cv_method = "baseline";
  std::size_t cv_folds = 10, cv_repeats = 20;
  cv->add_option("--data", cv_data, "Dataset file")->required();
  cv->add_option("--out", cv_out, "Structured report (JSON)")->required();
  cv->add_option("--csv", cv_csv, "Flat CSV report (default: --out with .csv extension)");
  cv->add_option("--method", cv_method, "baseline | ensemble | sotd | resample | inre")->capture_default_str();
  cv->add_option("--folds", cv_folds, "Folds per repeat")->capture_default_str();
  cv->add_option("--repeats", cv_repeats, "Repeats")->capture_default_str();
  cv_flags.add_to(cv);

  // scores
  auto* scores = app.add_subcommand("scores", "Export ensemble soft scores and their alignment with cognitive scores");
  ModelFlags scores_flags;
  std::string scores_data, scores_out;
  scores->add_option("--data", scores_data, "Dataset file")->required();
  scores->add_option("--out", scores_out, "Score export (JSON lines)")->required();
  scores_flags.add_to(scores);

  // weights
  auto* weights = app.add_subcommand("weights", "Export InRe log ratios, densities and weights");
  ModelFlags weights_flags;
  std::string weights_data, weights_out, weights_fold_out;
  std::size_t weights_folds = 10;
  weights->add_option("--data", weights_data, "Dataset file")->required();
  weights->add_option("--out", weights_out, "Pooled weight export (JSON lines)")->required();
  weights->add_option("--per-fold-out", weights_fold_out,
                      "Also export weights computed inside each training partition of one split");
  weights->add_option("--folds", weights_folds, "Folds for --per-fold-out")->capture_default_str();
  weights_flags.add_to(weights);

  // sweep-bandwidth
  auto* sweep = app.add_subcommand("sweep-bandwidth", "InRe cross-validation across kernel bandwidths");
  ModelFlags sweep_flags;
  std::string sweep_data, sweep_out, sweep_csv, sweep_list = "1,2,4,8,16,64";
  std::size_t sweep_folds = 10, sweep_repeats = 20;
  sweep->add_option("--data", sweep_data, "Dataset file")->required();
  sweep->add_option("--out", sweep_out, "Structured sweep report (JSON)")->required();
  sweep->add_option("--csv", sweep_csv, "One CSV row per bandwidth (default: --out with .csv extension)");
  sweep->add_option("--bandwidths", sweep_list, "Comma-separated bandwidths")->capture_default_str();
  sweep->add_option("--folds", sweep_folds, "Folds per repeat")->capture_default_str();
  sweep->add_option("--repeats", sweep_repeats, "Repeats")->capture_default_str();
  sweep_flags.add_to(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::size_t n = 0;
      for (const auto& comp : split_list(pos_components)) {
        std::vector<std::string> parts;
        std::stringstream ss(comp);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw CLI::ValidationError("--pos-components", "expected mean:std:weight");
        if (n >= WCV_MAX_POS_COMPONENTS) throw CLI::ValidationError("--pos-components", "too many components");
        synth.pos_mean[n] = parse_number(parts[0], "--pos-components");
        synth.pos_std[n] = parse_number(parts[1], "--pos-components");
        synth.pos_weight[n] = parse_number(parts[2], "--pos-components");
        ++n;
      }
      synth.n_pos_components = n;
      wcv_dataset* d = nullptr;
      check(wcv_dataset_generate(&synth, &d));
      DatasetPtr data(d);
      check(wcv_dataset_save(data.get(), gen_out.c_str()));
      std::printf("wrote %zu samples (dim %zu) to %s\n", wcv_dataset_size(data.get()),
                  wcv_dataset_dim(data.get()), gen_out.c_str());
    } else if (*train) {
      const auto method = method_of(train_method);
      auto opts = train_flags.options();
      auto data = load(train_data);
      wcv_model* m = nullptr;
      check(wcv_train(data.get(), method, &opts, &m));
      ModelPtr model(m);
      check(wcv_model_save(model.get(), train_out.c_str()));
      std::printf("wrote %s model (%zu component%s) to %s\n", train_method.c_str(),
                  wcv_model_components(model.get()), wcv_model_components(model.get()) == 1 ? "" : "s",
                  train_out.c_str());
    } else if (*cv) {
      const auto method = method_of(cv_method);
      auto opts = cv_flags.options();
      opts.folds = cv_folds;
      opts.repeats = cv_repeats;
      auto data = load(cv_data);
      const std::string csv = cv_csv.empty() ? replace_extension(cv_out, ".csv") : cv_csv;
      wcv_summary summary{};
      check(wcv_run_cv(data.get(), method, &opts, cv_out.c_str(), csv.c_str(), &summary));
      std::printf("method %s, %zu folds x %zu repeats\n", cv_method.c_str(), cv_folds, cv_repeats);
      print_summary(summary);
    } else if (*scores) {
      auto opts = scores_flags.options();
      auto data = load(scores_data);
      double r = 0.0;
      int has_r = 0;
      check(wcv_export_scores(data.get(), &opts, scores_out.c_str(), &r, &has_r));
      std::printf("wrote scores for %zu samples to %s\n", wcv_dataset_size(data.get()), scores_out.c_str());
      if (has_r)
        std::printf("pearson_r(p_pos, cognitive_score) %.4f\n", r);
      else
        std::printf("pearson_r(p_pos, cognitive_score) unavailable\n");
    } else if (*weights) {
      auto opts = weights_flags.options();
      opts.folds = weights_folds;
      auto data = load(weights_data);
      check(wcv_export_weights(data.get(), &opts, weights_out.c_str(),
                               weights_fold_out.empty() ? nullptr : weights_fold_out.c_str()));
      std::printf("wrote weights for %zu samples to %s\n", wcv_dataset_size(data.get()), weights_out.c_str());
    } else if (*sweep) {
      const auto bandwidths = parse_number_list(sweep_list, "--bandwidths");
      auto opts = sweep_flags.options();
      opts.folds = sweep_folds;
      opts.repeats = sweep_repeats;
      auto data = load(sweep_data);
      const std::string csv = sweep_csv.empty() ? replace_extension(sweep_out, ".csv") : sweep_csv;
      check(wcv_run_sweep(data.get(), &opts, bandwidths.data(), bandwidths.size(), sweep_out.c_str(),
                          csv.c_str()));
      std::printf("wrote %zu bandwidth rows to %s and %s\n", bandwidths.size(), sweep_out.c_str(), csv.c_str());
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ApiFailure& f) {
    std::cerr << "error (" << wcv_status_string(f.status) << "): " << f.message << '\n';
    return 1;
  }
  return 0;
}
