#include "wcv/wcv.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/ensemble.hpp"
#include "wcv/error.hpp"
#include "wcv/harness.hpp"
#include "wcv/inre.hpp"
#include "wcv/io.hpp"
#include "wcv/nn.hpp"

struct wcv_dataset {
  wcv::Dataset data;
};

struct wcv_model {
  std::vector<wcv::MlpModel> components;
};

namespace {

thread_local std::string g_last_error;

wcv_status fail(wcv_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Failure with a status that has no library exception counterpart.
struct StatusError : std::runtime_error {
  wcv_status status;
  StatusError(wcv_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

// Runs `body`, translating exceptions into status codes.
template <class F>
wcv_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return WCV_OK;
  } catch (const StatusError& e) {
    return fail(e.status, e.what());
  } catch (const wcv::ParseError& e) {
    return fail(WCV_E_PARSE, e.what());
  } catch (const wcv::DimensionError& e) {
    return fail(WCV_E_DIMENSION, e.what());
  } catch (const wcv::DuplicateIdError& e) {
    return fail(WCV_E_DUPLICATE_ID, e.what());
  } catch (const wcv::IoError& e) {
    return fail(WCV_E_IO, e.what());
  } catch (const wcv::NumericError& e) {
    return fail(WCV_E_NUMERIC, e.what());
  } catch (const wcv::Error& e) {
    return fail(WCV_E_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(WCV_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(WCV_E_INTERNAL, e.what());
  } catch (...) {
    return fail(WCV_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw wcv::ConfigError(std::string(what) + " must not be null");
}

wcv::RunConfig to_run_config(const wcv_options& o, wcv::Method method) {
  if (o.n_hidden == 0 || o.n_hidden > WCV_MAX_HIDDEN)
    throw wcv::ConfigError("n_hidden must be in [1, " + std::to_string(WCV_MAX_HIDDEN) + "]");
  wcv::RunConfig c;
  c.method = method;
  c.folds = o.folds;
  c.repeats = o.repeats;
  c.master_seed = o.seed;
  c.hidden_sizes.assign(o.hidden, o.hidden + o.n_hidden);
  c.train.learning_rate = o.learning_rate;
  c.train.batch_size = o.batch_size;
  c.train.epochs = o.epochs;
  c.train.seed = o.seed;
  c.n_components = o.components;
  c.kde.bandwidth = o.bandwidth;
  c.kde.bin_width = o.bin_width;
  c.kde.uniform_density = o.uniform_density != 0;
  c.kl_direction = o.kl_reverse ? wcv::KlDirection::reverse : wcv::KlDirection::as_written;
  c.score_mode = o.score_mode == WCV_SCORES_CROSS_FITTED ? wcv::ScoreMode::cross_fitted
                                                         : wcv::ScoreMode::in_sample;
  c.score_folds = o.score_folds;
  c.jobs = o.jobs == 0 ? 1 : o.jobs;
  c.validate();
  return c;
}

wcv::Method to_method(wcv_method m) {
  switch (m) {
    case WCV_METHOD_BASELINE: return wcv::Method::baseline;
    case WCV_METHOD_ENSEMBLE: return wcv::Method::ensemble;
    case WCV_METHOD_SOTD: return wcv::Method::sotd;
    case WCV_METHOD_RESAMPLE: return wcv::Method::resample;
    case WCV_METHOD_INRE: return wcv::Method::inre;
  }
  throw wcv::ConfigError("unknown method id " + std::to_string(static_cast<int>(m)));
}

wcv::ScoreTable full_data_scores(const wcv::Dataset& data, const wcv::RunConfig& cfg) {
  wcv::EnsembleConfig ec;
  ec.n_components = cfg.n_components;
  ec.mlp = wcv::MlpConfig{data.dim(), cfg.hidden_sizes};
  ec.train = cfg.train;
  ec.base_seed = cfg.master_seed;
  if (cfg.score_mode == wcv::ScoreMode::cross_fitted)
    return wcv::estimate_scores_cross_fitted(data, ec, cfg.score_folds);
  return wcv::estimate_scores(wcv::train_ensemble(data, ec, cfg.jobs), data);
}

// Writes every (path, contents) pair; if one fails, removes those already written.
void write_outputs(const std::vector<std::pair<std::string, std::string>>& outputs) {
  std::vector<std::string> done;
  try {
    for (const auto& [path, contents] : outputs) {
      wcv::write_file_atomic(path, contents);
      done.push_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : done) std::filesystem::remove(p, ec);
    throw;
  }
}

void fill_summary(const wcv::Aggregate& a, wcv_summary* s) {
  if (!s) return;
  s->cells = a.count;
  s->balanced_accuracy_mean = a.balanced_accuracy.mean;
  s->balanced_accuracy_std = a.balanced_accuracy.std;
  s->f1_mean = a.f1.mean;
  s->f1_std = a.f1.std;
  s->precision_mean = a.precision.mean;
  s->precision_std = a.precision.std;
  s->recall_mean = a.recall.mean;
  s->recall_std = a.recall.std;
}

} // namespace

extern "C" {

WCV_API int wcv_abi_version(void) { return WCV_ABI_VERSION; }

WCV_API const char* wcv_last_error(void) { return g_last_error.c_str(); }

WCV_API const char* wcv_status_string(wcv_status status) {
  switch (status) {
    case WCV_OK: return "ok";
    case WCV_E_INVALID_ARGUMENT: return "invalid argument";
    case WCV_E_PARSE: return "parse error";
    case WCV_E_DIMENSION: return "dimension mismatch";
    case WCV_E_DUPLICATE_ID: return "duplicate id";
    case WCV_E_IO: return "i/o error";
    case WCV_E_NUMERIC: return "numeric error";
    case WCV_E_BUFFER_TOO_SMALL: return "buffer too small";
    case WCV_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

WCV_API wcv_status wcv_method_from_string(const char* name, wcv_method* out) {
  return guarded([&] {
    require(name, "method name");
    require(out, "output");
    *out = static_cast<wcv_method>(wcv::parse_method(name));
  });
}

WCV_API void wcv_options_init(wcv_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->hidden[0] = 32;
  o->hidden[1] = 16;
  o->n_hidden = 2;
  o->learning_rate = 1e-3;
  o->batch_size = 16;
  o->epochs = 20;
  o->seed = 0;
  o->components = 5;
  o->bandwidth = 2.0;
  o->bin_width = 2.0;
  o->score_mode = WCV_SCORES_IN_SAMPLE;
  o->score_folds = 5;
  o->folds = 10;
  o->repeats = 20;
  o->jobs = 1;
}

WCV_API void wcv_synth_options_init(wcv_synth_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  const wcv::SyntheticConfig d;
  o->n_neg = d.n_neg;
  o->n_pos = d.n_pos;
  o->dim = d.dim;
  o->neg_mean = d.neg_mean;
  o->neg_std = d.neg_std;
  o->n_pos_components = d.pos_components.size();
  for (std::size_t i = 0; i < d.pos_components.size(); ++i) {
    o->pos_mean[i] = d.pos_components[i].mean;
    o->pos_std[i] = d.pos_components[i].std;
    o->pos_weight[i] = d.pos_components[i].weight;
  }
  o->noise_std = d.noise_std;
  o->seed = d.seed;
}

WCV_API wcv_status wcv_dataset_load(const char* path, wcv_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output");
    *out = new wcv_dataset{wcv::load_dataset(path)};
  });
}

WCV_API wcv_status wcv_dataset_generate(const wcv_synth_options* o, wcv_dataset** out) {
  return guarded([&] {
    require(o, "options");
    require(out, "output");
    if (o->n_pos_components == 0 || o->n_pos_components > WCV_MAX_POS_COMPONENTS)
      throw wcv::ConfigError("n_pos_components must be in [1, " +
                             std::to_string(WCV_MAX_POS_COMPONENTS) + "]");
    wcv::SyntheticConfig c;
    c.n_neg = o->n_neg;
    c.n_pos = o->n_pos;
    c.dim = o->dim;
    c.neg_mean = o->neg_mean;
    c.neg_std = o->neg_std;
    c.pos_components.clear();
    for (std::size_t i = 0; i < o->n_pos_components; ++i)
      c.pos_components.push_back({o->pos_mean[i], o->pos_std[i], o->pos_weight[i]});
    c.noise_std = o->noise_std;
    c.seed = o->seed;
    *out = new wcv_dataset{wcv::generate_synthetic(c)};
  });
}

WCV_API wcv_status wcv_dataset_save(const wcv_dataset* d, const char* path) {
  return guarded([&] {
    require(d, "dataset");
    require(path, "path");
    wcv::save_dataset(d->data, path);
  });
}

WCV_API size_t wcv_dataset_size(const wcv_dataset* d) { return d ? d->data.size() : 0; }
WCV_API size_t wcv_dataset_dim(const wcv_dataset* d) { return d ? d->data.dim() : 0; }
WCV_API void wcv_dataset_free(wcv_dataset* d) { delete d; }

WCV_API wcv_status wcv_train(const wcv_dataset* d, wcv_method method, const wcv_options* o,
                             wcv_model** out) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(out, "output");
    const auto cfg = to_run_config(*o, to_method(method));
    auto fitted = wcv::fit_method(d->data, cfg, o->seed);
    *out = new wcv_model{std::move(fitted.models)};
  });
}

WCV_API wcv_status wcv_model_save(const wcv_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    wcv::write_file_atomic(path, wcv::serialize_models(m->components));
  });
}

WCV_API wcv_status wcv_model_load(const char* path, wcv_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output");
    const auto text = wcv::read_file(path);
    try {
      *out = new wcv_model{wcv::deserialize_models(text)};
    } catch (const wcv::ConfigError& e) {
      throw StatusError(WCV_E_PARSE, std::string(path) + ": " + e.what());
    }
  });
}

WCV_API size_t wcv_model_components(const wcv_model* m) { return m ? m->components.size() : 0; }

WCV_API wcv_status wcv_model_predict(const wcv_model* m, const wcv_dataset* d, double* p_pos,
                                     size_t capacity) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(p_pos, "output buffer");
    if (capacity < d->data.size()) {
      throw StatusError(WCV_E_BUFFER_TOO_SMALL, "output buffer holds " + std::to_string(capacity) + " values, need " +
                             std::to_string(d->data.size()));
    }
    const auto post = wcv::FittedMethod{m->components}.predict(d->data);
    for (std::size_t i = 0; i < post.size(); ++i) p_pos[i] = post[i].p_pos;
  });
}

WCV_API void wcv_model_free(wcv_model* m) { delete m; }

WCV_API wcv_status wcv_export_scores(const wcv_dataset* d, const wcv_options* o, const char* path,
                                     double* pearson_r, int* has_r) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(path, "path");
    const auto cfg = to_run_config(*o, wcv::Method::ensemble);
    const auto scores = full_data_scores(d->data, cfg);
    int available = 0;
    double r = std::nan("");
    try {
      r = wcv::score_alignment(scores, d->data);
      available = 1;
    } catch (const wcv::ConfigError&) {
      // No cognitive scores, or no variance: correlation is unavailable.
    }
    wcv::write_file_atomic(path, wcv::format_score_export(scores, d->data));
    if (pearson_r) *pearson_r = r;
    if (has_r) *has_r = available;
  });
}

WCV_API wcv_status wcv_export_weights(const wcv_dataset* d, const wcv_options* o, const char* path,
                                      const char* per_fold_path) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(path, "path");
    const auto cfg = to_run_config(*o, wcv::Method::inre);
    const auto scores = full_data_scores(d->data, cfg);
    const auto detail = wcv::compute_inre_weights(scores, d->data, cfg.kde);
    std::vector<std::pair<std::string, std::string>> outputs{
        {path, wcv::format_weight_export(d->data, detail)}};

    if (per_fold_path) {
      const auto plan = wcv::stratified_folds(d->data, cfg.folds, wcv::plan_seed(cfg.master_seed, 0));
      std::vector<std::string> parts(plan.k());
      for (std::size_t f = 0; f < plan.k(); ++f) {
        const auto train_set = d->data.subset(plan.train_indices(f, d->data.size()));
        auto fold_cfg = cfg;
        fold_cfg.master_seed = wcv::cell_seed(cfg.master_seed, 0, f);
        const auto fold_scores = full_data_scores(train_set, fold_cfg);
        parts[f] = wcv::format_weight_export(
            train_set, wcv::compute_inre_weights(fold_scores, train_set, cfg.kde), static_cast<int>(f));
      }
      std::string all;
      for (const auto& p : parts) all += p;
      outputs.emplace_back(per_fold_path, std::move(all));
    }
    write_outputs(outputs);
  });
}

WCV_API wcv_status wcv_run_cv(const wcv_dataset* d, wcv_method method, const wcv_options* o,
                              const char* json_path, const char* csv_path, wcv_summary* summary) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(json_path, "report path");
    const auto report = wcv::run_cv(d->data, to_run_config(*o, to_method(method)));
    std::vector<std::pair<std::string, std::string>> outputs{{json_path, wcv::report_to_json(report)}};
    if (csv_path) outputs.emplace_back(csv_path, wcv::report_to_csv(report));
    write_outputs(outputs);
    fill_summary(report.overall, summary);
  });
}

WCV_API wcv_status wcv_run_sweep(const wcv_dataset* d, const wcv_options* o,
                                 const double* bandwidths, size_t n_bandwidths,
                                 const char* json_path, const char* csv_path) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(bandwidths, "bandwidths");
    require(json_path, "report path");
    const auto sweep = wcv::sweep_bandwidth(d->data, to_run_config(*o, wcv::Method::inre),
                                            std::span<const double>(bandwidths, n_bandwidths));
    std::vector<std::pair<std::string, std::string>> outputs{{json_path, wcv::sweep_to_json(sweep)}};
    if (csv_path) outputs.emplace_back(csv_path, wcv::sweep_to_csv(sweep));
    write_outputs(outputs);
  });
}

} // extern "C"
