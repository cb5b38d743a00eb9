/* C interface to the wcv toolkit: soft target distillation and instance-level
 * re-balancing for binary classifiers, plus the cross-validation harness.
 *
 * Every object is an opaque handle released with its matching *_free call.
 * Functions return a wcv_status; on failure wcv_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread). */
#ifndef WCV_WCV_H
#define WCV_WCV_H

#include <stddef.h>
#include <stdint.h>

#if defined(WCV_BUILDING_LIBRARY)
#define WCV_API __attribute__((visibility("default")))
#else
#define WCV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define WCV_ABI_VERSION 1
#define WCV_MAX_HIDDEN 8
#define WCV_MAX_POS_COMPONENTS 8

typedef enum wcv_status {
  WCV_OK = 0,
  WCV_E_INVALID_ARGUMENT = 1, /* bad configuration or null pointer */
  WCV_E_PARSE = 2,            /* malformed dataset line */
  WCV_E_DIMENSION = 3,        /* feature-length mismatch */
  WCV_E_DUPLICATE_ID = 4,
  WCV_E_IO = 5,
  WCV_E_NUMERIC = 6,          /* non-finite loss or parameter during training */
  WCV_E_BUFFER_TOO_SMALL = 7,
  WCV_E_INTERNAL = 99
} wcv_status;

typedef enum wcv_method {
  WCV_METHOD_BASELINE = 0,
  WCV_METHOD_ENSEMBLE = 1,
  WCV_METHOD_SOTD = 2,
  WCV_METHOD_RESAMPLE = 3,
  WCV_METHOD_INRE = 4
} wcv_method;

typedef enum wcv_score_mode {
  WCV_SCORES_IN_SAMPLE = 0,
  WCV_SCORES_CROSS_FITTED = 1
} wcv_score_mode;

typedef struct wcv_dataset wcv_dataset;
typedef struct wcv_model wcv_model;

typedef struct wcv_synth_options {
  size_t n_neg;
  size_t n_pos;
  size_t dim;
  double neg_mean;
  double neg_std;
  size_t n_pos_components;
  double pos_mean[WCV_MAX_POS_COMPONENTS];
  double pos_std[WCV_MAX_POS_COMPONENTS];
  double pos_weight[WCV_MAX_POS_COMPONENTS];
  double noise_std;
  uint64_t seed;
} wcv_synth_options;

typedef struct wcv_options {
  size_t hidden[WCV_MAX_HIDDEN];
  size_t n_hidden;
  double learning_rate;
  size_t batch_size;
  size_t epochs;
  uint64_t seed;
  size_t components;
  double bandwidth;
  double bin_width;
  int uniform_density; /* nonzero: all InRe weights exactly 1 */
  int kl_reverse;      /* nonzero: teacher-led KL instead of the student-led default */
  wcv_score_mode score_mode;
  size_t score_folds;
  size_t folds;
  size_t repeats;
  size_t jobs;
} wcv_options;

typedef struct wcv_summary {
  size_t cells;
  double balanced_accuracy_mean, balanced_accuracy_std;
  double f1_mean, f1_std;
  double precision_mean, precision_std;
  double recall_mean, recall_std;
} wcv_summary;

WCV_API int wcv_abi_version(void);
WCV_API const char* wcv_last_error(void);
WCV_API const char* wcv_status_string(wcv_status status);
WCV_API wcv_status wcv_method_from_string(const char* name, wcv_method* out);

/* Fill with library defaults. */
WCV_API void wcv_options_init(wcv_options* options);
WCV_API void wcv_synth_options_init(wcv_synth_options* options);

WCV_API wcv_status wcv_dataset_load(const char* path, wcv_dataset** out);
WCV_API wcv_status wcv_dataset_generate(const wcv_synth_options* options, wcv_dataset** out);
WCV_API wcv_status wcv_dataset_save(const wcv_dataset* dataset, const char* path);
WCV_API size_t wcv_dataset_size(const wcv_dataset* dataset);
WCV_API size_t wcv_dataset_dim(const wcv_dataset* dataset);
WCV_API void wcv_dataset_free(wcv_dataset* dataset);

/* Trains `method` on the whole dataset. The ensemble method yields a model
 * holding all components; predictions average their posteriors. */
WCV_API wcv_status wcv_train(const wcv_dataset* dataset, wcv_method method,
                             const wcv_options* options, wcv_model** out);
WCV_API wcv_status wcv_model_save(const wcv_model* model, const char* path);
WCV_API wcv_status wcv_model_load(const char* path, wcv_model** out);
WCV_API size_t wcv_model_components(const wcv_model* model);
/* Writes p_pos for every sample into p_pos[0..capacity). */
WCV_API wcv_status wcv_model_predict(const wcv_model* model, const wcv_dataset* dataset,
                                     double* p_pos, size_t capacity);
WCV_API void wcv_model_free(wcv_model* model);

/* Ensemble soft scores for every sample, one JSON record per line. When the
 * dataset carries cognitive scores, *pearson_r receives the correlation with
 * p_pos and *has_r is set to 1; otherwise *has_r is 0. */
WCV_API wcv_status wcv_export_scores(const wcv_dataset* dataset, const wcv_options* options,
                                     const char* path, double* pearson_r, int* has_r);

/* Instance weights for the whole dataset (pooled) to `path`. When
 * per_fold_path is non-null, also the weights computed inside each training
 * partition of one options->folds split. */
WCV_API wcv_status wcv_export_weights(const wcv_dataset* dataset, const wcv_options* options,
                                      const char* path, const char* per_fold_path);

/* Repeated stratified k-fold CV. csv_path may be null. summary may be null. */
WCV_API wcv_status wcv_run_cv(const wcv_dataset* dataset, wcv_method method,
                              const wcv_options* options, const char* json_path,
                              const char* csv_path, wcv_summary* summary);

/* InRe CV once per bandwidth over shared fold plans. csv_path may be null. */
WCV_API wcv_status wcv_run_sweep(const wcv_dataset* dataset, const wcv_options* options,
                                 const double* bandwidths, size_t n_bandwidths,
                                 const char* json_path, const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* WCV_WCV_H */
