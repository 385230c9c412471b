/* C interface to the pliable lasso Cox solver.
 *
 * Every function returns a plasso_status. On failure the thread-local message
 * from plasso_last_error_message() describes the problem. Objects are opaque
 * and owned by the caller once returned; release them with the matching
 * *_free function. Strings returned through char** are released with
 * plasso_free_string.
 */
#ifndef PLASSO_PLASSO_H
#define PLASSO_PLASSO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PLASSO_BUILDING_LIBRARY)
#    define PLASSO_API __declspec(dllexport)
#  else
#    define PLASSO_API __declspec(dllimport)
#  endif
#else
#  define PLASSO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plasso_status {
  PLASSO_OK = 0,
  PLASSO_INVALID_ARGUMENT,
  PLASSO_DIMENSION_MISMATCH,
  PLASSO_NO_FAILURES,
  PLASSO_NON_FINITE,
  PLASSO_NEGATIVE_WEIGHT,
  PLASSO_CONSTANT_COLUMN,
  PLASSO_ALPHA_ONE,
  PLASSO_FOLD_WITHOUT_FAILURES,
  PLASSO_PATTERN_NEEDS_DIMS,
  PLASSO_ONE_CLASS_ONLY,
  PLASSO_SCHEMA_MISMATCH,
  PLASSO_MISSING_COLUMN,
  PLASSO_PARSE_ERROR,
  PLASSO_IO_ERROR,
  PLASSO_NULL_POINTER,
  PLASSO_INDEX_OUT_OF_RANGE,
  PLASSO_INTERNAL_ERROR
} plasso_status;

typedef enum plasso_engine { PLASSO_ENGINE_EXACT = 0, PLASSO_ENGINE_LOGISTIC = 1 } plasso_engine;
typedef enum plasso_basis { PLASSO_BASIS_NONE = 0, PLASSO_BASIS_LINEAR = 1, PLASSO_BASIS_SPLINE = 2 } plasso_basis;
typedef enum plasso_rule { PLASSO_RULE_MIN = 0, PLASSO_RULE_1SE = 1 } plasso_rule;
typedef enum plasso_format { PLASSO_FORMAT_TEXT = 0, PLASSO_FORMAT_CSV = 1 } plasso_format;

typedef struct plasso_dataset plasso_dataset;
typedef struct plasso_model plasso_model;
typedef struct plasso_path plasso_path;

typedef struct plasso_options {
  int engine;               /* plasso_engine */
  double alpha;             /* mixing parameter in [0, 1) */
  double lambda;            /* plasso_fit only */
  int nlambda;              /* path grid size */
  double lambda_min_ratio;  /* smallest lambda / lambda_max */
  const double* lambdas;    /* optional explicit decreasing grid */
  size_t n_lambdas;
  int nfolds;
  int rule;                 /* plasso_rule */
  uint64_t seed;            /* fold assignment */
  int time_basis;           /* plasso_basis */
  int spline_knots;
  int risk_sample;          /* controls per failure time, 0 = whole risk set */
  uint64_t sample_seed;
  int standardize;
  int outer_max_iter;
  int inner_max_iter;
  double tol_outer;
  double tol_inner;
  double tol_kkt;
  int threads;              /* cross-validation folds run in parallel */
} plasso_options;

typedef struct plasso_sim_options {
  const char* scenario;     /* prop_hier, prop_nonhier, tv_hier, tv_nonhier */
  int n;
  int p;
  int nz;
  int reps;
  int n_test;
  uint64_t seed;
  int threads;
} plasso_sim_options;

PLASSO_API const char* plasso_version(void);
PLASSO_API const char* plasso_status_string(plasso_status status);
PLASSO_API const char* plasso_last_error_message(void);
PLASSO_API void plasso_free_string(char* s);

PLASSO_API void plasso_options_init(plasso_options* options);
PLASSO_API void plasso_sim_options_init(plasso_sim_options* options);

/* Datasets: columns time, status, optional weight, x_* covariates, z_* modifiers. */
PLASSO_API plasso_status plasso_dataset_read_csv(const char* path, plasso_dataset** out);
PLASSO_API plasso_status plasso_dataset_parse_csv(const char* text, plasso_dataset** out);
/* x is n x p and z is n x nz, both row-major; weight may be NULL. */
PLASSO_API plasso_status plasso_dataset_create(size_t n, size_t p, size_t nz, const double* time, const int* status,
                                               const double* weight, const double* x, const double* z,
                                               plasso_dataset** out);
PLASSO_API size_t plasso_dataset_rows(const plasso_dataset* data);
PLASSO_API void plasso_dataset_free(plasso_dataset* data);

PLASSO_API plasso_status plasso_fit(const plasso_dataset* data, const plasso_options* options, plasso_model** out);
PLASSO_API plasso_status plasso_model_from_json(const char* json, plasso_model** out);
PLASSO_API plasso_status plasso_model_to_json(const plasso_model* model, char** out);
/* Coefficients on the fitting (standardized) scale. beta has p entries,
 * theta is p x (nz + basis terms) row-major. */
PLASSO_API plasso_status plasso_model_dims(const plasso_model* model, size_t* p, size_t* modifiers);
PLASSO_API plasso_status plasso_model_beta(const plasso_model* model, double* beta, size_t len);
PLASSO_API plasso_status plasso_model_theta(const plasso_model* model, double* theta, size_t len);
/* eta for every row: n values, or n x n_times row-major when times is given
 * (time-varying models); rows without times use each row's own time. */
PLASSO_API plasso_status plasso_model_predict(const plasso_model* model, const plasso_dataset* data,
                                              const double* times, size_t n_times, double* eta, size_t len);
/* Exact Cox partial log-likelihood of the model on data. */
PLASSO_API plasso_status plasso_model_loglik(const plasso_model* model, const plasso_dataset* data, double* out);
PLASSO_API void plasso_model_free(plasso_model* model);

PLASSO_API plasso_status plasso_fit_path(const plasso_dataset* data, const plasso_options* options, int with_cv,
                                         plasso_path** out);
PLASSO_API size_t plasso_path_size(const plasso_path* path);
PLASSO_API plasso_status plasso_path_lambda(const plasso_path* path, size_t index, double* lambda);
PLASSO_API plasso_status plasso_path_cv(const plasso_path* path, size_t index, double* mean, double* se);
/* Index of the selected lambda; PLASSO_INVALID_ARGUMENT when CV was not run. */
PLASSO_API plasso_status plasso_path_selected(const plasso_path* path, size_t* index);
PLASSO_API plasso_status plasso_path_model(const plasso_path* path, size_t index, plasso_model** out);
PLASSO_API plasso_status plasso_path_to_json(const plasso_path* path, char** out);
PLASSO_API void plasso_path_free(plasso_path* path);

/* Stacked case/control rows used by the logistic engine, as CSV. */
PLASSO_API plasso_status plasso_export_stacked_csv(const plasso_dataset* data, const plasso_options* options,
                                                   char** out);

/* Mean metrics table over successful replicates; failed may be NULL. */
PLASSO_API plasso_status plasso_simbench(const plasso_sim_options* options, int format, char** out, int* failed);

#ifdef __cplusplus
}
#endif

#endif /* PLASSO_PLASSO_H */
