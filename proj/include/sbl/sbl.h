/* C interface to the sparse Bayesian kernel learning library.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every fallible call returns an sbl_status; on
 * failure sbl_last_error() describes the problem (per thread). Output
 * handles are written only on success. */
#ifndef SBL_H
#define SBL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef SBL_BUILDING_LIBRARY
#    define SBL_API __declspec(dllexport)
#  else
#    define SBL_API __declspec(dllimport)
#  endif
#else
#  define SBL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sbl_status {
  SBL_OK = 0,
  SBL_ERR_INPUT = 1,
  SBL_ERR_CONFIG = 2,
  SBL_ERR_NUMERIC = 3,
  SBL_ERR_INSUFFICIENT_INFORMATION = 4,
  SBL_ERR_REFUSED = 5,
  SBL_ERR_UNSUPPORTED = 6,
  SBL_ERR_IO = 7,
  SBL_ERR_PARSE = 8,
  SBL_ERR_INTERNAL = 9
} sbl_status;

/* sbl_record_code() of a propriety verdict. */
typedef enum sbl_propriety { SBL_PROPER = 0, SBL_IMPROPER = 1, SBL_UNDETERMINED = 2 } sbl_propriety;

/* sbl_record_code() of a truncation report. */
typedef enum sbl_probe { SBL_CONVERGENT_ESTIMATE = 0, SBL_DIVERGENCE_EVIDENCE = 1 } sbl_probe;

typedef enum sbl_lambda_kind {
  SBL_LAMBDA_SHAPE_RATE = 0, /* lambda^(a-1) exp(-b lambda), proper or not */
  SBL_LAMBDA_JEFFREYS = 1,   /* 1 / lambda */
  SBL_LAMBDA_HALF_CAUCHY = 2,/* half-Cauchy(scale) on lambda^(-1/2) */
  SBL_LAMBDA_GUMBEL2 = 3     /* type-2 Gumbel(scale) */
} sbl_lambda_kind;

typedef struct sbl_lambda_prior {
  sbl_lambda_kind kind;
  double a, b, scale;
} sbl_lambda_prior;

/* kind: "gaussian" (alias "rbf"), "laplace", "polynomial" or "linear". */
typedef struct sbl_kernel {
  const char* kind;
  double theta;
} sbl_kernel;

typedef struct sbl_hyper {
  double a, b, c, d;
} sbl_hyper;

typedef struct sbl_chain_config {
  uint64_t n_iter;
  uint64_t burn_in;
  uint64_t thin;
  uint64_t seed;
  int allow_improper;
} sbl_chain_config;

typedef struct sbl_classifier_priors {
  sbl_lambda_prior lambda;
  double c, d;
  double u1, u2;
  double lambda0;
} sbl_classifier_priors;

typedef struct sbl_fit_options {
  int max_iter;
  double tol;
  double prune_threshold;
} sbl_fit_options;

typedef struct sbl_dataset sbl_dataset;
typedef struct sbl_record sbl_record;
typedef struct sbl_rvm_fit sbl_rvm_fit;
typedef struct sbl_trace sbl_trace;

SBL_API const char* sbl_version(void);
SBL_API const char* sbl_last_error(void);
SBL_API const char* sbl_status_name(sbl_status status);

/* Filled with the library defaults. */
SBL_API sbl_chain_config sbl_chain_config_default(void);
SBL_API sbl_classifier_priors sbl_classifier_priors_default(void);
SBL_API sbl_fit_options sbl_fit_options_default(void);

/* ---- datasets ---- */
/* response may be NULL or "" when the file has no response column. */
SBL_API sbl_status sbl_dataset_read_csv(const char* path, const char* response, sbl_dataset** out);
/* X is row-major n x p; y may be NULL. */
SBL_API sbl_status sbl_dataset_from_arrays(const double* X, size_t n, size_t p, const double* y, sbl_dataset** out);
SBL_API size_t sbl_dataset_rows(const sbl_dataset* d);
SBL_API size_t sbl_dataset_cols(const sbl_dataset* d);
SBL_API sbl_status sbl_dataset_row(const sbl_dataset* d, size_t i, double* out, size_t p);
SBL_API void sbl_dataset_free(sbl_dataset* d);

/* ---- records: one line of JSON, optionally a CSV payload ---- */
SBL_API const char* sbl_record_json(const sbl_record* r);
SBL_API const char* sbl_record_csv(const sbl_record* r); /* "" when absent */
SBL_API int sbl_record_code(const sbl_record* r);
SBL_API void sbl_record_free(sbl_record* r);

/* ---- propriety gate ----
 * data and kernel may be NULL (no data); n <= 0 means unknown. */
SBL_API sbl_status sbl_check_rvm_propriety(const sbl_lambda_prior* prior, double c, double d,
                                           const sbl_dataset* data, const sbl_kernel* kernel, long n,
                                           sbl_record** out);
SBL_API sbl_status sbl_check_classifier_propriety(const sbl_classifier_priors* priors, sbl_record** out);

/* ---- type-II maximum likelihood RVM ----
 * With theta_grid of length > 0, theta is chosen by k-fold CV (folds) and
 * kernel->theta is ignored. gate_hp is the Bayesian reading recorded with
 * the fit; NULL means flat priors, (1, 0, 1, 0). */
SBL_API sbl_status sbl_rvm_fit_run(const sbl_dataset* data, const sbl_kernel* kernel, const double* theta_grid,
                                   size_t grid_len, int folds, const sbl_fit_options* opts,
                                   const sbl_hyper* gate_hp, sbl_rvm_fit** out);
SBL_API sbl_status sbl_rvm_fit_record(const sbl_rvm_fit* fit, sbl_record** out);
SBL_API sbl_status sbl_rvm_fit_load(const char* record_json, sbl_rvm_fit** out);
SBL_API sbl_status sbl_rvm_fit_predict(const sbl_rvm_fit* fit, const double* x, size_t p, double* mean,
                                       double* variance);
SBL_API size_t sbl_rvm_fit_relevance_count(const sbl_rvm_fit* fit);
SBL_API double sbl_rvm_fit_sigma2(const sbl_rvm_fit* fit);
SBL_API double sbl_rvm_fit_theta(const sbl_rvm_fit* fit);
SBL_API void sbl_rvm_fit_free(sbl_rvm_fit* fit);

/* ---- samplers ---- */
SBL_API sbl_status sbl_gibbs_rvm(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                                 const sbl_chain_config* cfg, sbl_trace** out);
/* loss: "logistic" or "hinge"; kernel->theta is the initial theta (<= 0
 * means the midpoint of (u1, u2)). Responses must be 0/1. */
SBL_API sbl_status sbl_classifier_run(const sbl_dataset* data, const sbl_kernel* kernel, const char* loss,
                                      const sbl_classifier_priors* priors, const sbl_chain_config* cfg,
                                      sbl_trace** out);
SBL_API sbl_status sbl_classifier_predict(const sbl_trace* trace, const double* x, size_t p, double* probability,
                                          double* mcse);
SBL_API size_t sbl_trace_rows(const sbl_trace* t);
SBL_API sbl_status sbl_trace_summary(const sbl_trace* t, sbl_record** out);
SBL_API sbl_status sbl_trace_csv(const sbl_trace* t, sbl_record** out);
SBL_API void sbl_trace_free(sbl_trace* t);

/* ---- impropriety lab ---- */
/* code 0 when every suite passes, 1 otherwise. */
SBL_API sbl_status sbl_verify_bounds(uint64_t seed, size_t instances, sbl_record** out);
/* n <= 2. code is an sbl_probe; the CSV payload holds (T, I(T)). */
SBL_API sbl_status sbl_estimate_marginal(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                                         const double* T_grid, size_t grid_len, sbl_record** out);
SBL_API sbl_status sbl_demo_impropriety(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                                        const sbl_chain_config* cfg, const double* T_grid, size_t grid_len,
                                        sbl_record** out);

#ifdef __cplusplus
}
#endif

#endif /* SBL_H */
