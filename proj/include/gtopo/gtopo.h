#ifndef GTOPO_GTOPO_H
#define GTOPO_GTOPO_H

#include <stddef.h>
#include <stdint.h>

#if defined(GTOPO_BUILDING_LIBRARY)
#define GTOPO_API __attribute__((visibility("default")))
#else
#define GTOPO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gtopo_status {
  GTOPO_OK = 0,
  GTOPO_INVALID_ARGUMENT = 1,
  GTOPO_DIMENSION_MISMATCH = 2,
  GTOPO_MODEL_CONSTRUCTION = 3,
  GTOPO_SAMPLING = 4,
  GTOPO_NUMERICAL = 5,
  GTOPO_DIVERGENCE = 6,
  GTOPO_NON_CONVERGENCE = 7,
  GTOPO_INSTABILITY = 8,
  GTOPO_IO = 9,
  GTOPO_PARSE = 10,
  GTOPO_INTERNAL = 99
} gtopo_status;

typedef struct gtopo_config gtopo_config;
typedef struct gtopo_artifacts gtopo_artifacts;
typedef struct gtopo_estimator gtopo_estimator;

/* Message of the last failed call on this thread; never NULL. */
GTOPO_API const char* gtopo_last_error(void);
GTOPO_API const char* gtopo_status_name(gtopo_status s);

/* Configuration */
GTOPO_API gtopo_status gtopo_config_load(const char* path, gtopo_config** out);
GTOPO_API gtopo_status gtopo_config_parse(const char* text, gtopo_config** out);
GTOPO_API gtopo_status gtopo_config_set(gtopo_config* cfg, const char* key,
                                        const char* value);
/* Writes the normalized text form; *len receives the full length. */
GTOPO_API gtopo_status gtopo_config_text(const gtopo_config* cfg, char* buf,
                                         size_t cap, size_t* len);
GTOPO_API void gtopo_config_free(gtopo_config* cfg);

/* Experiments */
typedef struct gtopo_run_summary {
  long horizon;
  int feature_size;
  int runs;
  int completed_runs;
  int diverged_runs;
  double mu;
  double stability_bound;
  double msd_emp_final;
  double msd_theo_final;
  double msd_ss; /* NaN when unavailable */
  double msd_max_gap_db;
} gtopo_run_summary;

GTOPO_API gtopo_status gtopo_run(const gtopo_config* cfg,
                                 gtopo_artifacts** out);
GTOPO_API gtopo_status gtopo_artifacts_summary(const gtopo_artifacts* art,
                                               gtopo_run_summary* out);
/* dir NULL writes to the configured output directory. */
GTOPO_API gtopo_status gtopo_artifacts_write(const gtopo_artifacts* art,
                                             const char* dir);
GTOPO_API const char* gtopo_artifacts_dir(const gtopo_artifacts* art);
GTOPO_API void gtopo_artifacts_free(gtopo_artifacts* art);

/* Moments and the optimal coefficients */
typedef struct gtopo_moments_info {
  int nodes;
  int dictionary_size;
  int feature_size;
  double lambda_max;
  double lambda_min;
  double stability_bound;
  double r_yy;
} gtopo_moments_info;

/* Computes (or loads from the configured cache) the moment set. */
GTOPO_API gtopo_status gtopo_moments(const gtopo_config* cfg,
                                     gtopo_moments_info* out);

typedef struct gtopo_solve_info {
  int converged;
  long iterations;
  double residual;
  double objective;
  int feature_size;
} gtopo_solve_info;

/* gamma may be NULL to query the size. */
GTOPO_API gtopo_status gtopo_solve_gamma(const gtopo_config* cfg,
                                         double* gamma, size_t cap,
                                         gtopo_solve_info* info);

/* Curve comparison over two CSV columns */
typedef struct gtopo_compare_report {
  double max_gap_db;
  long max_gap_index;
  long burn_in;
  long compared;
  long excluded;
} gtopo_compare_report;

/* burn_in < 0 selects one tenth of the curve length. */
GTOPO_API gtopo_status gtopo_compare_csv(const char* path_a,
                                         const char* column_a,
                                         const char* path_b,
                                         const char* column_b, long burn_in,
                                         gtopo_compare_report* out);

/* Kernel */
GTOPO_API gtopo_status gtopo_kernel_eval(double sigma, const double* a,
                                         const double* b, size_t dim,
                                         double* out);
/* Writes s ((N+1)|D|) and t ((N+1)|D| x N, column-major). */
GTOPO_API gtopo_status gtopo_features(double sigma, const double* dictionary,
                                      size_t count, size_t dim,
                                      const double* y, double* s, double* t);

/* Online estimator */
GTOPO_API gtopo_status gtopo_estimator_create(int nodes, int dictionary_size,
                                              double mu, double eta,
                                              double forgetting,
                                              gtopo_estimator** out);
GTOPO_API gtopo_status gtopo_estimator_update_covariance(gtopo_estimator* est,
                                                         const double* t);
GTOPO_API gtopo_status gtopo_estimator_step(gtopo_estimator* est,
                                            const double* s, double y);
GTOPO_API gtopo_status gtopo_estimator_delta(const gtopo_estimator* est,
                                             int m, double* out);
GTOPO_API gtopo_status gtopo_estimator_gamma(const gtopo_estimator* est,
                                             double* out, size_t cap);
GTOPO_API void gtopo_estimator_free(gtopo_estimator* est);

#ifdef __cplusplus
}
#endif

#endif /* GTOPO_GTOPO_H */
