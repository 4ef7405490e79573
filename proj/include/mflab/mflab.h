/* C interface to the manifold-overfitting lab. Every function returns an
 * mflab_status; on failure the thread's last error message (and offending
 * value, when there is one) is available through mflab_last_error*. Objects are
 * opaque handles released with their matching *_free function. */
#ifndef MFLAB_H
#define MFLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(MFLAB_BUILDING)
#define MFLAB_API __attribute__((visibility("default")))
#else
#define MFLAB_API
#endif

typedef enum mflab_status {
  MFLAB_OK = 0,
  MFLAB_ERR_SHAPE = 1,
  MFLAB_ERR_NUMERIC = 2,
  MFLAB_ERR_UNSUPPORTED = 3,
  MFLAB_ERR_CONFIG = 4,
  MFLAB_ERR_INPUT = 5,
  MFLAB_ERR_DEGENERATE_ENCODING = 6,
  MFLAB_ERR_RANK_DEFICIENCY = 7,
  MFLAB_ERR_OFF_MANIFOLD = 8,
  MFLAB_ERR_IO = 9,
  MFLAB_ERR_NULL_ARGUMENT = 10,
  MFLAB_ERR_BUFFER_TOO_SMALL = 11,
  MFLAB_ERR_INTERNAL = 12
} mflab_status;

typedef enum mflab_target_kind {
  MFLAB_TARGET_TWO_POINT = 0,
  MFLAB_TARGET_VON_MISES_CIRCLE = 1,
  MFLAB_TARGET_SPIRAL = 2
} mflab_target_kind;

typedef enum mflab_command {
  MFLAB_CMD_SIMULATE = 0,
  MFLAB_CMD_TRAIN = 1,
  MFLAB_CMD_EVALUATE = 2,
  MFLAB_CMD_RUN = 3,
  MFLAB_CMD_OVERFIT_DEMO = 4
} mflab_command;

/* Ground truth. two_point uses weight (mass at +1); the circle uses kappa and
 * radius; the spiral uses turns and scale. */
typedef struct mflab_target {
  mflab_target_kind kind;
  double weight;
  double kappa;
  double radius;
  double turns;
  double scale;
} mflab_target;

typedef struct mflab_config mflab_config;
typedef struct mflab_dataset mflab_dataset;
typedef struct mflab_model mflab_model;

MFLAB_API const char* mflab_version(void);
MFLAB_API const char* mflab_status_name(int status);
/* Message of the last failed call on this thread ("" if none). */
MFLAB_API const char* mflab_last_error(void);
/* Offending value of the last failure; returns 1 and writes it when present. */
MFLAB_API int mflab_last_error_value(double* value);
/* Strings returned through char** out-parameters are released with this. */
MFLAB_API void mflab_string_free(char* s);

/* Experiment configs (JSON, schema_version 1). */
MFLAB_API mflab_status mflab_config_load(const char* path, mflab_config** out);
MFLAB_API mflab_status mflab_config_parse(const char* json_text, mflab_config** out);
MFLAB_API mflab_status mflab_config_default_overfit(mflab_config** out);
MFLAB_API void mflab_config_free(mflab_config* cfg);
MFLAB_API mflab_status mflab_config_set_seeds(mflab_config* cfg, const uint64_t* seeds, size_t n);
MFLAB_API mflab_status mflab_config_set_output_dir(mflab_config* cfg, const char* dir);
/* Writes the 16-hex-digit config hash plus terminator; buf needs 17 bytes. */
MFLAB_API mflab_status mflab_config_hash(const mflab_config* cfg, char* buf, size_t len);

/* Runs a command. failed_seeds (may be NULL) receives the number of seeds whose run
 * aborted; summary (may be NULL) receives a human-readable summary. Returns MFLAB_OK
 * when the command itself ran, even if individual seeds failed. */
MFLAB_API mflab_status mflab_execute(const mflab_config* cfg, mflab_command command, int plots,
                                     size_t* failed_seeds, char** summary);
/* Aggregates the metric ledger in dir into report.md and returns the text. */
MFLAB_API mflab_status mflab_report(const char* dir, char** text);

/* Datasets. */
MFLAB_API mflab_status mflab_sample_target(const mflab_target* target, size_t n, uint64_t seed,
                                           mflab_dataset** out);
MFLAB_API void mflab_dataset_free(mflab_dataset* ds);
MFLAB_API mflab_status mflab_dataset_shape(const mflab_dataset* ds, size_t* rows, size_t* cols);
/* Copies rows*cols values, row-major. */
MFLAB_API mflab_status mflab_dataset_copy(const mflab_dataset* ds, double* buf, size_t len);

/* Pushforward models loaded from two-step checkpoints. */
MFLAB_API mflab_status mflab_model_load(const char* path, mflab_model** out);
MFLAB_API void mflab_model_free(mflab_model* m);
MFLAB_API mflab_status mflab_model_dims(const mflab_model* m, size_t* latent_dim, size_t* ambient_dim);
/* log p_X(x) on the learned manifold; MFLAB_ERR_OFF_MANIFOLD carries the residual. */
MFLAB_API mflab_status mflab_model_log_density(const mflab_model* m, const double* x, size_t dim, double* out);
/* n samples, row-major into buf (len >= n * ambient_dim). */
MFLAB_API mflab_status mflab_model_sample(const mflab_model* m, size_t n, uint64_t seed, double* buf, size_t len);

/* Gaussian-smoothed ground truth and its weak-convergence deviation. */
MFLAB_API mflab_status mflab_convolved_density(const mflab_target* target, double sigma, const double* x,
                                               size_t dim, double* out);
MFLAB_API mflab_status mflab_weak_convergence(const mflab_target* target, double sigma, double split,
                                              double* out);

/* OOD evaluation on log-likelihood lists. */
MFLAB_API mflab_status mflab_fit_stump(const double* train_in, size_t n_in, const double* train_ood, size_t n_ood,
                                       double* threshold, double* train_accuracy);
MFLAB_API mflab_status mflab_ood_accuracy(const double* test_in, size_t n_in, const double* test_ood,
                                          size_t n_ood, double threshold, double* out);
/* Squared Frechet distance between Gaussians fitted to two row-major sample sets. */
MFLAB_API mflab_status mflab_frechet_samples(const double* a, size_t n_a, const double* b, size_t n_b,
                                             size_t dim, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MFLAB_H */
