/* C API of the SAS risk-prediction library.
 *
 * All functions return a status code; 0 is success. On failure a
 * thread-local message is available from sas_last_error(). Handles are
 * opaque and owned by the caller through the matching _free function.
 */
#ifndef SAS_H
#define SAS_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    SAS_OK = 0,
    SAS_ERR_CONFIG = 2,
    SAS_ERR_DATA = 3,
    SAS_ERR_NUMERIC = 4
} sas_status;

const char* sas_version(void);

/* Message from the most recent failing call on this thread. */
const char* sas_last_error(void);

typedef struct sas_dataset sas_dataset;
typedef struct sas_model sas_model;

/* Datasets ------------------------------------------------------------- */

/* Load labeled + unlabeled CSV files (header row; y, x_*, s_* columns). */
sas_status sas_dataset_load_csv(const char* labeled_csv, const char* unlabeled_csv,
                                sas_dataset** out);

/* Generate a simulation preset ("I-sparse-strong", "II-dense-moderate", ...).
 * Pass 0 for n/N/p/q to keep the preset defaults. */
sas_status sas_dataset_simulate(const char* preset, long n, long N, long p, long q,
                                unsigned long long seed, sas_dataset** out);

void sas_dataset_free(sas_dataset* d);

sas_status sas_dataset_dims(const sas_dataset* d, long* n, long* N, long* p, long* q);

/* Fitting and inference ------------------------------------------------- */

/* Run the two-step fit plus cross-fitted machinery. config_json accepts the
 * same keys as the CLI fit config minus file paths:
 *   {"link": "logit", "k_folds": 5, "lambda_gamma": "cv", ...}
 * An empty string or "{}" selects all defaults. */
sas_status sas_fit(const sas_dataset* d, const char* config_json, sas_model** out);

void sas_model_free(sas_model* m);

sas_status sas_model_save(const sas_model* m, const char* path);

/* Load a saved artifact for point prediction (interval estimation needs the
 * fitted session from sas_fit). */
sas_status sas_model_load(const char* path, sas_model** out);

/* Coefficient vector of the prediction model; len must equal p+1. */
sas_status sas_model_coefficients(const sas_model* m, double* beta, long len);

/* Response-scale predictions for row-major covariate rows (p per row,
 * no intercept). */
sas_status sas_model_predict(const sas_model* m, const double* x_rows, long rows, long p,
                             double* out_response);

/* Debiased point estimate, variance, response-scale CI and point prediction
 * for one covariate vector (p entries, no intercept). Requires a model from
 * sas_fit whose dataset is still alive. */
sas_status sas_model_interval(const sas_model* m, const double* x_new, long p, double alpha,
                              double* theta_hat, double* v_hat, double* ci_lo, double* ci_hi,
                              double* point_response);

/* Command-level entry points -------------------------------------------- */

/* command: "fit" | "simulate" | "replicate" | "predict" | "cv".
 * config_json: the full command configuration (see README). Writes output
 * files per the config and returns a status. */
sas_status sas_run_command(const char* command, const char* config_json);

#ifdef __cplusplus
}
#endif

#endif /* SAS_H */
