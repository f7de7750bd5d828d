#pragma once

#include <stdint.h>

#if defined(NCM_BUILDING_LIBRARY)
#define NCM_API __attribute__((visibility("default")))
#else
#define NCM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/// Status of every call; details via ncm_last_error().
typedef enum ncm_status {
    NCM_OK = 0,
    NCM_ERR_INVALID = 1,       /* bad config, argument or checkpoint */
    NCM_ERR_RUNTIME = 2,       /* integration failure, divergence, I/O */
    NCM_ERR_CHECK_FAILED = 3,  /* a verification ran and did not pass */
} ncm_status;

typedef struct ncm_experiment ncm_experiment;

NCM_API const char* ncm_version(void);
/// Message of the last failing call on this thread ("" if none).
NCM_API const char* ncm_last_error(void);

NCM_API ncm_status ncm_experiment_load(const char* config_path, ncm_experiment** out);
NCM_API ncm_status ncm_experiment_parse(const char* config_text, ncm_experiment** out);
NCM_API void ncm_experiment_free(ncm_experiment* exp);

NCM_API ncm_status ncm_experiment_set_seed(ncm_experiment* exp, uint64_t seed);
NCM_API ncm_status ncm_experiment_set_out_dir(ncm_experiment* exp, const char* dir);
/// Progress lines on stdout when nonzero.
NCM_API ncm_status ncm_experiment_set_verbose(ncm_experiment* exp, int verbose);
NCM_API ncm_status ncm_experiment_name(const ncm_experiment* exp, const char** name);

NCM_API ncm_status ncm_gen_data(ncm_experiment* exp);
/// `checkpoint` may be NULL; an existing file is resumed.
NCM_API ncm_status ncm_train(ncm_experiment* exp, const char* checkpoint);
NCM_API ncm_status ncm_evaluate(ncm_experiment* exp, const char* checkpoint);
/// Writes the largest relative error to `max_rel_err` when non-NULL.
NCM_API ncm_status ncm_verify_gradients(ncm_experiment* exp, double* max_rel_err);
NCM_API ncm_status ncm_sweep_delay(ncm_experiment* exp);

#ifdef __cplusplus
}
#endif
