/* Copyright (c) 2026, FGGM Lab contributors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef FGGM_FGGM_H
#define FGGM_FGGM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FGGM_API __declspec(dllexport)
#else
#define FGGM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fggm_status {
    FGGM_OK = 0,
    FGGM_ERR_DIMENSION = 1,
    FGGM_ERR_VALIDATION = 2,
    FGGM_ERR_CONTRACT = 3,
    FGGM_ERR_IO = 4,
    FGGM_ERR_BAD_MAGIC = 5,
    FGGM_ERR_LENGTH = 6,
    FGGM_ERR_CONFIG = 7,
    FGGM_ERR_RUNTIME = 8,
    FGGM_ERR_ARGUMENT = 9
} fggm_status;

/* Message of the last failure on the calling thread. Never NULL. */
FGGM_API const char* fggm_last_error(void);
FGGM_API const char* fggm_status_string(fggm_status status);
FGGM_API const char* fggm_version(void);

/* Strings handed out by the library are released with this. */
FGGM_API void fggm_string_free(char* s);

/* ---- model parameters ---- */

typedef struct fggm_params fggm_params;

/* dims = {input, hidden..., classes}, n_dims >= 2. */
FGGM_API fggm_status fggm_params_init(const size_t* dims, size_t n_dims, uint64_t seed, fggm_params** out);
FGGM_API fggm_status fggm_params_load(const char* path, fggm_params** out);
FGGM_API fggm_status fggm_params_save(const fggm_params* params, const char* path);
FGGM_API void fggm_params_free(fggm_params* params);

FGGM_API size_t fggm_params_count(const fggm_params* params);
/* NULL when index is out of range. The pointer lives as long as params. */
FGGM_API const char* fggm_params_name(const fggm_params* params, size_t index);
/* rank is 1 or 2; for rank 1 cols is set to 1. */
FGGM_API fggm_status fggm_params_shape(const fggm_params* params, size_t index, size_t* rank, size_t* rows, size_t* cols);
FGGM_API const double* fggm_params_data(const fggm_params* params, size_t index);
/* *equal = 1 when both sets have the same layout and bit-identical values. */
FGGM_API fggm_status fggm_params_equal(const fggm_params* a, const fggm_params* b, int* equal);

/* inputs is n x dim row-major; logits receives n x classes. */
FGGM_API fggm_status fggm_forward(const fggm_params* params, const double* inputs, size_t n, size_t dim,
                                  double* logits, size_t logits_len);

/* ---- run configuration ---- */

typedef struct fggm_config fggm_config;

FGGM_API fggm_status fggm_config_parse(const char* json_text, fggm_config** out);
FGGM_API fggm_status fggm_config_load(const char* path, fggm_config** out);
/* "strategy.alpha=0.8". The config is revalidated; on failure it is left unchanged. */
FGGM_API fggm_status fggm_config_set(fggm_config* config, const char* assignment);
/* Normalised JSON of the config. Free with fggm_string_free. */
FGGM_API fggm_status fggm_config_dump(const fggm_config* config, char** json_out);
/* Empty string when the config names no output directory. */
FGGM_API fggm_status fggm_config_output_dir(const fggm_config* config, char** dir_out);
FGGM_API void fggm_config_free(fggm_config* config);

/* ---- commands ---- */

typedef struct fggm_sweep_options {
    const double* alphas; /* may be NULL */
    size_t n_alphas;
    const char* strategies;   /* CSV, NULL or "" for the config's strategy */
    const char* aggregations; /* CSV of IA, None, OA */
    const uint64_t* seeds;    /* NULL: the config's seeds */
    size_t n_seeds;
    unsigned jobs; /* 0: all cores */
} fggm_sweep_options;

/* Runs every configured seed under out_dir. text_out (optional) receives the
 * summary table. Returns FGGM_ERR_RUNTIME when any seed failed. */
FGGM_API fggm_status fggm_run(const fggm_config* config, const char* out_dir, unsigned jobs, char** text_out);

/* failed_out (optional) receives the number of failed cells. Failed cells do not
 * stop the sweep; the call then returns FGGM_ERR_RUNTIME. */
FGGM_API fggm_status fggm_sweep(const fggm_config* config, const fggm_sweep_options* options, const char* out_dir,
                                char** text_out, size_t* failed_out);

FGGM_API fggm_status fggm_report(const char* dir, char** text_out);

#ifdef __cplusplus
}
#endif

#endif
