/* C interface to the smcev evidence estimation library. */
#ifndef SMCEV_SMCEV_H
#define SMCEV_SMCEV_H

#include <stddef.h>
#include <stdint.h>

#if defined(SMCEV_BUILDING_LIBRARY)
#define SMCEV_API __attribute__((visibility("default")))
#else
#define SMCEV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smcev_status {
  SMCEV_OK = 0,
  SMCEV_ERR_CONFIG = 1,     /* bad or unknown configuration key or value */
  SMCEV_ERR_DEGENERATE = 2, /* degenerate weights or micro-step cap */
  SMCEV_ERR_IO = 3,
  SMCEV_ERR_INVALID = 4,    /* invalid argument, including NULL handles */
  SMCEV_ERR_INTERNAL = 5
} smcev_status;

typedef struct smcev_config smcev_config;
typedef struct smcev_result smcev_result;

SMCEV_API const char* smcev_version(void);

/* Message of the last failed call on this thread; empty when none. */
SMCEV_API const char* smcev_last_error(void);

/* Caps the worker pool at k threads; k = 0 restores the default. */
SMCEV_API int smcev_set_threads(int k);

SMCEV_API int smcev_config_load(const char* path, smcev_config** out);
/* Relative data paths resolve against base_dir (NULL means "."). */
SMCEV_API int smcev_config_parse(const char* text, const char* base_dir, smcev_config** out);
/* Overrides "section.key" and revalidates; the handle is unchanged on error. */
SMCEV_API int smcev_config_set(smcev_config* cfg, const char* key, const char* value);
/* Effective value of "section.key", or NULL when the key is not set. The
   pointer stays valid until the next call on cfg. */
SMCEV_API const char* smcev_config_get(const smcev_config* cfg, const char* key);
SMCEV_API int smcev_config_write_resolved(const smcev_config* cfg, const char* path);
SMCEV_API void smcev_config_free(smcev_config* cfg);

/* One run of the configured sampler. */
SMCEV_API int smcev_run(const smcev_config* cfg, smcev_result** out);
SMCEV_API size_t smcev_result_estimate_count(const smcev_result* res);
/* Strings are owned by res. */
SMCEV_API int smcev_result_estimate(const smcev_result* res, size_t i, const char** estimator, const char** model,
                                    double* log_evidence);
SMCEV_API size_t smcev_result_trace_length(const smcev_result* res);
/* Writes trace.csv and estimates.csv into dir, creating it if needed. */
SMCEV_API int smcev_result_write(const smcev_result* res, const char* dir);
SMCEV_API void smcev_result_free(smcev_result* res);

/* R replicate runs; writes summary.csv into dir. */
SMCEV_API int smcev_replicate(const smcev_config* cfg, size_t replicates, const char* dir);
/* Quadrature rule by refinement grid; writes bias_table.csv into dir. */
SMCEV_API int smcev_bias_table(const smcev_config* cfg, const char* dir);
/* Empirical against predicted CLT variance; writes clt_check.csv into dir. */
SMCEV_API int smcev_clt_check(const smcev_config* cfg, const char* dir);
/* Writes the benchmark datasets into dir. */
SMCEV_API int smcev_gen_data(const char* dir, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* SMCEV_SMCEV_H */
