#ifndef LBSC_H
#define LBSC_H

/* C interface to the learning-based safety-stability controller library.
 * All objects are opaque handles; every fallible call returns a status code
 * and leaves a human-readable message in lbsc_last_error() on failure.
 * Handles are created through out-parameters and released with the matching
 * _free function; freeing NULL is a no-op. */

#include <stddef.h>

#if defined(_WIN32)
#if defined(LBSC_BUILD)
#define LBSC_API __declspec(dllexport)
#else
#define LBSC_API __declspec(dllimport)
#endif
#else
#define LBSC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct lbsc_scenario lbsc_scenario_t;
typedef struct lbsc_log lbsc_log_t;

typedef enum {
  LBSC_OK = 0,
  LBSC_ERR_NULL = 1,    /* a required pointer argument was NULL */
  LBSC_ERR_INVALID = 2, /* bad argument or configuration value */
  LBSC_ERR_IO = 3,      /* file could not be opened or written */
  LBSC_ERR_PARSE = 4,   /* malformed scenario or log file */
  LBSC_ERR_NUMERIC = 5, /* rejected observation or failed factorization */
  LBSC_ERR_FAULT = 6    /* simulation produced a non-finite state */
} lbsc_status;

/* Library version string, e.g. "0.1.0". */
LBSC_API const char* lbsc_version(void);

/* Message of the most recent failure on this thread; empty until one occurs. */
LBSC_API const char* lbsc_last_error(void);

/* Five-car platoon scenario with the stock parameters. */
LBSC_API lbsc_status lbsc_scenario_default(lbsc_scenario_t** out);

/* Reads a `key = value` scenario file. */
LBSC_API lbsc_status lbsc_scenario_load(const char* path, lbsc_scenario_t** out);

/* Sets one key, using the same names and formats as the scenario file. */
LBSC_API lbsc_status lbsc_scenario_set(lbsc_scenario_t* scenario, const char* key,
                                       const char* value);

/* Reads one key back, formatted as the scenario file would print it. */
LBSC_API lbsc_status lbsc_scenario_get(const lbsc_scenario_t* scenario, const char* key, char* buf,
                                       size_t buf_size);

LBSC_API lbsc_status lbsc_scenario_save(const lbsc_scenario_t* scenario, const char* path);

/* 16-hex-digit digest of the canonical scenario text (buf_size >= 17). */
LBSC_API lbsc_status lbsc_scenario_hash(const lbsc_scenario_t* scenario, char* buf,
                                        size_t buf_size);

LBSC_API void lbsc_scenario_free(lbsc_scenario_t* scenario);

/* Runs one closed-loop episode and hands back its step log. If the
 * simulation faults mid-episode the call returns LBSC_ERR_FAULT but still
 * sets *out to the partial log (see lbsc_log_fault). */
LBSC_API lbsc_status lbsc_run_episode(const lbsc_scenario_t* scenario, lbsc_log_t** out);

/* Abort description of a faulted run; empty string for a clean one. */
LBSC_API const char* lbsc_log_fault(const lbsc_log_t* log);

/* Writes the log; format is "csv" or "json". */
LBSC_API lbsc_status lbsc_log_export(const lbsc_log_t* log, const char* path, const char* format);

LBSC_API lbsc_status lbsc_log_load_csv(const char* path, lbsc_log_t** out);

LBSC_API size_t lbsc_log_rows(const lbsc_log_t* log);

/* Mean |v4 - v_des| over log rows with t0 <= t < t1. */
LBSC_API lbsc_status lbsc_log_mae(const lbsc_log_t* log, double t0, double t1, double v_des,
                                  double* out);

/* Gap statistics between the controlled car and its predecessor. Any of the
 * out-pointers may be NULL; first_violation_t is -1 when the gap never left
 * [b_st, b_go]. */
LBSC_API lbsc_status lbsc_log_headway(const lbsc_log_t* log, double b_st, double b_go,
                                      double* min_gap, double* max_gap, int* violations,
                                      double* first_violation_t);

/* Wall-clock statistics of the run that produced the log (all measured,
 * regardless of whether they were exported). Any out-pointer may be NULL. */
LBSC_API lbsc_status lbsc_log_timing(const lbsc_log_t* log, double* mean_step_ms,
                                     double* max_step_ms, double* mean_solve_ms,
                                     double* max_solve_ms);

LBSC_API void lbsc_log_free(lbsc_log_t* log);

#ifdef __cplusplus
}
#endif

#endif /* LBSC_H */
