#ifndef CCOPF_H
#define CCOPF_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Error codes for every fallible entry point.
 */
typedef enum CcopfStatus {
  CcopfStatus_Ok = 0,
  CcopfStatus_NullArgument = 1,
  CcopfStatus_InvalidUtf8 = 2,
  CcopfStatus_ParseError = 3,
  CcopfStatus_UnknownScenario = 4,
  CcopfStatus_SolveError = 5,
  CcopfStatus_IndexOutOfRange = 6,
  CcopfStatus_Panic = 7,
} CcopfStatus;

/**
 * Opaque result handle.
 */
typedef struct ccopf_result ccopf_result;

/**
 * Opaque scenario handle.
 */
typedef struct ccopf_scenario ccopf_scenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a handle for a built-in scenario name ("c1", "c1b", "c2").
 */
enum CcopfStatus ccopf_scenario_builtin(const char *name, struct ccopf_scenario **out);

/**
 * Parse a scenario from a JSON document.
 */
enum CcopfStatus ccopf_scenario_from_json(const char *json, struct ccopf_scenario **out);

/**
 * Override the sample count and seed before running.
 */
enum CcopfStatus ccopf_scenario_set_sampling(struct ccopf_scenario *sc,
                                             uintptr_t samples,
                                             uint64_t seed);

/**
 * Run the pipeline; the result handle owns all derived laws and tables.
 */
enum CcopfStatus ccopf_run(const struct ccopf_scenario *sc, struct ccopf_result **out);

/**
 * Number of tightening cases in the result.
 */
uintptr_t ccopf_result_n_cases(const struct ccopf_result *res);

/**
 * Tightening multiplier of case `idx`.
 */
enum CcopfStatus ccopf_result_delta(const struct ccopf_result *res, uintptr_t idx, double *out);

/**
 * Probability that all generation bounds hold for case `idx`.
 */
enum CcopfStatus ccopf_result_p_sat(const struct ccopf_result *res, uintptr_t idx, double *out);

/**
 * Variational distance to the in-hindsight law at generator `bus`.
 */
enum CcopfStatus ccopf_result_tvd(const struct ccopf_result *res,
                                  uintptr_t idx,
                                  uintptr_t bus,
                                  double *out);

/**
 * Policy coefficient alpha[ell][bus] for case `idx`.
 */
enum CcopfStatus ccopf_result_alpha(const struct ccopf_result *res,
                                    uintptr_t idx,
                                    uintptr_t ell,
                                    uintptr_t bus,
                                    double *out);

/**
 * Serialize the summary table as JSON; free with `ccopf_string_free`.
 */
enum CcopfStatus ccopf_result_summary_json(const struct ccopf_result *res, char **out);

/**
 * Release a scenario handle. Null is a no-op.
 */
void ccopf_scenario_free(struct ccopf_scenario *sc);

/**
 * Release a result handle. Null is a no-op.
 */
void ccopf_result_free(struct ccopf_result *res);

/**
 * Release a string allocated by this library. Null is a no-op.
 */
void ccopf_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CCOPF_H */
