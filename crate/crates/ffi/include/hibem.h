#ifndef HIBEM_H
#define HIBEM_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible interface call.
 */
typedef enum hibem_status {
  /**
   * Success.
   */
  HIBEM_STATUS_OK = 0,
  /**
   * Malformed input: JSON, geometry, configuration or a null or
   * non-UTF-8 argument.
   */
  HIBEM_STATUS_INVALID_INPUT = 1,
  /**
   * The iterative solver did not reach the requested tolerance.
   */
  HIBEM_STATUS_NO_CONVERGENCE = 2,
  /**
   * Internal failure (singular system, oversized dense request, IO).
   */
  HIBEM_STATUS_RUNTIME = 3,
} hibem_status;

/**
 * Study selector for `hibem_run_study`.
 */
typedef enum hibem_study_kind {
  HIBEM_STUDY_KIND_SOLVE = 0,
  HIBEM_STUDY_KIND_CONVERGENCE = 1,
  HIBEM_STUDY_KIND_COMPRESSION = 2,
} hibem_study_kind;

/**
 * Opaque parsed problem.
 */
typedef struct hibem_problem hibem_problem;

/**
 * Opaque solved problem.
 */
typedef struct hibem_solution hibem_solution;

/**
 * Discretization and solver parameters. Obtain defaults from
 * `hibem_options_default` and override fields as needed.
 */
typedef struct hibem_options {
  /**
   * Polynomial degree of the Cauchy data spaces.
   */
  size_t degree;
  /**
   * Chebyshev interpolation order of the far field.
   */
  size_t interp_order;
  /**
   * Admissibility parameter of the block cluster tree.
   */
  double eta;
  /**
   * Cluster leaf size.
   */
  size_t n_min;
  /**
   * Refinement levels; spans per patch double each level.
   */
  size_t levels;
  /**
   * Iterative solver tolerance.
   */
  double tol;
  /**
   * Seed of the deterministic random vectors in studies.
   */
  uint64_t seed;
} hibem_options;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread. Never null.
 */
const char *hibem_last_error(void);

/**
 * Fill `out` with the default options.
 */
enum hibem_status hibem_options_default(struct hibem_options *out);

/**
 * Parse a problem from a JSON description.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum hibem_status hibem_problem_parse(const char *json, struct hibem_problem **out);

/**
 * Parse a problem from a JSON file on disk.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be writable.
 */
enum hibem_status hibem_problem_load(const char *path, struct hibem_problem **out);

/**
 * Release a problem handle. Null is ignored.
 *
 * # Safety
 * `problem` must come from a parse or load call and not be freed twice.
 */
void hibem_problem_free(struct hibem_problem *problem);

/**
 * Solve the boundary value problem with boundary data manufactured from
 * the problem sources.
 *
 * # Safety
 * `problem` and `opts` must be valid; `out` must be writable.
 */
enum hibem_status hibem_solve(const struct hibem_problem *problem,
                              const struct hibem_options *opts,
                              struct hibem_solution **out);

/**
 * Displacement at an interior point; writes two values to `u_out`.
 *
 * # Safety
 * `solution` must be valid; `u_out` must point to at least two doubles.
 */
enum hibem_status hibem_solution_eval(const struct hibem_solution *solution,
                                      double x,
                                      double y,
                                      double *u_out);

/**
 * Release a solution handle. Null is ignored.
 *
 * # Safety
 * `solution` must come from `hibem_solve` and not be freed twice.
 */
void hibem_solution_free(struct hibem_solution *solution);

/**
 * Run a study and return its CSV output as a NUL-terminated string.
 * Release the string with `hibem_string_free`.
 *
 * # Safety
 * `problem` and `opts` must be valid; `out` must be writable.
 */
enum hibem_status hibem_run_study(const struct hibem_problem *problem,
                                  const struct hibem_options *opts,
                                  enum hibem_study_kind kind,
                                  char **out);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from `hibem_run_study` and not be freed twice.
 */
void hibem_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HIBEM_H */
