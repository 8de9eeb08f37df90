#ifndef OPGEO_H
#define OPGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `OPGEO_STATUS_OK` is zero.
 */
typedef enum OpgeoStatus {
  OPGEO_STATUS_OK = 0,
  OPGEO_STATUS_NULL_POINTER = 1,
  OPGEO_STATUS_INVALID_ARGUMENT = 2,
  OPGEO_STATUS_NOT_HERMITIAN = 3,
  OPGEO_STATUS_NOT_POSITIVE_DEFINITE = 4,
  OPGEO_STATUS_NOT_UNITARY = 5,
  OPGEO_STATUS_SINGULAR = 6,
  OPGEO_STATUS_BRANCH_CUT = 7,
  OPGEO_STATUS_INVALID_P = 8,
  OPGEO_STATUS_ODD_DIMENSION = 9,
  OPGEO_STATUS_DEGENERATE_BASIS = 10,
  OPGEO_STATUS_NOT_IN_SUBGROUP = 11,
  OPGEO_STATUS_DIMENSION_MISMATCH = 12,
  OPGEO_STATUS_NON_FINITE = 13,
  OPGEO_STATUS_CONFIG_INVALID = 14,
  OPGEO_STATUS_UNKNOWN_SUITE = 15,
  OPGEO_STATUS_PARSE = 16,
  OPGEO_STATUS_IO = 17,
  OPGEO_STATUS_PANIC = 18,
} OpgeoStatus;

/**
 * Opaque square complex matrix.
 */
typedef struct OpgeoMatrix OpgeoMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *opgeo_version(void);

/**
 * Message for the most recent failure on this thread (empty after success).
 * The pointer stays valid until the next library call on the same thread.
 */
const char *opgeo_last_error(void);

/**
 * Builds an `n x n` matrix from row-major arrays of length `n * n`.
 * `im` may be null for a real matrix.
 *
 * # Safety
 * `re` (and `im` when non-null) must point to `n * n` readable doubles and
 * `out` must be writable.
 */
enum OpgeoStatus opgeo_matrix_new(size_t n,
                                  const double *re,
                                  const double *im,
                                  struct OpgeoMatrix **out);

/**
 * Loads a matrix from a JSON or CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum OpgeoStatus opgeo_matrix_load(const char *path, struct OpgeoMatrix **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void opgeo_matrix_free(struct OpgeoMatrix *m);

/**
 * Side length of the matrix, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t opgeo_matrix_dim(const struct OpgeoMatrix *m);

/**
 * Copies the entries into row-major arrays of length `n * n`. Either output
 * may be null to skip it.
 *
 * # Safety
 * `m` must be a live handle; non-null outputs must hold `n * n` doubles.
 */
enum OpgeoStatus opgeo_matrix_read(const struct OpgeoMatrix *m, double *re, double *im);

/**
 * Positive-cone distance between positive definite matrices.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_spd_distance(const struct OpgeoMatrix *p,
                                    const struct OpgeoMatrix *q,
                                    double *out);

/**
 * Bi-invariant distance between unitary matrices.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_unitary_distance(const struct OpgeoMatrix *u,
                                        const struct OpgeoMatrix *w,
                                        double *out);

/**
 * Polar product distance between invertible matrices.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_polar_distance(const struct OpgeoMatrix *p,
                                      const struct OpgeoMatrix *q,
                                      double *out);

/**
 * Constant `c(p, q)` of the left-invariant length bound.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_bound_constant(const struct OpgeoMatrix *p,
                                      const struct OpgeoMatrix *q,
                                      double *out);

/**
 * Schatten norm; pass `INFINITY` for the operator norm.
 *
 * # Safety
 * `x` must be live and `out` writable.
 */
enum OpgeoStatus opgeo_schatten_norm(const struct OpgeoMatrix *x, double p, double *out);

/**
 * Matrix exponential.
 *
 * # Safety
 * `x` must be live and `out` writable.
 */
enum OpgeoStatus opgeo_matrix_exp(const struct OpgeoMatrix *x, struct OpgeoMatrix **out);

/**
 * Polar decomposition `g = u p` into new handles.
 *
 * # Safety
 * `g` must be live and both outputs writable.
 */
enum OpgeoStatus opgeo_polar_decompose(const struct OpgeoMatrix *g,
                                       struct OpgeoMatrix **u_out,
                                       struct OpgeoMatrix **p_out);

/**
 * Point at time `t` on the positive-cone geodesic from `p` to `q`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_spd_geodesic(const struct OpgeoMatrix *p,
                                    const struct OpgeoMatrix *q,
                                    double t,
                                    struct OpgeoMatrix **out);

/**
 * Point at time `t` on the polar product geodesic from `p` to `q`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum OpgeoStatus opgeo_polar_geodesic(const struct OpgeoMatrix *p,
                                      const struct OpgeoMatrix *q,
                                      double t,
                                      struct OpgeoMatrix **out);

/**
 * Runs a verification suite. `config_json` may be null for the defaults;
 * otherwise it is a JSON object with the same fields as the CLI config file.
 * On success `*report_json` receives the JSON report (free it with
 * `opgeo_string_free`) and `*passed` whether every trial passed.
 *
 * # Safety
 * `suite` must be a NUL-terminated string, `config_json` null or one, and the
 * outputs writable.
 */
enum OpgeoStatus opgeo_run_suite(const char *suite,
                                 const char *config_json,
                                 char **report_json,
                                 bool *passed);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void opgeo_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPGEO_H */
