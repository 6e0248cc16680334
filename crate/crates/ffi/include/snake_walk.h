#ifndef SNAKE_WALK_H
#define SNAKE_WALK_H

/* Generated by cbindgen from snake-walk-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum SwStatus {
  /**
   * Success.
   */
  SwOk = 0,
  /**
   * A required pointer argument was null.
   */
  SwNullArgument = 1,
  /**
   * An argument was outside its documented domain.
   */
  SwInvalidArgument = 2,
  /**
   * The computation failed to meet its numerical contract.
   */
  SwNumerical = 3,
} SwStatus;

/**
 * Opaque handle to an eigenvalue band of the walk.
 */
typedef struct SwBand SwBand;

/**
 * Closed-form scattering data at one momentum.
 */
typedef struct SwScattering {
  double k;
  double reflection_re;
  double reflection_im;
  double transmission_re;
  double transmission_im;
  /**
   * Derivative of the transmission phase: the effective length of the
   * glued part.
   */
  double effective_length;
} SwScattering;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sw_version(void);

/**
 * Create the median band of the walk on the line; `n` must be even.
 */
enum SwStatus sw_line_band_new(uintptr_t n, struct SwBand **out);

/**
 * Create the median band of the walk deep in the binary tree; `n` even.
 */
enum SwStatus sw_tree_band_new(uintptr_t n, struct SwBand **out);

/**
 * Release a band handle. Null is accepted and ignored.
 *
 * # Safety
 * `band` must be a pointer previously returned by one of the band
 * constructors and not yet freed.
 */
void sw_band_free(struct SwBand *band);

/**
 * Band eigenvalue at momentum `k`.
 *
 * # Safety
 * `band` must be a live handle from a band constructor.
 */
enum SwStatus sw_band_lambda(const struct SwBand *band, double k, double *out);

/**
 * Band derivative of order 1 to 3 at momentum `k`.
 *
 * # Safety
 * `band` must be a live handle from a band constructor.
 */
enum SwStatus sw_band_derivative(const struct SwBand *band, double k, uint32_t order, double *out);

/**
 * The limiting scaled band value `Lambda(k)` on the line.
 */
double sw_line_lambda_inf(double k);

/**
 * The limiting scaled band value on the tree.
 */
double sw_tree_lambda_inf(double k);

/**
 * Closed-form reflection and transmission data at momentum `k`.
 *
 * # Safety
 * `out` must be valid for a write of one `SwScattering`.
 */
enum SwStatus sw_scattering_coefficients(double k, struct SwScattering *out);

/**
 * Span length of the move word `bits` of length `len` (at most 31).
 *
 * # Safety
 * `out` must be valid for a write of one `i32`.
 */
enum SwStatus sw_word_span_length(uint32_t bits, uint32_t len, int32_t *out);

/**
 * 1-norm of the localized line state outside `(-n, n)`, computed on a
 * half-offset momentum grid with `grid_nodes` points (even, >= 256).
 *
 * # Safety
 * `out` must be valid for a write of one `f64`.
 */
enum SwStatus sw_locality_tail(uintptr_t n, uintptr_t grid_nodes, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNAKE_WALK_H */
