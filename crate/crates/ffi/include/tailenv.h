#ifndef TAILENV_H
#define TAILENV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum TailenvStatus {
  TAILENV_STATUS_OK = 0,
  TAILENV_STATUS_NULL_POINTER = 1,
  TAILENV_STATUS_INVALID_ARGUMENT = 2,
  TAILENV_STATUS_OUT_OF_DOMAIN = 3,
  TAILENV_STATUS_DIVERGENT = 4,
  TAILENV_STATUS_NOT_CONVERGED = 5,
  TAILENV_STATUS_UNBOUNDED = 6,
  TAILENV_STATUS_CERTIFICATION_FAILED = 7,
  TAILENV_STATUS_INTERNAL = 99,
} TailenvStatus;

/**
 * Opaque function handle.
 */
typedef struct TailenvPhi TailenvPhi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t tailenv_last_error(char *buf, size_t len);

/**
 * `scale·λ²/2` on `[lambda_min, lambda_max)`; pass `INFINITY` for no bound.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TailenvStatus tailenv_phi_quadratic(double scale,
                                         double lambda_min,
                                         double lambda_max,
                                         struct TailenvPhi **out);

/**
 * `λ^p/p · ln(e + λ)^r`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TailenvStatus tailenv_phi_power_log(double p,
                                         double r,
                                         double lambda_min,
                                         double lambda_max,
                                         struct TailenvPhi **out);

/**
 * Expression in the variable `lambda`, e.g. `"lambda^2/2"`.
 *
 * # Safety
 * `expr` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TailenvStatus tailenv_phi_expression(const char *expr,
                                          double lambda_min,
                                          double lambda_max,
                                          struct TailenvPhi **out);

/**
 * Piecewise-linear function through `n` knots.
 *
 * # Safety
 * `lambda` and `value` must point to `n` doubles; `out` must be valid.
 */
enum TailenvStatus tailenv_phi_grid(const double *lambda,
                                    const double *value,
                                    size_t n,
                                    struct TailenvPhi **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `phi` must come from a `tailenv_phi_*` constructor and not be used again.
 */
void tailenv_phi_free(struct TailenvPhi *phi);

/**
 * Evaluates the function.
 *
 * # Safety
 * `phi` and `out` must be valid pointers.
 */
enum TailenvStatus tailenv_phi_eval(const struct TailenvPhi *phi, double lambda, double *out);

/**
 * `φ*(x)` at each abscissa; `INFINITY` where the supremum is unbounded.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles.
 */
enum TailenvStatus tailenv_conjugate(const struct TailenvPhi *phi,
                                     const double *x,
                                     size_t n,
                                     double *out);

/**
 * Chernoff envelope `exp(−max(φ*(x), 0))`.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles.
 */
enum TailenvStatus tailenv_chernoff_upper(const struct TailenvPhi *phi,
                                          const double *x,
                                          size_t n,
                                          double *out);

/**
 * `K(ε) = ∫₀^∞ exp(−ε·ζ(x)) dx` for `ζ` given by the handle;
 * `TAILENV_STATUS_DIVERGENT` when infinite.
 *
 * # Safety
 * `zeta` and `out` must be valid pointers.
 */
enum TailenvStatus tailenv_k_epsilon(const struct TailenvPhi *zeta, double epsilon, double *out);

/**
 * Unilateral lower envelope from the upper MGF exponent `phi`.
 * `m_surrogate ≤ 0` selects the default bound derived from `phi`.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles; `dilation` may be null.
 */
enum TailenvStatus tailenv_unilateral_lower(const struct TailenvPhi *phi,
                                            double epsilon,
                                            double m_surrogate,
                                            const double *x,
                                            size_t n,
                                            double *out,
                                            double *dilation);

/**
 * Bilateral closure envelope from `phi1 ≤ ln MGF ≤ phi2`.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles.
 */
enum TailenvStatus tailenv_closure_lower(const struct TailenvPhi *phi1,
                                         const struct TailenvPhi *phi2,
                                         const double *x,
                                         size_t n,
                                         double *out);

/**
 * `exp(−φ*(x) − c₂x)` for an exact MGF exponent.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles; `c2` may be null.
 */
enum TailenvStatus tailenv_richter_lower(const struct TailenvPhi *phi,
                                         const double *x,
                                         size_t n,
                                         double *out,
                                         double *c2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILENV_H */
