/* C interface to the qcl numerical library. */

#ifndef QCL_H
#define QCL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum QclStatus {
  QclStatus_Ok = 0,
  QclStatus_InvalidArgument = 1,
  QclStatus_Domain = 2,
  QclStatus_NullPointer = 3,
  QclStatus_Internal = 4,
} QclStatus;

/**
 * Opaque handle: an irreducible representation together with its parameters.
 */
typedef struct QclIrrep QclIrrep;

/**
 * Opaque handle: a seeded sampler of the uniform measure on a dressing orbit.
 */
typedef struct QclOrbitSampler QclOrbitSampler;

/**
 * Build the irreducible representation of highest weight `lambda`
 * (an integer multiple of `hbar`) at curvature `r`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives an owned handle.
 */
enum QclStatus qcl_irrep_new(double r, double hbar, double lambda, struct QclIrrep **out);

/**
 * Dimension of the representation, 0 if the handle is null.
 *
 * # Safety
 * `h` must be null or a handle from `qcl_irrep_new`.
 */
uintptr_t qcl_irrep_dim(const struct QclIrrep *h);

/**
 * Largest relative residual of the defining relations on this representation.
 *
 * # Safety
 * `h` must be a handle from `qcl_irrep_new`; `out` must be valid.
 */
enum QclStatus qcl_irrep_relation_residual(const struct QclIrrep *h, double *out);

/**
 * Scalar value of the Casimir element on this representation.
 *
 * # Safety
 * `h` must be a handle from `qcl_irrep_new`; `out` must be valid.
 */
enum QclStatus qcl_irrep_casimir(const struct QclIrrep *h, double *out);

/**
 * Release a handle from `qcl_irrep_new`. Null is a no-op.
 *
 * # Safety
 * `h` must be null or an owned handle not freed before.
 */
void qcl_irrep_free(struct QclIrrep *h);

/**
 * Invert the Casimir value to the highest weight it belongs to.
 *
 * # Safety
 * `out` must be valid.
 */
enum QclStatus qcl_lambda_from_casimir(double c, double r, double hbar, double *out);

/**
 * Spherical function φ_z(Λ) at curvature `r` for complex `z`.
 *
 * # Safety
 * `out` must be valid.
 */
enum QclStatus qcl_spherical_function(double z_re,
                                      double z_im,
                                      double lambda,
                                      double r,
                                      double *out);

/**
 * Pitman transform of an integer path: out[k] = x[k] - 2·min(x[0..=k]).
 *
 * # Safety
 * `xs` and `out` must point to `len` readable/writable elements.
 */
enum QclStatus qcl_pitman_transform(const int64_t *xs, uintptr_t len, int64_t *out);

/**
 * CDF of the Bessel-3 (Maxwell) marginal at time `t`.
 *
 * # Safety
 * `out` must be valid.
 */
enum QclStatus qcl_bessel3_cdf(double x, double t, double *out);

/**
 * Tropicalized logarithmic sum (1/r)·log(e^{ra} + e^{rb}); max(a, b) at r=∞.
 */
double qcl_trop_log_sum(double a, double b, double r);

/**
 * Seeded sampler of the uniform measure on the dressing orbit of radius
 * `lambda` at curvature `r`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives an owned handle.
 */
enum QclStatus qcl_orbit_sampler_new(double lambda,
                                     double r,
                                     uint64_t seed,
                                     struct QclOrbitSampler **out);

/**
 * Draw `len` products of `factors` independent orbit elements and write the
 * radial parts. `factors = 1` gives the orbit's own radial density.
 *
 * # Safety
 * `h` must be a handle from `qcl_orbit_sampler_new`; `out` must point to
 * `len` writable doubles.
 */
enum QclStatus qcl_orbit_sample_radial(struct QclOrbitSampler *h,
                                       uintptr_t factors,
                                       double *out,
                                       uintptr_t len);

/**
 * Release a handle from `qcl_orbit_sampler_new`. Null is a no-op.
 *
 * # Safety
 * `h` must be null or an owned handle not freed before.
 */
void qcl_orbit_sampler_free(struct QclOrbitSampler *h);

/**
 * Simulate `len` endpoints Λ^r_t of the Bougerol-Jeulin process with an
 * Euler-Maruyama step `dt` and write them to `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum QclStatus qcl_sde_endpoints(double r,
                                 double t,
                                 double dt,
                                 uint64_t seed,
                                 double *out,
                                 uintptr_t len);

#endif  /* QCL_H */
