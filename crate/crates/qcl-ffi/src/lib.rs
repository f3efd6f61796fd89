//! C ABI over the qcl library.
//!
//! Conventions: every fallible function returns a [`QclStatus`] and writes its
//! result through an out-pointer; handles are opaque and must be released with
//! the matching `_free` function. All functions are panic-safe (a caught panic
//! maps to `QCL_STATUS_INTERNAL`). Pointers must be valid for the stated
//! lengths; passing null where non-null is required yields
//! `QCL_STATUS_NULL_POINTER`.

use qcl::orbit::{radial_part, sample_orbit, spherical_function, OrbitParams};
use qcl::params::{HighestWeight, Params};
use qcl::rep::{build_irrep, casimir_constant, lambda_from_casimir, verify_relations, Irrep};
use qcl::sde::{bessel3_marginal_cdf, lambda_endpoints};
use qcl::QclError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum QclStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    NullPointer = 3,
    Internal = 4,
}

fn status_of(e: &QclError) -> QclStatus {
    match e {
        QclError::InvalidArgument(_) | QclError::ParamMismatch(_) => QclStatus::InvalidArgument,
        QclError::Domain(_) => QclStatus::Domain,
        _ => QclStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> QclStatus) -> QclStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(QclStatus::Internal)
}

/// Opaque handle: an irreducible representation together with its parameters.
pub struct QclIrrep {
    rep: Irrep,
    params: Params,
    hw: HighestWeight,
}

/// Opaque handle: a seeded sampler of the uniform measure on a dressing orbit.
pub struct QclOrbitSampler {
    orbit: OrbitParams,
    rng: ChaCha8Rng,
}

/// Build the irreducible representation of highest weight `lambda`
/// (an integer multiple of `hbar`) at curvature `r`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives an owned handle.
#[no_mangle]
pub unsafe extern "C" fn qcl_irrep_new(
    r: f64,
    hbar: f64,
    lambda: f64,
    out: *mut *mut QclIrrep,
) -> QclStatus {
    if out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let build = || -> Result<QclIrrep, QclError> {
            let params = Params::new(r, hbar)?;
            let hw = HighestWeight::exact_from_real(lambda, hbar)?;
            let rep = build_irrep(hw, &params)?;
            Ok(QclIrrep { rep, params, hw })
        };
        match build() {
            Ok(h) => {
                unsafe { *out = Box::into_raw(Box::new(h)) };
                QclStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Dimension of the representation, 0 if the handle is null.
///
/// # Safety
/// `h` must be null or a handle from `qcl_irrep_new`.
#[no_mangle]
pub unsafe extern "C" fn qcl_irrep_dim(h: *const QclIrrep) -> usize {
    if h.is_null() {
        return 0;
    }
    unsafe { &*h }.rep.dim
}

/// Largest relative residual of the defining relations on this representation.
///
/// # Safety
/// `h` must be a handle from `qcl_irrep_new`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qcl_irrep_relation_residual(
    h: *const QclIrrep,
    out: *mut f64,
) -> QclStatus {
    if h.is_null() || out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let h = unsafe { &*h };
        unsafe { *out = verify_relations(&h.rep, &h.params) };
        QclStatus::Ok
    })
}

/// Scalar value of the Casimir element on this representation.
///
/// # Safety
/// `h` must be a handle from `qcl_irrep_new`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qcl_irrep_casimir(h: *const QclIrrep, out: *mut f64) -> QclStatus {
    if h.is_null() || out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let h = unsafe { &*h };
        match casimir_constant(&h.hw, &h.params) {
            Ok(c) => {
                unsafe { *out = c };
                QclStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a handle from `qcl_irrep_new`. Null is a no-op.
///
/// # Safety
/// `h` must be null or an owned handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qcl_irrep_free(h: *mut QclIrrep) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Invert the Casimir value to the highest weight it belongs to.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qcl_lambda_from_casimir(
    c: f64,
    r: f64,
    hbar: f64,
    out: *mut f64,
) -> QclStatus {
    if out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let run = || -> Result<f64, QclError> {
            let p = Params::new(r, hbar)?;
            lambda_from_casimir(c, &p)
        };
        match run() {
            Ok(v) => {
                unsafe { *out = v };
                QclStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Spherical function φ_z(Λ) at curvature `r` for complex `z`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qcl_spherical_function(
    z_re: f64,
    z_im: f64,
    lambda: f64,
    r: f64,
    out: *mut f64,
) -> QclStatus {
    if out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let v = spherical_function(qcl::C64::new(z_re, z_im), lambda, r);
        if !v.is_finite() {
            return QclStatus::Domain;
        }
        unsafe { *out = v };
        QclStatus::Ok
    })
}

/// Pitman transform of an integer path: out[k] = x[k] - 2·min(x[0..=k]).
///
/// # Safety
/// `xs` and `out` must point to `len` readable/writable elements.
#[no_mangle]
pub unsafe extern "C" fn qcl_pitman_transform(
    xs: *const i64,
    len: usize,
    out: *mut i64,
) -> QclStatus {
    if len == 0 {
        return QclStatus::Ok;
    }
    if xs.is_null() || out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| {
        let xs = unsafe { std::slice::from_raw_parts(xs, len) };
        let res = qcl::chains::pitman_transform(xs);
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&res);
        QclStatus::Ok
    })
}

/// CDF of the Bessel-3 (Maxwell) marginal at time `t`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qcl_bessel3_cdf(x: f64, t: f64, out: *mut f64) -> QclStatus {
    if out.is_null() {
        return QclStatus::NullPointer;
    }
    if !(t > 0.0) || !x.is_finite() {
        return QclStatus::InvalidArgument;
    }
    guarded(|| {
        unsafe { *out = bessel3_marginal_cdf(x, t) };
        QclStatus::Ok
    })
}

/// Tropicalized logarithmic sum (1/r)·log(e^{ra} + e^{rb}); max(a, b) at r=∞.
#[no_mangle]
pub extern "C" fn qcl_trop_log_sum(a: f64, b: f64, r: f64) -> f64 {
    qcl::crystal::trop_log_sum(a, b, r)
}

/// Seeded sampler of the uniform measure on the dressing orbit of radius
/// `lambda` at curvature `r`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives an owned handle.
#[no_mangle]
pub unsafe extern "C" fn qcl_orbit_sampler_new(
    lambda: f64,
    r: f64,
    seed: u64,
    out: *mut *mut QclOrbitSampler,
) -> QclStatus {
    if out.is_null() {
        return QclStatus::NullPointer;
    }
    guarded(|| match OrbitParams::new(lambda, r) {
        Ok(orbit) => {
            let h = QclOrbitSampler { orbit, rng: ChaCha8Rng::seed_from_u64(seed) };
            unsafe { *out = Box::into_raw(Box::new(h)) };
            QclStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Draw `len` products of `factors` independent orbit elements and write the
/// radial parts. `factors = 1` gives the orbit's own radial density.
///
/// # Safety
/// `h` must be a handle from `qcl_orbit_sampler_new`; `out` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcl_orbit_sample_radial(
    h: *mut QclOrbitSampler,
    factors: usize,
    out: *mut f64,
    len: usize,
) -> QclStatus {
    if h.is_null() || (out.is_null() && len > 0) {
        return QclStatus::NullPointer;
    }
    if factors == 0 {
        return QclStatus::InvalidArgument;
    }
    guarded(|| {
        let h = unsafe { &mut *h };
        let out = unsafe { std::slice::from_raw_parts_mut(out, len) };
        for slot in out {
            let mut g = sample_orbit(&h.orbit, &mut h.rng);
            for _ in 1..factors {
                let g2 = sample_orbit(&h.orbit, &mut h.rng);
                g = match qcl::orbit::multiply(&g, &g2) {
                    Ok(g) => g,
                    Err(e) => return status_of(&e),
                };
            }
            *slot = radial_part(&g);
        }
        QclStatus::Ok
    })
}

/// Release a handle from `qcl_orbit_sampler_new`. Null is a no-op.
///
/// # Safety
/// `h` must be null or an owned handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qcl_orbit_sampler_free(h: *mut QclOrbitSampler) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Simulate `len` endpoints Λ^r_t of the Bougerol-Jeulin process with an
/// Euler-Maruyama step `dt` and write them to `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcl_sde_endpoints(
    r: f64,
    t: f64,
    dt: f64,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> QclStatus {
    if out.is_null() && len > 0 {
        return QclStatus::NullPointer;
    }
    guarded(|| match lambda_endpoints(r, t, dt, len as u64, seed) {
        Ok(xs) => {
            unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&xs);
            QclStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}
