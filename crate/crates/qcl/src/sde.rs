//! The Bougerol–Jeulin process on the dual group: an Euler discretization of
//! `dg = g ∘ dW` in coordinates, its radial part, the flat (`r -> 0`) and
//! tropical (`r -> ∞`) limit paths it interpolates between, and the
//! Bessel(3) marginal law shared by every curvature.
//!
//! In coordinates the solution driven by a real Brownian motion `X` and an
//! independent complex one `β` is `H_t = X_t`, `F_t = ½ e^{½ r X_t} I_t`
//! with `I_t = ∫_0^t e^{-r X_s} dβ_s` (left-point Euler sums here) — three
//! real noise dimensions in total, matching the 3-dimensional Bessel law of
//! the radial part. The stiff factors are kept in log scale so the same
//! code runs at crystal-scale r.

use crate::error::{QclError, Result};
use crate::rep::argcosh;
use crate::stats::logsumexp;
use crate::streams::par_samples;
use crate::C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erf;

/// CDF of the modulus of a 3-dimensional Brownian motion at time `t`
/// (a Maxwell law): `erf(x/√(2t)) - √(2/(πt)) x e^{-x²/(2t)}`.
pub fn bessel3_marginal_cdf(x: f64, t: f64) -> f64 {
    assert!(t > 0.0, "needs t > 0");
    if x <= 0.0 {
        return 0.0;
    }
    let g = erf(x / (2.0 * t).sqrt());
    let d = (2.0 / (std::f64::consts::PI * t)).sqrt() * x * (-x * x / (2.0 * t)).exp();
    (g - d).clamp(0.0, 1.0)
}

/// One realization of the driving noise on the uniform grid
/// `0, dt, ..., n·dt`: a real Brownian motion `x` and an independent
/// complex one `beta` (each real component standard).
#[derive(Clone, Debug)]
pub struct BjDriver {
    pub dt: f64,
    pub x: Vec<f64>,
    pub beta: Vec<C64>,
}

impl BjDriver {
    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }
}

/// Sample the driving pair with `n = round(t/dt)` Euler steps.
pub fn sample_driver(t: f64, dt: f64, rng: &mut impl Rng) -> Result<BjDriver> {
    if !(t > 0.0) || !(dt > 0.0) || dt > t {
        return Err(QclError::InvalidArgument(format!(
            "driver needs 0 < dt <= t, got t={t} dt={dt}"
        )));
    }
    let n = (t / dt).round() as usize;
    let sd = dt.sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let mut beta = Vec::with_capacity(n + 1);
    x.push(0.0);
    beta.push(C64::new(0.0, 0.0));
    for _ in 0..n {
        let gx: f64 = StandardNormal.sample(rng);
        let gre: f64 = StandardNormal.sample(rng);
        let gim: f64 = StandardNormal.sample(rng);
        x.push(x.last().unwrap() + sd * gx);
        beta.push(beta.last().unwrap() + C64::new(sd * gre, sd * gim));
    }
    Ok(BjDriver { dt, x, beta })
}

/// Log-scale accumulator for `I_t = Σ e^{-r X_j} Δβ_j`: holds `I = s·e^m`
/// with the complex mantissa `s` kept at moderate magnitude so arbitrarily
/// stiff exponents never overflow.
struct ScaledSum {
    m: f64,
    s: C64,
}

impl ScaledSum {
    fn new() -> Self {
        ScaledSum { m: 0.0, s: C64::new(0.0, 0.0) }
    }

    /// Add `unit·e^{scale}` where `|unit|` is O(1).
    fn add(&mut self, scale: f64, unit: C64) {
        let m2 = self.m.max(scale);
        self.s = self.s * (self.m - m2).exp() + unit * (scale - m2).exp();
        self.m = m2;
        let a = self.s.norm();
        if a > 1e100 {
            self.m += a.ln();
            self.s /= a;
        }
    }

    /// `log|I|` (`-inf` when the sum is zero).
    fn log_abs(&self) -> f64 {
        self.m + self.s.norm().ln()
    }
}

/// Radial part `Λ = (1/r) Argcosh(cosh(rX) + ½ r² e^{rX} I²)` from the log
/// magnitude of `I`, entirely in log scale when the argument is large.
fn lambda_from_logs(r: f64, x: f64, log_abs_i: f64) -> f64 {
    // log(2u) where u = cosh(rX) + ½ r² e^{rX} I².
    let l2 = logsumexp(&[r * x, -r * x, 2.0 * r.ln() + r * x + 2.0 * log_abs_i]);
    if l2 < 30.0 {
        argcosh((0.5 * l2.exp()).max(1.0)) / r
    } else {
        let tail = (1.0 + (1.0 - 4.0 * (-2.0 * l2).exp()).max(0.0).sqrt()).ln();
        (l2 - 2.0f64.ln() + tail) / r
    }
}

/// Radial-part path `Λ^r` of the Euler solution driven by `drv`.
pub fn lambda_path(drv: &BjDriver, r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(QclError::InvalidArgument(format!("needs r > 0, got {r}")));
    }
    let n = drv.steps();
    let mut i_sum = ScaledSum::new();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for j in 0..n {
        let db = drv.beta[j + 1] - drv.beta[j];
        let a = db.norm();
        if a > 0.0 {
            i_sum.add(-r * drv.x[j] + a.ln(), db / a);
        }
        out.push(lambda_from_logs(r, drv.x[j + 1], i_sum.log_abs()));
    }
    Ok(out)
}

/// The flat limit path: `Λ⁰_t = √(X_t² + |β_t|²)`, the modulus of the
/// 3-dimensional Brownian motion assembled from the same driver.
pub fn flat_lambda_path(drv: &BjDriver) -> Vec<f64> {
    drv.x
        .iter()
        .zip(&drv.beta)
        .map(|(x, b)| x.hypot(b.norm()))
        .collect()
}

/// The tropical limit path: the Pitman transform of `X`.
pub fn tropical_lambda_path(drv: &BjDriver) -> Vec<f64> {
    crate::chains::pitman_transform_f64(&drv.x)
}

/// Endpoint samples `Λ^r_T` over independent drivers — one draw per path,
/// deterministic in `seed`.
pub fn lambda_endpoints(r: f64, t: f64, dt: f64, num_paths: u64, seed: u64) -> Result<Vec<f64>> {
    // Validate once up front so worker closures cannot fail.
    sample_driver(t, dt, &mut crate::streams::stream_rng(seed, 0))?;
    lambda_path(
        &BjDriver { dt, x: vec![0.0, 0.0], beta: vec![C64::new(0.0, 0.0); 2] },
        r,
    )?;
    Ok(par_samples(seed, num_paths, |rng| {
        let drv = sample_driver(t, dt, rng).expect("validated");
        *lambda_path(&drv, r).expect("validated").last().unwrap()
    }))
}

/// Which degeneration of the radial path a trend test compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrendLimit {
    /// `r -> 0`: planar Brownian modulus.
    Flat,
    /// `r -> ∞`: Pitman transform of `X`.
    Tropical,
}

/// For each driver realization, compute `sup_t |Λ^r_t - Λ^limit_t|` at every
/// `r` in `rs`, and return the fraction of paths for which the error is
/// strictly decreasing along `rs` (callers order `rs` toward the limit).
pub fn trend_fraction(
    rs: &[f64],
    limit: TrendLimit,
    t: f64,
    dt: f64,
    num_paths: u64,
    seed: u64,
) -> Result<f64> {
    if rs.len() < 2 {
        return Err(QclError::InvalidArgument("trend needs at least two r values".into()));
    }
    for &r in rs {
        if !(r > 0.0) {
            return Err(QclError::InvalidArgument(format!("needs r > 0, got {r}")));
        }
    }
    sample_driver(t, dt, &mut crate::streams::stream_rng(seed, 0))?;
    let flags = par_samples(seed, num_paths, |rng| {
        let drv = sample_driver(t, dt, rng).expect("validated");
        let reference = match limit {
            TrendLimit::Flat => flat_lambda_path(&drv),
            TrendLimit::Tropical => tropical_lambda_path(&drv),
        };
        let sup_err = |r: f64| -> f64 {
            lambda_path(&drv, r)
                .expect("validated")
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let errs: Vec<f64> = rs.iter().map(|&r| sup_err(r)).collect();
        errs.windows(2).all(|w| w[1] < w[0])
    });
    Ok(flags.iter().filter(|&&ok| ok).count() as f64 / num_paths as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_distance, Ecdf};
    use crate::streams::stream_rng;

    #[test]
    fn maxwell_cdf_properties() {
        assert_eq!(bessel3_marginal_cdf(0.0, 1.0), 0.0);
        assert!(bessel3_marginal_cdf(10.0, 1.0) > 1.0 - 1e-12);
        let mut prev = 0.0;
        for i in 1..=100 {
            let v = bessel3_marginal_cdf(i as f64 * 0.05, 1.0);
            assert!(v >= prev);
            prev = v;
        }
        // Median of the Maxwell law at t=1 is about 1.5382.
        let m = bessel3_marginal_cdf(1.5382, 1.0);
        assert!((m - 0.5).abs() < 1e-3, "cdf(median) = {m}");
        // Scaling: cdf(x, t) = cdf(x/√t, 1).
        for (x, t) in [(0.7, 0.25), (2.0, 4.0), (1.0, 0.5)] {
            let a = bessel3_marginal_cdf(x, t);
            let b = bessel3_marginal_cdf(x / (t as f64).sqrt(), 1.0);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn scaled_sum_matches_direct() {
        let mut acc = ScaledSum::new();
        let mut direct = C64::new(0.0, 0.0);
        let terms = [
            (0.5f64, C64::new(1.0, 0.0)),
            (1.2, C64::new(-0.6, 0.8)),
            (0.1, C64::new(0.0, 1.0)),
            (2.0, C64::new(-1.0, 0.0)),
        ];
        for (la, s) in terms {
            acc.add(la.ln(), s);
            direct += s * la;
        }
        assert!((acc.log_abs() - direct.norm().ln()).abs() < 1e-12);
        // Huge exponents do not overflow.
        let mut acc = ScaledSum::new();
        acc.add(5000.0, C64::new(1.0, 0.0));
        acc.add(5001.0, C64::new(-1.0, 0.0));
        assert!(acc.log_abs().is_finite());
    }

    #[test]
    fn lambda_path_dominates_x_and_starts_at_zero() {
        let mut rng = stream_rng(3, 0);
        let drv = sample_driver(1.0, 1e-3, &mut rng).unwrap();
        for r in [0.1, 1.0, 10.0, 80.0] {
            let lam = lambda_path(&drv, r).unwrap();
            assert_eq!(lam.len(), drv.x.len());
            assert_eq!(lam[0], 0.0);
            for (l, x) in lam.iter().zip(&drv.x) {
                assert!(*l >= x.abs() - 1e-9, "r={r}");
            }
        }
    }

    #[test]
    fn small_r_path_is_planar_modulus() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let drv = sample_driver(1.0, 1e-3, &mut rng).unwrap();
            let lam = lambda_path(&drv, 1e-4).unwrap();
            let flat = flat_lambda_path(&drv);
            let sup = lam
                .iter()
                .zip(&flat)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(sup < 1e-3, "sup = {sup}");
        }
    }

    #[test]
    fn large_r_path_is_pitman() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let drv = sample_driver(1.0, 1e-3, &mut rng).unwrap();
            let lam = lambda_path(&drv, 300.0).unwrap();
            let trop = tropical_lambda_path(&drv);
            let sup = lam
                .iter()
                .zip(&trop)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(sup < 0.05, "sup = {sup}");
        }
    }

    #[test]
    fn endpoint_law_is_maxwell_for_each_r() {
        for (r, seed) in [(0.5, 60), (5.0, 61)] {
            let xs = lambda_endpoints(r, 1.0, 1e-3, 5000, seed).unwrap();
            let e = Ecdf::new(xs).unwrap();
            let ks = ks_distance(&e, |x| bessel3_marginal_cdf(x, 1.0));
            assert!(ks < 0.025, "r={r} ks={ks}");
        }
    }

    #[test]
    fn trend_toward_both_limits() {
        let f = trend_fraction(&[1.0, 0.1, 0.01], TrendLimit::Flat, 1.0, 1e-3, 60, 71).unwrap();
        assert!(f >= 0.95, "flat trend fraction {f}");
        let f = trend_fraction(&[5.0, 20.0, 80.0], TrendLimit::Tropical, 1.0, 1e-3, 60, 72).unwrap();
        assert!(f >= 0.95, "tropical trend fraction {f}");
    }

    #[test]
    fn invalid_arguments_rejected() {
        let mut rng = stream_rng(0, 0);
        assert!(sample_driver(0.0, 1e-3, &mut rng).is_err());
        assert!(sample_driver(1.0, 2.0, &mut rng).is_err());
        let drv = sample_driver(0.1, 1e-2, &mut rng).unwrap();
        assert!(lambda_path(&drv, 0.0).is_err());
        assert!(trend_fraction(&[1.0], TrendLimit::Flat, 0.1, 1e-2, 4, 0).is_err());
    }
}
