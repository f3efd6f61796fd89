//! Markov kernels on the weight lattice: the radial (Casimir) birth chain,
//! the one-parameter family of joint (weight, highest-weight) kernels
//! interpolating between its flat `q -> 1` form and the combinatorial
//! `q -> 0` Pitman coupling, exact rational evolution of their laws, path
//! samplers, and the Pitman transform.
//!
//! States are integers in units of ħ: `lam >= 0` is the component label,
//! `omega` the weight, always with `|omega| <= lam` and `lam - omega` even.

use crate::error::{QclError, Result};
use crate::streams::par_samples;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use std::collections::BTreeMap;

/// Radial birth chain: `Q(λ, λ+1) = (λ+2)/(2(λ+1))`,
/// `Q(λ, λ-1) = λ/(2(λ+1))`.
pub fn radial_kernel(lam: u64) -> Vec<(u64, f64)> {
    let l = lam as f64;
    let mut out = vec![(lam + 1, (l + 2.0) / (2.0 * (l + 1.0)))];
    if lam > 0 {
        out.push((lam - 1, l / (2.0 * (l + 1.0))));
    }
    out
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Radial birth chain with exact rational probabilities.
pub fn radial_kernel_exact(lam: u64) -> Vec<(u64, BigRational)> {
    let l = lam as i64;
    let denom = big(2 * (l + 1));
    let mut out = vec![(lam + 1, big(l + 2) / denom.clone())];
    if lam > 0 {
        out.push((lam - 1, big(l) / denom));
    }
    out
}

/// `q^k` with the convention `0^0 = 1`.
fn qpow(q: f64, k: i64) -> f64 {
    debug_assert!(k >= 0);
    if k == 0 {
        1.0
    } else {
        q.powi(k as i32)
    }
}

fn qpow_exact(q: &BigRational, k: i64) -> BigRational {
    debug_assert!(k >= 0);
    if k == 0 {
        BigRational::one()
    } else {
        num_traits::pow::pow(q.clone(), k as usize)
    }
}

fn check_state(omega: i64, lam: u64) -> Result<()> {
    let l = lam as i64;
    if omega.abs() > l || (l - omega).rem_euclid(2) != 0 {
        return Err(QclError::InvalidArgument(format!(
            "invalid walk state (omega, lam) = ({omega}, {lam})"
        )));
    }
    Ok(())
}

/// Joint kernel of the (weight, component) chain at parameter `0 <= q < 1`,
/// with `0^0 = 1` so the `q = 0` degeneration is included. The four moves
/// from `(ω, λ)` have probabilities, over `2(1 - q^{2λ+2})`:
///
/// - `(ω+1, λ+1)`: `q^{λ-ω} - q^{2λ+2}`
/// - `(ω-1, λ+1)`: `1 - q^{λ-ω+2}`
/// - `(ω+1, λ-1)`: `1 - q^{λ-ω}`
/// - `(ω-1, λ-1)`: `q^{λ-ω+2} - q^{2λ+2}`
///
/// The boundary `λ = 0` is handled by the same formulas (the two `λ-1`
/// entries vanish identically there).
pub fn joint_q_kernel(omega: i64, lam: u64, q: f64) -> Result<Vec<((i64, u64), f64)>> {
    check_state(omega, lam)?;
    if !(0.0..1.0).contains(&q) {
        return Err(QclError::InvalidArgument(format!(
            "joint kernel needs 0 <= q < 1, got {q}"
        )));
    }
    let l = lam as i64;
    let d = l - omega;
    let z = 2.0 * (1.0 - qpow(q, 2 * l + 2));
    let mut out = Vec::with_capacity(4);
    let mut push = |w: i64, m: u64, num: f64| {
        if num > 0.0 {
            out.push(((w, m), num / z));
        }
    };
    push(omega + 1, lam + 1, qpow(q, d) - qpow(q, 2 * l + 2));
    push(omega - 1, lam + 1, 1.0 - qpow(q, d + 2));
    if lam > 0 {
        push(omega + 1, lam - 1, 1.0 - qpow(q, d));
        push(omega - 1, lam - 1, qpow(q, d + 2) - qpow(q, 2 * l + 2));
    }
    Ok(out)
}

/// Exact rational version of [`joint_q_kernel`].
pub fn joint_q_kernel_exact(
    omega: i64,
    lam: u64,
    q: &BigRational,
) -> Result<Vec<((i64, u64), BigRational)>> {
    check_state(omega, lam)?;
    if q < &BigRational::zero() || q >= &BigRational::one() {
        return Err(QclError::InvalidArgument("joint kernel needs 0 <= q < 1".into()));
    }
    let l = lam as i64;
    let d = l - omega;
    let z = big(2) * (BigRational::one() - qpow_exact(q, 2 * l + 2));
    let mut out = Vec::with_capacity(4);
    let mut push = |w: i64, m: u64, num: BigRational| {
        if !num.is_zero() {
            out.push(((w, m), num / z.clone()));
        }
    };
    push(omega + 1, lam + 1, qpow_exact(q, d) - qpow_exact(q, 2 * l + 2));
    push(omega - 1, lam + 1, BigRational::one() - qpow_exact(q, d + 2));
    if lam > 0 {
        push(omega + 1, lam - 1, BigRational::one() - qpow_exact(q, d));
        push(omega - 1, lam - 1, qpow_exact(q, d + 2) - qpow_exact(q, 2 * l + 2));
    }
    Ok(out)
}

/// The `q -> 1` limit of the joint kernel: move probabilities
/// `{λ+ω+2, λ-ω+2, λ-ω, λ+ω} / (4(λ+1))` for
/// `(ω+1,λ+1), (ω-1,λ+1), (ω+1,λ-1), (ω-1,λ-1)`.
pub fn flat_joint_kernel(omega: i64, lam: u64) -> Result<Vec<((i64, u64), f64)>> {
    check_state(omega, lam)?;
    let l = lam as i64;
    let z = 4.0 * (l as f64 + 1.0);
    let mut out = Vec::with_capacity(4);
    let mut push = |w: i64, m: i64, num: i64| {
        if num > 0 {
            out.push(((w, m as u64), num as f64 / z));
        }
    };
    push(omega + 1, l + 1, l + omega + 2);
    push(omega - 1, l + 1, l - omega + 2);
    if lam > 0 {
        push(omega + 1, l - 1, l - omega);
        push(omega - 1, l - 1, l + omega);
    }
    Ok(out)
}

/// Law of the radial chain at time `n`, started at 0, as exact rationals.
pub fn evolve_radial_exact(n: u32) -> BTreeMap<u64, BigRational> {
    let mut law: BTreeMap<u64, BigRational> = BTreeMap::new();
    law.insert(0, BigRational::one());
    for _ in 0..n {
        let mut next: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (lam, p) in &law {
            for (m, t) in radial_kernel_exact(*lam) {
                *next.entry(m).or_insert_with(BigRational::zero) += p * t;
            }
        }
        law = next;
    }
    law
}

/// Law of the joint chain at time `n`, started at `(0, 0)`, exact rationals.
pub fn evolve_joint_exact(n: u32, q: &BigRational) -> Result<BTreeMap<(i64, u64), BigRational>> {
    let mut law: BTreeMap<(i64, u64), BigRational> = BTreeMap::new();
    law.insert((0, 0), BigRational::one());
    for _ in 0..n {
        let mut next: BTreeMap<(i64, u64), BigRational> = BTreeMap::new();
        for ((omega, lam), p) in &law {
            for (s, t) in joint_q_kernel_exact(*omega, *lam, q)? {
                *next.entry(s).or_insert_with(BigRational::zero) += p * t;
            }
        }
        law = next;
    }
    Ok(law)
}

/// Collapse a joint law onto its λ-marginal.
pub fn lambda_marginal(joint: &BTreeMap<(i64, u64), BigRational>) -> BTreeMap<u64, BigRational> {
    let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
    for ((_, lam), p) in joint {
        *out.entry(*lam).or_insert_with(BigRational::zero) += p;
    }
    out
}

/// Pitman transform of an integer path: `Λ_n = X_n - 2 min_{k<=n} X_k`
/// (with `X_0 = 0` prepended implicitly if the slice starts elsewhere — the
/// slice itself is taken as the full path, minimum included).
pub fn pitman_transform(xs: &[i64]) -> Vec<i64> {
    let mut min = 0;
    xs.iter()
        .map(|&x| {
            min = min.min(x);
            x - 2 * min
        })
        .collect()
}

/// Pitman transform of a real path.
pub fn pitman_transform_f64(xs: &[f64]) -> Vec<f64> {
    let mut min = 0.0f64;
    xs.iter()
        .map(|&x| {
            min = min.min(x);
            x - 2.0 * min
        })
        .collect()
}

fn sample_discrete<S: Copy>(moves: &[(S, f64)], rng: &mut impl Rng) -> S {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(s, p) in moves {
        acc += p;
        if u < acc {
            return s;
        }
    }
    moves.last().expect("kernel has at least one move").0
}

/// Sample one trajectory of the joint chain from `(0, 0)`; returns the
/// `n + 1` states including the start.
pub fn sample_joint_path(q: f64, n: u32, rng: &mut impl Rng) -> Result<Vec<(i64, u64)>> {
    let mut path = Vec::with_capacity(n as usize + 1);
    let mut state = (0i64, 0u64);
    path.push(state);
    for _ in 0..n {
        let moves = joint_q_kernel(state.0, state.1, q)?;
        state = sample_discrete(&moves, rng);
        path.push(state);
    }
    Ok(path)
}

/// Sample one trajectory of the radial chain from 0 (including the start).
pub fn sample_radial_path(n: u32, rng: &mut impl Rng) -> Vec<u64> {
    let mut path = Vec::with_capacity(n as usize + 1);
    let mut lam = 0u64;
    path.push(lam);
    for _ in 0..n {
        lam = sample_discrete(&radial_kernel(lam), rng);
        path.push(lam);
    }
    path
}

/// Endpoints `ħ λ_n` of `num_paths` independent radial trajectories — the
/// quantity whose law approaches the Bessel-3 marginal at time `t = ħ²n` as
/// `ħ -> 0`.
pub fn scaled_radial_endpoints(hbar: f64, n: u32, num_paths: u64, seed: u64) -> Vec<f64> {
    par_samples(seed, num_paths, |rng| {
        let mut lam = 0u64;
        for _ in 0..n {
            lam = sample_discrete(&radial_kernel(lam), rng);
        }
        hbar * lam as f64
    })
}
