//! Quantum random walk on `V(ħ)^{⊗n}`: exact joint trajectory law of the
//! time-ordered measurements of the Casimir/weight pairs
//! `(C_k, H_k) = (Δ^{(k)}C ⊗ 1, Δ^{(k)}H ⊗ 1)` in the tracial state.
//!
//! At equal times `C_k` and `H_k` commute and are measured jointly; across
//! times the family is *not* simultaneously diagonalizable
//! (`[C_j, H_k] ≠ 0` for `k < j`), so the law is computed by sequential
//! projective collapse. A trajectory's branch operator `B = P_n ⋯ P_1` has
//! probability `Tr(B B†)/2ⁿ`; branches are carried as an orthonormal frame
//! `V` (always the current step's joint eigenframe) together with the small
//! Gram matrix `G = M M†` of the factor `B = V M`, so each step is a single
//! congruence `G' = (U†V) G (U†V)†`.
//!
//! States are reported as `(ω, λ)` in units of ħ with `ω` the *negated*
//! measured weight, the convention under which the law matches
//! [`crate::chains::joint_q_kernel`] at `q = e^{-rħ}` and `λ` is the Pitman
//! transform of `X = -ω` in the `q -> 0` degeneration.

use crate::chains::joint_q_kernel;
use crate::error::{QclError, Result};
use crate::params::{HighestWeight, Params};
use crate::rep::{
    build_irrep, casimir_matrix, coproduct_from_single, coproduct_matrices, lambda_from_casimir,
    RepLike,
};
use crate::{C64, CMat};
use std::collections::BTreeMap;

/// Branch probabilities below this are identically zero up to roundoff and
/// are pruned.
// Drops only branches that are zero up to eigenframe roundoff (squared
// machine epsilon scale); genuinely small branches must be kept or the
// conditional transition probabilities of low-mass prefixes drift.
const PRUNE: f64 = 1e-28;

/// Exact law of the first `n` steps of the quantum walk.
#[derive(Clone, Debug)]
pub struct TrajectoryLaw {
    pub n: usize,
    pub r: f64,
    pub hbar: f64,
    /// `q = e^{-rħ}`, the kernel parameter the law realizes.
    pub q: f64,
    /// Each trajectory `((ω_1, λ_1), ..., (ω_n, λ_n))` with its probability,
    /// in lexicographic order.
    pub trajectories: Vec<(Vec<(i64, u64)>, f64)>,
}

/// Joint eigenframe of `(C_k, H_k)` for one eigenvalue pair, as an
/// orthonormal frame on the full `2ⁿ`-dimensional space.
struct StepFrame {
    omega: i64,
    lambda: u64,
    u: CMat,
}

fn cx(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Joint eigenframes of `(C_k, H_k)` on the first `k` factors, embedded into
/// `2ⁿ` by tensoring with the identity on the remaining legs.
fn step_frames<R: RepLike>(rep_k: &R, p: &Params, n: usize) -> Result<Vec<StepFrame>> {
    let dk = rep_k.dim();
    let tail = 1usize << (n - rep_k.weights().len().trailing_zeros() as usize);
    // dim = 2^k exactly for spin-½ legs.
    debug_assert_eq!(dk * tail, 1 << n);
    let c = casimir_matrix(rep_k, p)?;
    // Group indices by weight (H_k is diagonal in the product basis); the
    // Casimir preserves each weight space.
    let mut classes: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &w) in rep_k.weights().iter().enumerate() {
        let m = (w / p.hbar).round() as i64;
        classes.entry(m).or_default().push(i);
    }
    let id_tail = CMat::identity(tail, tail);
    let c_floor = 2.0 * p.r * p.hbar / p.sinh2rh();
    let mut out = Vec::new();
    for (m, idx) in classes {
        let d = idx.len();
        let block = CMat::from_fn(d, d, |a, b| c[(idx[a], idx[b])]);
        let sym = (&block + block.adjoint()) * cx(0.5);
        let eig = sym.symmetric_eigen();
        // Cluster eigenvectors by the radial label their eigenvalue maps to.
        let mut by_lambda: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (j, &ev) in eig.eigenvalues.iter().enumerate() {
            let lam = lambda_from_casimir(ev.max(c_floor), p)?;
            let units = (lam / p.hbar).round();
            if (lam / p.hbar - units).abs() > 1e-6 {
                return Err(QclError::EigenClustering(format!(
                    "Casimir eigenvalue {ev} gives off-lattice label {lam}"
                )));
            }
            by_lambda.entry(units.max(0.0) as u64).or_default().push(j);
        }
        for (lambda, cols) in by_lambda {
            let mut w = CMat::zeros(dk, cols.len());
            for (c_out, &j) in cols.iter().enumerate() {
                for (a, &i) in idx.iter().enumerate() {
                    w[(i, c_out)] = eig.eigenvectors[(a, j)];
                }
            }
            out.push(StepFrame {
                omega: -m,
                lambda,
                u: w.kronecker(&id_tail),
            });
        }
    }
    Ok(out)
}

/// Compute the exact trajectory law on `V(ħ)^{⊗n}`.
pub fn trajectory_law(p: &Params, n: usize) -> Result<TrajectoryLaw> {
    if p.is_flat() {
        return Err(QclError::InvalidArgument("trajectory law needs r > 0".into()));
    }
    if n == 0 || n > 12 {
        return Err(QclError::InvalidArgument(format!(
            "trajectory law supports 1 <= n <= 12, got {n}"
        )));
    }
    let dim = 1usize << n;
    let leg = build_irrep(HighestWeight::from_units(1, p.hbar)?, p)?;

    // Frames for every step, built along the coproduct chain.
    let mut frames: Vec<Vec<StepFrame>> = Vec::with_capacity(n);
    let mut rep_k = coproduct_from_single(&leg);
    frames.push(step_frames(&rep_k, p, n)?);
    for _ in 1..n {
        let mut factors = rep_k.factors.clone();
        factors.push(leg.clone());
        rep_k = coproduct_matrices(&rep_k, &leg, p, factors)?;
        frames.push(step_frames(&rep_k, p, n)?);
    }

    // Sequential collapse. A branch is (trajectory, V frame, Gram of the
    // factor); the initial branch is B = I, i.e. V = I, G = I.
    struct Branch {
        traj: Vec<(i64, u64)>,
        v: CMat,
        g: CMat,
    }
    let mut branches = vec![Branch {
        traj: Vec::new(),
        v: CMat::identity(dim, dim),
        g: CMat::identity(dim, dim),
    }];
    let norm = 1.0 / dim as f64;
    for step in frames.iter() {
        let mut next = Vec::new();
        for b in &branches {
            for fr in step {
                let t = fr.u.adjoint() * &b.v;
                let g = &t * &b.g * t.adjoint();
                let prob: f64 = (0..g.nrows()).map(|i| g[(i, i)].re).sum::<f64>() * norm;
                if prob > PRUNE {
                    let mut traj = b.traj.clone();
                    traj.push((fr.omega, fr.lambda));
                    next.push(Branch { traj, v: fr.u.clone(), g });
                }
            }
        }
        branches = next;
    }

    let mut trajectories: Vec<(Vec<(i64, u64)>, f64)> = branches
        .into_iter()
        .map(|b| {
            let prob: f64 = (0..b.g.nrows()).map(|i| b.g[(i, i)].re).sum::<f64>() * norm;
            (b.traj, prob)
        })
        .collect();
    trajectories.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(TrajectoryLaw {
        n,
        r: p.r,
        hbar: p.hbar,
        q: (-p.r * p.hbar).exp(),
        trajectories,
    })
}

impl TrajectoryLaw {
    /// Total mass (should be 1 up to roundoff and pruning).
    pub fn total_mass(&self) -> f64 {
        self.trajectories.iter().map(|(_, p)| p).sum()
    }

    /// Marginal law of the λ-path (radial trajectory).
    pub fn lambda_path_law(&self) -> BTreeMap<Vec<u64>, f64> {
        let mut out: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (traj, p) in &self.trajectories {
            let path: Vec<u64> = traj.iter().map(|s| s.1).collect();
            *out.entry(path).or_insert(0.0) += p;
        }
        out
    }

    /// Largest deviation of any λ-path probability from the closed form
    /// `(λ_n + 1)/2ⁿ`.
    pub fn max_lambda_path_prob_error(&self) -> f64 {
        let two_n = (1u64 << self.n) as f64;
        self.lambda_path_law()
            .iter()
            .map(|(path, p)| (p - (*path.last().unwrap() as f64 + 1.0) / two_n).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation between any one-step conditional probability of
    /// the law (given the full history) and the Markov kernel
    /// [`joint_q_kernel`] at `q = e^{-rħ}`. Small values certify both the
    /// Markov property and the kernel identification at once. The implicit
    /// initial state is `(0, 0)`.
    pub fn max_kernel_deviation(&self) -> Result<f64> {
        // Prefix probabilities at every depth.
        let mut prefix: BTreeMap<Vec<(i64, u64)>, f64> = BTreeMap::new();
        for (traj, p) in &self.trajectories {
            for k in 0..=self.n {
                *prefix.entry(traj[..k].to_vec()).or_insert(0.0) += p;
            }
        }
        let mut worst = 0.0f64;
        for (traj, p_full) in &prefix {
            if traj.is_empty() {
                continue;
            }
            let hist = &traj[..traj.len() - 1];
            let p_hist = prefix[hist];
            if p_hist < 1e-9 {
                continue;
            }
            let (omega, lambda) = *traj.last().unwrap();
            let from = hist.last().copied().unwrap_or((0, 0));
            let kernel = joint_q_kernel(from.0, from.1, self.q)?;
            let expected = kernel
                .iter()
                .find(|(s, _)| *s == (omega, lambda))
                .map(|(_, p)| *p)
                .unwrap_or(0.0);
            worst = worst.max((p_full / p_hist - expected).abs());
        }
        Ok(worst)
    }
}
