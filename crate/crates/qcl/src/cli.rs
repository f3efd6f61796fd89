//! Experiment runner behind the `qcl` binary.
//!
//! Every acceptance experiment is a subcommand. Parameter precedence is
//! flags > JSON config file (`--config`, unknown keys rejected) > defaults;
//! the seed falls back to the `QCL_SEED` environment variable. Each run
//! writes a result table (CSV with a header row and 17-significant-digit
//! floats, or JSON) and, when `--out` is given, a manifest JSON recording
//! the merged parameters, seed, tool version, wall time and check results.
//! Exit codes: 0 success, 2 invalid configuration, 3 threshold failure
//! under `--check` (the manifest is still written).

use crate::chains::{
    evolve_joint_exact, evolve_radial_exact, flat_joint_kernel, joint_q_kernel, lambda_marginal,
    pitman_transform, sample_joint_path, scaled_radial_endpoints,
};
use crate::crystal::{crystal_expectation, tensor_power_components};
use crate::error::{QclError, Result};
use crate::orbit::{
    crystal_limit_functional, mc_convolution_expectation, sample_orbit, spherical_function,
    OrbitParams,
};
use crate::params::{HighestWeight, Params};
use crate::qwalk::trajectory_law;
use crate::rep::{
    build_irrep, casimir_constant, casimir_matrix, casimir_spectrum_lambdas,
    coproduct_from_single, coproduct_matrices, character_ratio, flat_lambda_matrix, tensor_power,
    verify_relations,
};
use crate::sde::{bessel3_marginal_cdf, lambda_endpoints, trend_fraction, TrendLimit};
use crate::stats::{ks_distance, mean_stderr, quad2d_split_diag, poly_eval, Ecdf};
use crate::streams::par_samples;
use crate::{C64, CMat};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

// ---------------------------------------------------------------------------
// Command line and config file

#[derive(Parser, Debug)]
#[command(name = "qcl", version, about = "Quantum-group and dressing-orbit experiment runner")]
struct Cli {
    /// JSON config file with default parameter values (flags override).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (fallback: QCL_SEED env var, then 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Result table path; table goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Evaluate acceptance thresholds; exit 3 if any fails.
    #[arg(long, global = true)]
    check: bool,
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

/// Config file shape: a flat object of optional parameters shared by all
/// subcommands. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    r: Option<f64>,
    hbar: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    q: Option<f64>,
    n: Option<u32>,
    steps: Option<u32>,
    samples: Option<u64>,
    paths: Option<u64>,
    dt: Option<f64>,
    t: Option<f64>,
    z: Option<Vec<String>>,
    monomial: Option<[u32; 3]>,
    phi: Option<Vec<f64>>,
    psi: Option<Vec<f64>>,
    kernel: Option<String>,
    trend: Option<String>,
    r_grid: Option<Vec<f64>>,
    hbar_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build an irreducible, verify relations, Casimir constancy and the
    /// radial round trip.
    Irrep(IrrepArgs),
    /// Casimir spectrum of V(ħ)^⊗n against crystal multiplicities.
    Tensor(TensorArgs),
    /// Character functionals against dressing-orbit Monte Carlo over an
    /// ħ-grid (one or two orbits).
    StaticLimit(StaticArgs),
    /// Crystal-limit functional: importance sampling vs quadrature vs the
    /// discrete crystal expectation.
    CrystalLimit(CrystalArgs),
    /// Classical kernels: exact distribution evolution or rescaled endpoint
    /// sampling against the Maxwell law.
    Chain(ChainArgs),
    /// Exact quantum-walk trajectory law and its Markov/kernel/closed-form
    /// certificates.
    QwalkOracle(QwalkArgs),
    /// Bougerol-Jeulin process: per-r KS table against the Maxwell law, or
    /// pathwise trend checks toward the flat/tropical limits.
    Sde(SdeArgs),
    /// r-independence of the radial trajectory law of the quantum walk.
    RInvariance(RInvArgs),
    /// Spherical function identities and Monte Carlo cross-check.
    Spherical(SphericalArgs),
}

#[derive(Args, Debug)]
struct IrrepArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Highest weight Λ (must be an integer multiple of ħ).
    #[arg(long)]
    lambda1: Option<f64>,
}

#[derive(Args, Debug)]
struct TensorArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Number of tensor legs.
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Args, Debug)]
struct StaticArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    /// Second orbit radius; enables the two-orbit functional.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Monomial exponents "a,b,c" for E^a F^b H^c.
    #[arg(long)]
    monomial: Option<String>,
    /// Comma-separated ħ values, largest first.
    #[arg(long)]
    hbar_grid: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args, Debug)]
struct CrystalArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Ascending polynomial coefficients of φ, comma-separated.
    #[arg(long)]
    phi: Option<String>,
    /// Ascending polynomial coefficients of ψ, comma-separated.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    /// ħ for the discrete crystal-expectation cross-check.
    #[arg(long)]
    hbar: Option<f64>,
}

#[derive(Args, Debug)]
struct ChainArgs {
    /// Kernel: radial, joint, or flat.
    #[arg(long)]
    kernel: Option<String>,
    /// q parameter of the joint kernel.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    steps: Option<u32>,
    /// Evolve the law exactly (rational arithmetic) — the default.
    #[arg(long)]
    exact: bool,
    /// Sample this many rescaled radial paths instead and KS-test the
    /// endpoints against the Maxwell law at t = ħ²·steps.
    #[arg(long)]
    paths: Option<u64>,
    /// Lattice scale ħ for the rescaled sampling mode.
    #[arg(long)]
    hbar: Option<f64>,
}

#[derive(Args, Debug)]
struct QwalkArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
}

#[derive(Args, Debug)]
struct SdeArgs {
    /// Comma-separated r values.
    #[arg(long)]
    r_grid: Option<String>,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Endpoint samples per r (KS mode).
    #[arg(long = "N")]
    samples: Option<u64>,
    /// Trend mode: "flat" (r -> 0) or "tropical" (r -> ∞).
    #[arg(long)]
    trend: Option<String>,
    /// Paths for the trend mode.
    #[arg(long)]
    paths: Option<u64>,
}

#[derive(Args, Debug)]
struct RInvArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Comma-separated r values to compare.
    #[arg(long)]
    r_grid: Option<String>,
}

#[derive(Args, Debug)]
struct SphericalArgs {
    /// Comma-separated complex z values (e.g. "0,0.5,1,2i").
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
}

// ---------------------------------------------------------------------------
// Result table

#[derive(Clone, Debug)]
enum Cell {
    U(u64),
    I(i64),
    F(f64),
    S(String),
}

#[derive(Clone, Debug)]
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

/// 17 significant digits: round-trip exact for f64.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::U(v) => v.to_string(),
                    Cell::I(v) => v.to_string(),
                    Cell::F(v) => fmt_float(*v),
                    Cell::S(v) => v.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (h, c) in self.headers.iter().zip(row) {
                    let v = match c {
                        Cell::U(v) => serde_json::json!(v),
                        Cell::I(v) => serde_json::json!(v),
                        Cell::F(v) => serde_json::json!(v),
                        Cell::S(v) => serde_json::json!(v),
                    };
                    obj.insert(h.clone(), v);
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// Outcome of one experiment: the result table, the merged parameters (for
/// the manifest) and named threshold checks.
struct RunOutput {
    table: Table,
    params: serde_json::Value,
    checks: Vec<(String, bool)>,
}

// ---------------------------------------------------------------------------
// Parameter merging helpers

fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| QclError::InvalidArgument(format!("bad number '{t}' in list")))
        })
        .collect()
}

fn parse_monomial(s: &str) -> Result<(u32, u32, u32)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(QclError::InvalidArgument(format!(
            "monomial must be 'a,b,c', got '{s}'"
        )));
    }
    let mut v = [0u32; 3];
    for (i, t) in parts.iter().enumerate() {
        v[i] = t
            .parse()
            .map_err(|_| QclError::InvalidArgument(format!("bad monomial exponent '{t}'")))?;
    }
    Ok((v[0], v[1], v[2]))
}

/// Parse a complex token: "1.5", "2i", "-i", "1+2i", "0.5-0.5i".
fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let bad = || QclError::InvalidArgument(format!("bad complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Ok(re) = t.parse::<f64>() {
        return Ok(C64::new(re, 0.0));
    }
    if let Some(im_part) = t.strip_suffix(['i', 'I']) {
        // Split at the last +/- that is not a leading sign or exponent sign.
        let bytes = im_part.as_bytes();
        let mut split = None;
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                split = Some(pos);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(pos) => (&im_part[..pos], &im_part[pos..]),
            None => ("0", im_part),
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().map_err(|_| bad())?,
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            re_str.parse::<f64>().map_err(|_| bad())?
        };
        return Ok(C64::new(re, im));
    }
    Err(bad())
}

fn lattice_weight(lambda: f64, hbar: f64) -> Result<HighestWeight> {
    HighestWeight::exact_from_real(lambda, hbar)
}

fn rational_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

// ---------------------------------------------------------------------------
// Experiments

fn run_irrep(a: &IrrepArgs, file: &FileConfig) -> Result<RunOutput> {
    let r = pick(a.r, file.r, 1.0);
    let hbar = pick(a.hbar, file.hbar, 1.0);
    let lambda1 = pick(a.lambda1, file.lambda1, 1.0);
    let p = Params::new(r, hbar)?;
    let hw = lattice_weight(lambda1, hbar)?;
    let rep = build_irrep(hw, &p)?;
    let residual = verify_relations(&rep, &p);
    let dagger_gap = (rep.e.adjoint() - &rep.f).norm();
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec![Cell::S("dim".into()), Cell::F(rep.dim as f64)]);
    table.push(vec![Cell::S("relation_residual".into()), Cell::F(residual)]);
    table.push(vec![Cell::S("dagger_gap".into()), Cell::F(dagger_gap)]);
    let casimir_gap = if p.is_flat() {
        let m = flat_lambda_matrix(&rep, &p)?;
        (&m - CMat::identity(rep.dim, rep.dim) * C64::new(hw.value(), 0.0)).norm()
    } else {
        let c = casimir_matrix(&rep, &p)?;
        let expect = casimir_constant(&hw, &p)?;
        let scale = 1.0 + expect.abs() * (rep.dim as f64).sqrt();
        (&c - CMat::identity(rep.dim, rep.dim) * C64::new(expect, 0.0)).norm() / scale
    };
    table.push(vec![Cell::S("casimir_constancy_gap".into()), Cell::F(casimir_gap)]);
    if !p.is_flat() {
        let c = casimir_constant(&hw, &p)?;
        let lam = crate::rep::lambda_from_casimir(c, &p)?;
        table.push(vec![Cell::S("casimir_constant".into()), Cell::F(c)]);
        table.push(vec![Cell::S("lambda_round_trip_gap".into()), Cell::F((lam - hw.value()).abs())]);
    }
    let checks = vec![
        (format!("relation_residual={residual:.3e}<1e-10"), residual < 1e-10),
        (format!("dagger_gap={dagger_gap:.3e}==0"), dagger_gap == 0.0),
        (format!("casimir_constancy_gap={casimir_gap:.3e}<1e-10"), casimir_gap < 1e-10),
    ];
    Ok(RunOutput {
        table,
        params: serde_json::json!({"r": r, "hbar": hbar, "lambda1": lambda1}),
        checks,
    })
}

fn run_tensor(a: &TensorArgs, file: &FileConfig) -> Result<RunOutput> {
    let r = pick(a.r, file.r, 0.5);
    let hbar = pick(a.hbar, file.hbar, 1.0);
    let n = pick(a.n, file.n, 4);
    if n == 0 || n > 12 {
        return Err(QclError::InvalidArgument(format!("n must be in 1..=12, got {n}")));
    }
    let p = Params::new(r, hbar)?;
    let leg = build_irrep(HighestWeight::from_units(1, hbar)?, &p)?;
    let t = tensor_power(&leg, n as usize, &p)?;
    let lambdas = casimir_spectrum_lambdas(&t, &p)?;
    let mut eig_counts: BTreeMap<u64, u64> = BTreeMap::new();
    for l in lambdas {
        *eig_counts.entry(l).or_insert(0) += 1;
    }
    let crystal = tensor_power_components(n)?;
    let mut table = Table::new(&["lambda_units", "casimir_multiplicity", "crystal_multiplicity"]);
    let mut all_match = true;
    let keys: std::collections::BTreeSet<u64> =
        eig_counts.keys().chain(crystal.keys()).copied().collect();
    for lam in keys {
        let dim = lam + 1;
        let count = eig_counts.get(&lam).copied().unwrap_or(0);
        if count % dim != 0 {
            return Err(QclError::EigenClustering(format!(
                "eigenvalue count {count} for λ/ħ={lam} not divisible by dim {dim}"
            )));
        }
        let mult = count / dim;
        let cmult = crystal.get(&lam).copied().unwrap_or(0);
        all_match &= mult == cmult;
        table.push(vec![Cell::U(lam), Cell::U(mult), Cell::U(cmult)]);
    }
    Ok(RunOutput {
        table,
        params: serde_json::json!({"r": r, "hbar": hbar, "n": n}),
        checks: vec![("casimir_multiplicities==crystal_multiplicities".into(), all_match)],
    })
}

fn monomial_observable(m: (u32, u32, u32)) -> impl Fn(&crate::orbit::DualGroupElement) -> f64 + Sync {
    move |g| {
        let mut v = C64::new(1.0, 0.0);
        for _ in 0..m.0 {
            v *= g.e();
        }
        for _ in 0..m.1 {
            v *= g.f;
        }
        (v * g.h.powi(m.2 as i32)).re
    }
}

fn run_static(a: &StaticArgs, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    let r = pick(a.r, file.r, 1.0);
    let lambda1 = pick(a.lambda1, file.lambda1, 1.0);
    let lambda2 = a.lambda2.or(file.lambda2);
    let monomial = match (&a.monomial, file.monomial) {
        (Some(s), _) => parse_monomial(s)?,
        (None, Some([x, y, z])) => (x, y, z),
        (None, None) => (0, 0, 1),
    };
    let grid = match (&a.hbar_grid, &file.hbar_grid) {
        (Some(s), _) => parse_f64_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.1, 0.05, 0.025],
    };
    let samples = pick(a.samples, file.samples, 1_000_000);
    if grid.is_empty() {
        return Err(QclError::InvalidArgument("hbar_grid must be nonempty".into()));
    }

    // Monte Carlo side is ħ-independent: compute once.
    let o1 = OrbitParams::new(lambda1, r)?;
    let o2 = match lambda2 {
        Some(l2) => Some(OrbitParams::new(l2, r)?),
        None => None,
    };
    let (mc_mean, mc_stderr) =
        mc_convolution_expectation(&o1, o2.as_ref(), monomial_observable(monomial), samples, seed)?;

    let mut table = Table::new(&["hbar", "character", "mc_mean", "mc_stderr", "gap"]);
    let mut gaps = Vec::new();
    for &hbar in &grid {
        let p = Params::new(r, hbar)?;
        let hw1 = lattice_weight(lambda1, hbar)?;
        let rep1 = build_irrep(hw1, &p)?;
        let ch = match lambda2 {
            None => character_ratio(&rep1, monomial, &p)?,
            Some(l2) => {
                let hw2 = lattice_weight(l2, hbar)?;
                let rep2 = build_irrep(hw2, &p)?;
                let tp = coproduct_matrices(
                    &coproduct_from_single(&rep1),
                    &rep2,
                    &p,
                    vec![rep1.clone(), rep2.clone()],
                )?;
                character_ratio(&tp, monomial, &p)?
            }
        };
        let gap = (ch.re - mc_mean).abs();
        gaps.push(gap);
        table.push(vec![
            Cell::F(hbar),
            Cell::F(ch.re),
            Cell::F(mc_mean),
            Cell::F(mc_stderr),
            Cell::F(gap),
        ]);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] <= w[0] + 3.0 * mc_stderr);
    let last = *gaps.last().unwrap();
    let tol = (3.0 * mc_stderr).max(0.01);
    let checks = vec![
        ("gap_nonincreasing_along_hbar_grid".into(), decreasing),
        (format!("final_gap={last:.3e}<max(3sigma,0.01)={tol:.3e}"), last < tol),
    ];
    Ok(RunOutput {
        table,
        params: serde_json::json!({
            "r": r, "lambda1": lambda1, "lambda2": lambda2,
            "monomial": [monomial.0, monomial.1, monomial.2],
            "hbar_grid": grid, "samples": samples, "seed": seed,
        }),
        checks,
    })
}

fn run_crystal(a: &CrystalArgs, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    let r = pick(a.r, file.r, 20.0);
    let lambda1 = pick(a.lambda1, file.lambda1, 1.0);
    let lambda2 = pick(a.lambda2, file.lambda2, 1.0);
    let phi = match (&a.phi, &file.phi) {
        (Some(s), _) => parse_f64_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.0, 1.0],
    };
    let psi = match (&a.psi, &file.psi) {
        (Some(s), _) => parse_f64_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![1.0],
    };
    let samples = pick(a.samples, file.samples, 400_000);
    let hbar = pick(a.hbar, file.hbar, 0.01);

    let o1 = OrbitParams::new(lambda1, r)?;
    let o2 = OrbitParams::new(lambda2, r)?;
    let est = crystal_limit_functional(&o1, &o2, &phi, &psi, samples, seed)?;

    // Tropical (r = ∞) oracle: the Kashiwara rule tropicalizes to
    // hw(x, y) = max(Λ1 + y, Λ2 - x) with a kink along x + y = Λ2 - Λ1.
    let quad = quad2d_split_diag(
        |x, y| poly_eval(&phi, (lambda1 + y).max(lambda2 - x)) * poly_eval(&psi, x + y),
        -lambda1,
        lambda1,
        -lambda2,
        lambda2,
        lambda2 - lambda1,
        32,
    )? / (4.0 * lambda1 * lambda2);

    let hw1 = lattice_weight(lambda1, hbar)?;
    let hw2 = lattice_weight(lambda2, hbar)?;
    let discrete = crystal_expectation(&hw1, &hw2, &phi, &psi);

    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec![Cell::S("mc_mean".into()), Cell::F(est.mean)]);
    table.push(vec![Cell::S("mc_stderr".into()), Cell::F(est.stderr)]);
    table.push(vec![Cell::S("mc_ess".into()), Cell::F(est.ess)]);
    table.push(vec![Cell::S("quad_oracle".into()), Cell::F(quad)]);
    table.push(vec![Cell::S("crystal_expectation".into()), Cell::F(discrete)]);

    let mc_gap = (est.mean - quad).abs();
    let mc_tol = (3.0 * est.stderr).max(0.05);
    let disc_gap = (discrete - quad).abs();
    let checks = vec![
        (format!("mc_gap={mc_gap:.3e}<max(3sigma,0.05)={mc_tol:.3e}"), mc_gap < mc_tol),
        (format!("crystal_expectation_gap={disc_gap:.3e}<0.02"), disc_gap < 0.02),
        ("ess_adequate".into(), !est.low_ess),
    ];
    Ok(RunOutput {
        table,
        params: serde_json::json!({
            "r": r, "lambda1": lambda1, "lambda2": lambda2,
            "phi": phi, "psi": psi, "samples": samples, "hbar": hbar, "seed": seed,
        }),
        checks,
    })
}

/// Exact rational evolution of the flat joint kernel from (0, 0).
fn evolve_flat_exact(n: u32) -> Result<BTreeMap<(i64, u64), BigRational>> {
    let mut law: BTreeMap<(i64, u64), BigRational> = BTreeMap::new();
    law.insert((0, 0), BigRational::one());
    for _ in 0..n {
        let mut next: BTreeMap<(i64, u64), BigRational> = BTreeMap::new();
        for ((omega, lam), p) in &law {
            let l = *lam as i64;
            let z = BigRational::from_integer(BigInt::from(4 * (l + 1)));
            for (s, num) in [
                ((omega + 1, lam + 1), l + omega + 2),
                ((omega - 1, lam + 1), l - omega + 2),
                ((omega + 1, lam.wrapping_sub(1)), l - omega),
                ((omega - 1, lam.wrapping_sub(1)), l + omega),
            ] {
                if num > 0 && (s.1 <= lam + 1) {
                    let w = BigRational::from_integer(BigInt::from(num)) / z.clone();
                    *next.entry(s).or_insert_with(BigRational::zero) += p * w;
                }
            }
        }
        law = next;
    }
    Ok(law)
}

fn run_chain(a: &ChainArgs, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    let kernel = pick(a.kernel.clone(), file.kernel.clone(), "radial".into());
    let steps = pick(a.steps, file.steps, 10);
    let q = pick(a.q, file.q, 0.5);
    let paths = a.paths.or(file.paths);
    let hbar = pick(a.hbar, file.hbar, 0.02);
    if steps == 0 {
        return Err(QclError::InvalidArgument("steps must be >= 1".into()));
    }

    if let Some(paths) = paths {
        // Rescaled sampling mode: endpoints ħ·λ_n vs the Maxwell law.
        if paths == 0 {
            return Err(QclError::InvalidArgument("paths must be >= 1".into()));
        }
        if kernel != "radial" {
            return Err(QclError::InvalidArgument(
                "sampling mode supports only --kernel radial".into(),
            ));
        }
        let t = hbar * hbar * steps as f64;
        let xs = scaled_radial_endpoints(hbar, steps, paths, seed);
        let e = Ecdf::new(xs)?;
        let ks = ks_distance(&e, |x| bessel3_marginal_cdf(x, t));
        let mut table = Table::new(&["hbar", "steps", "paths", "t", "ks"]);
        table.push(vec![
            Cell::F(hbar),
            Cell::U(steps as u64),
            Cell::U(paths),
            Cell::F(t),
            Cell::F(ks),
        ]);
        return Ok(RunOutput {
            table,
            params: serde_json::json!({
                "kernel": kernel, "steps": steps, "paths": paths, "hbar": hbar, "seed": seed,
            }),
            checks: vec![(format!("ks={ks:.4}<0.02"), ks < 0.02)],
        });
    }

    // Exact evolution mode.
    let mut table = Table::new(&["omega", "lambda", "prob", "prob_exact"]);
    let mut total = BigRational::zero();
    match kernel.as_str() {
        "radial" => {
            for (lam, p) in evolve_radial_exact(steps) {
                total += &p;
                table.push(vec![
                    Cell::S(String::new()),
                    Cell::U(lam),
                    Cell::F(rational_to_f64(&p)),
                    Cell::S(rational_string(&p)),
                ]);
            }
        }
        "joint" => {
            let qr = BigRational::from_f64(q).ok_or_else(|| {
                QclError::InvalidArgument(format!("q={q} is not a finite number"))
            })?;
            for ((omega, lam), p) in evolve_joint_exact(steps, &qr)? {
                total += &p;
                table.push(vec![
                    Cell::I(omega),
                    Cell::U(lam),
                    Cell::F(rational_to_f64(&p)),
                    Cell::S(rational_string(&p)),
                ]);
            }
        }
        "flat" => {
            for ((omega, lam), p) in evolve_flat_exact(steps)? {
                total += &p;
                table.push(vec![
                    Cell::I(omega),
                    Cell::U(lam),
                    Cell::F(rational_to_f64(&p)),
                    Cell::S(rational_string(&p)),
                ]);
            }
        }
        other => {
            return Err(QclError::InvalidArgument(format!(
                "unknown kernel '{other}' (expected radial, joint, or flat)"
            )));
        }
    }
    let mass_ok = total.is_one();
    Ok(RunOutput {
        table,
        params: serde_json::json!({"kernel": kernel, "steps": steps, "q": q, "seed": seed}),
        checks: vec![("total_mass_exactly_one".into(), mass_ok)],
    })
}

fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

fn run_qwalk(a: &QwalkArgs, file: &FileConfig) -> Result<RunOutput> {
    let n = pick(a.n, file.n, 5);
    let r = pick(a.r, file.r, 1.0);
    let hbar = pick(a.hbar, file.hbar, 1.0);
    let p = Params::new(r, hbar)?;
    let law = trajectory_law(&p, n as usize)?;
    let mut table = Table::new(&["trajectory", "prob"]);
    for (traj, prob) in &law.trajectories {
        let s: Vec<String> = traj.iter().map(|(o, l)| format!("{o}:{l}")).collect();
        table.push(vec![Cell::S(s.join("|")), Cell::F(*prob)]);
    }
    let mass_gap = (law.total_mass() - 1.0).abs();
    let kernel_dev = law.max_kernel_deviation()?;
    let lambda_err = law.max_lambda_path_prob_error();
    let checks = vec![
        (format!("total_mass_gap={mass_gap:.3e}<1e-10"), mass_gap < 1e-10),
        (format!("kernel_deviation={kernel_dev:.3e}<1e-10"), kernel_dev < 1e-10),
        (format!("lambda_path_prob_error={lambda_err:.3e}<1e-10"), lambda_err < 1e-10),
    ];
    Ok(RunOutput {
        table,
        params: serde_json::json!({"n": n, "r": r, "hbar": hbar, "q": law.q}),
        checks,
    })
}

fn run_sde(a: &SdeArgs, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    let r_grid = match (&a.r_grid, &file.r_grid) {
        (Some(s), _) => parse_f64_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.1, 1.0, 10.0],
    };
    let t = pick(a.t, file.t, 1.0);
    let dt = pick(a.dt, file.dt, 1e-3);
    if let Some(trend) = a.trend.clone().or(file.trend.clone()) {
        let limit = match trend.as_str() {
            "flat" => TrendLimit::Flat,
            "tropical" => TrendLimit::Tropical,
            other => {
                return Err(QclError::InvalidArgument(format!(
                    "unknown trend '{other}' (expected flat or tropical)"
                )));
            }
        };
        let paths = pick(a.paths, file.paths, 200);
        let rs = match limit {
            // Order toward the limit.
            TrendLimit::Flat => {
                let mut v = r_grid.clone();
                v.sort_by(|x, y| y.partial_cmp(x).unwrap());
                v
            }
            TrendLimit::Tropical => {
                let mut v = r_grid.clone();
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                v
            }
        };
        let frac = trend_fraction(&rs, limit, t, dt, paths, seed)?;
        let mut table = Table::new(&["trend", "r_grid", "paths", "fraction_decreasing"]);
        let grid_str: Vec<String> = rs.iter().map(|r| fmt_float(*r)).collect();
        table.push(vec![
            Cell::S(trend.clone()),
            Cell::S(grid_str.join("|")),
            Cell::U(paths),
            Cell::F(frac),
        ]);
        return Ok(RunOutput {
            table,
            params: serde_json::json!({
                "trend": trend, "r_grid": rs, "t": t, "dt": dt, "paths": paths, "seed": seed,
            }),
            checks: vec![(format!("fraction={frac:.3}>=0.95"), frac >= 0.95)],
        });
    }
    let samples = pick(a.samples, file.samples, 20_000);
    let mut table = Table::new(&["r", "samples", "ks"]);
    let mut all_ok = true;
    let mut worst = 0.0f64;
    for (i, &r) in r_grid.iter().enumerate() {
        let xs = lambda_endpoints(r, t, dt, samples, seed.wrapping_add(i as u64))?;
        let e = Ecdf::new(xs)?;
        let ks = ks_distance(&e, |x| bessel3_marginal_cdf(x, t));
        worst = worst.max(ks);
        all_ok &= ks < 0.015;
        table.push(vec![Cell::F(r), Cell::U(samples), Cell::F(ks)]);
    }
    Ok(RunOutput {
        table,
        params: serde_json::json!({
            "r_grid": r_grid, "t": t, "dt": dt, "samples": samples, "seed": seed,
        }),
        checks: vec![(format!("all_ks<0.015 (worst={worst:.4})"), all_ok)],
    })
}

fn run_rinv(a: &RInvArgs, file: &FileConfig) -> Result<RunOutput> {
    let n = pick(a.n, file.n, 5);
    let hbar = pick(a.hbar, file.hbar, 1.0);
    let r_grid = match (&a.r_grid, &file.r_grid) {
        (Some(s), _) => parse_f64_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.5, 2.0],
    };
    if r_grid.len() < 2 {
        return Err(QclError::InvalidArgument("r_grid needs at least two values".into()));
    }
    let laws: Vec<_> = r_grid
        .iter()
        .map(|&r| Ok(trajectory_law(&Params::new(r, hbar)?, n as usize)?.lambda_path_law()))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["r", "max_deviation_vs_first"]);
    let mut worst = 0.0f64;
    table.push(vec![Cell::F(r_grid[0]), Cell::F(0.0)]);
    for (i, law) in laws.iter().enumerate().skip(1) {
        let mut dev = 0.0f64;
        let keys: std::collections::BTreeSet<_> = law.keys().chain(laws[0].keys()).collect();
        for k in keys {
            let a = law.get(k).copied().unwrap_or(0.0);
            let b = laws[0].get(k).copied().unwrap_or(0.0);
            dev = dev.max((a - b).abs());
        }
        worst = worst.max(dev);
        table.push(vec![Cell::F(r_grid[i]), Cell::F(dev)]);
    }
    Ok(RunOutput {
        table,
        params: serde_json::json!({"n": n, "hbar": hbar, "r_grid": r_grid}),
        checks: vec![(format!("radial_law_r_deviation={worst:.3e}<1e-10"), worst < 1e-10)],
    })
}

fn run_spherical(a: &SphericalArgs, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    let zs: Vec<C64> = match (&a.z, &file.z) {
        (Some(s), _) => s.split(',').map(parse_complex).collect::<Result<_>>()?,
        (None, Some(v)) => v.iter().map(|s| parse_complex(s)).collect::<Result<_>>()?,
        (None, None) => vec![
            C64::new(0.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 2.0),
        ],
    };
    let lambda1 = pick(a.lambda1, file.lambda1, 1.0);
    let r = pick(a.r, file.r, 1.0);
    let samples = pick(a.samples, file.samples, 200_000);
    let o = OrbitParams::new(lambda1, r)?;

    // Rescaling identity over a (Λ, r) grid, worst case.
    let mut rescale_worst = 0.0f64;
    for z in &zs {
        for &lam in &[0.25, 0.7, 1.0, 2.0, 5.0] {
            for &rr in &[0.1, 0.5, 1.0, 3.0, 20.0] {
                let a = spherical_function(*z, lam, rr);
                let b = spherical_function(*z, rr * lam, 1.0);
                rescale_worst = rescale_worst.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
    }

    let mut table = Table::new(&["z", "phi", "mc_mean", "mc_stderr", "gap"]);
    let mut mc_ok = true;
    for (i, &z) in zs.iter().enumerate() {
        let target = spherical_function(z, lambda1, r);
        let values = par_samples(seed.wrapping_add(i as u64), samples, |rng| {
            let g = sample_orbit(&o, rng);
            ((z - 1.0) * r * g.h).exp()
        });
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        let (m_re, s_re) = mean_stderr(&re);
        let (m_im, s_im) = mean_stderr(&im);
        let gap = C64::new(m_re - target, m_im).norm();
        let sigma = s_re.hypot(s_im).max(1e-300);
        mc_ok &= gap < 3.5 * sigma;
        table.push(vec![
            Cell::S(format!("{}+{}i", z.re, z.im)),
            Cell::F(target),
            Cell::F(m_re),
            Cell::F(s_re),
            Cell::F(gap),
        ]);
    }
    let z_strs: Vec<String> = zs.iter().map(|z| format!("{}+{}i", z.re, z.im)).collect();
    Ok(RunOutput {
        table,
        params: serde_json::json!({
            "z": z_strs, "lambda1": lambda1, "r": r, "samples": samples, "seed": seed,
        }),
        checks: vec![
            (format!("rescaling_identity_gap={rescale_worst:.3e}<1e-12"), rescale_worst < 1e-12),
            ("mc_within_3.5_sigma".into(), mc_ok),
        ],
    })
}

// ---------------------------------------------------------------------------
// Driver

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| QclError::InvalidArgument(format!("config file: {e}")))
        }
    }
}

fn resolve_seed(cli: &Cli, file: &FileConfig) -> Result<u64> {
    if let Some(s) = cli.seed.or(file.seed) {
        return Ok(s);
    }
    match std::env::var("QCL_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| QclError::InvalidArgument(format!("QCL_SEED='{v}' is not a u64"))),
        Err(_) => Ok(42),
    }
}

fn dispatch(cli: &Cli, file: &FileConfig, seed: u64) -> Result<RunOutput> {
    match &cli.cmd {
        Cmd::Irrep(a) => run_irrep(a, file),
        Cmd::Tensor(a) => run_tensor(a, file),
        Cmd::StaticLimit(a) => run_static(a, file, seed),
        Cmd::CrystalLimit(a) => run_crystal(a, file, seed),
        Cmd::Chain(a) => run_chain(a, file, seed),
        Cmd::QwalkOracle(a) => run_qwalk(a, file),
        Cmd::Sde(a) => run_sde(a, file, seed),
        Cmd::RInvariance(a) => run_rinv(a, file),
        Cmd::Spherical(a) => run_spherical(a, file, seed),
    }
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Irrep(_) => "irrep",
        Cmd::Tensor(_) => "tensor",
        Cmd::StaticLimit(_) => "static-limit",
        Cmd::CrystalLimit(_) => "crystal-limit",
        Cmd::Chain(_) => "chain",
        Cmd::QwalkOracle(_) => "qwalk-oracle",
        Cmd::Sde(_) => "sde",
        Cmd::RInvariance(_) => "r-invariance",
        Cmd::Spherical(_) => "spherical",
    }
}

/// Run the CLI with explicit arguments; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Help/version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{e}");
            return 2;
        }
    };
    match run_parsed(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run_parsed(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(QclError::InvalidArgument("threads must be >= 1".into()));
        }
        // Best effort: the global pool can only be installed once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let file = load_config(&cli.config)?;
    let seed = resolve_seed(&cli, &file)?;
    let format = cli.format.unwrap_or(match file.format.as_deref() {
        Some("json") => Format::Json,
        Some("csv") | None => Format::Csv,
        Some(other) => {
            return Err(QclError::InvalidArgument(format!(
                "unknown format '{other}' (expected csv or json)"
            )));
        }
    });

    let start = std::time::Instant::now();
    let output = dispatch(&cli, &file, seed)?;
    let wall = start.elapsed().as_secs_f64();

    let rendered = match format {
        Format::Csv => output.table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&output.table.to_json())
                .map_err(|e| QclError::Internal(format!("json render: {e}")))?;
            s.push('\n');
            s
        }
    };

    let passed = output.checks.iter().all(|(_, ok)| *ok);
    if let Some(out) = &cli.out {
        std::fs::write(out, &rendered)?;
        let manifest = serde_json::json!({
            "subcommand": subcommand_name(&cli.cmd),
            "params": output.params,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": wall,
            "check": cli.check,
            "checks": output.checks.iter().map(|(name, ok)| {
                serde_json::json!({"name": name, "passed": ok})
            }).collect::<Vec<_>>(),
        });
        let mut mpath = out.as_os_str().to_owned();
        mpath.push(".manifest.json");
        std::fs::write(
            PathBuf::from(mpath),
            serde_json::to_string_pretty(&manifest)
                .map_err(|e| QclError::Internal(format!("manifest render: {e}")))?,
        )?;
    } else {
        print!("{rendered}");
    }
    for (name, ok) in &output.checks {
        eprintln!("check {}: {name}", if *ok { "pass" } else { "FAIL" });
    }
    if cli.check && !passed {
        return Ok(3);
    }
    Ok(0)
}

// Re-exports used by integration tests of the pathwise q=0 example.
#[doc(hidden)]
pub fn q_zero_pitman_max_gap(paths: u64, steps: u32, seed: u64) -> Result<i64> {
    let mut worst = 0i64;
    for i in 0..paths {
        let mut rng = crate::streams::stream_rng(seed, i);
        let path = sample_joint_path(0.0, steps, &mut rng)?;
        let x: Vec<i64> = path.iter().map(|(o, _)| -o).collect();
        let lam: Vec<i64> = path.iter().map(|(_, l)| *l as i64).collect();
        let pit = pitman_transform(&x);
        for (a, b) in pit.iter().zip(&lam) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[doc(hidden)]
pub fn joint_lambda_marginal_gap(steps: u32, q: &BigRational) -> Result<BigRational> {
    let joint = evolve_joint_exact(steps, q)?;
    let marg = lambda_marginal(&joint);
    let radial = evolve_radial_exact(steps);
    let mut worst = BigRational::zero();
    for (k, v) in &marg {
        let r = radial.get(k).cloned().unwrap_or_else(BigRational::zero);
        let d = if v > &r { v - &r } else { &r - v };
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

#[doc(hidden)]
pub fn flat_vs_q_kernel_gap(q: f64, lam_max: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for lam in 0..=lam_max {
        let l = lam as i64;
        for omega in (-l..=l).step_by(2) {
            let flat: BTreeMap<_, _> = flat_joint_kernel(omega, lam)?.into_iter().collect();
            let near: BTreeMap<_, _> = joint_q_kernel(omega, lam, q)?.into_iter().collect();
            for (s, p) in &flat {
                worst = worst.max((near.get(s).copied().unwrap_or(0.0) - p).abs());
            }
        }
    }
    Ok(worst)
}
