//! Statistical and quadrature utilities shared by the experiment modules:
//! empirical CDFs, Kolmogorov-Smirnov distances, χ² tests, polynomial
//! evaluation, and composite Gauss-Legendre quadrature with kink splitting.

use crate::error::{QclError, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Empirical CDF backed by a sorted sample.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(QclError::InvalidArgument("empty sample".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
        Ok(Ecdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Right-continuous evaluation: fraction of sample points <= x.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let k = self.sorted.partition_point(|&s| s <= x);
        k as f64 / n as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Kolmogorov-Smirnov distance between an ECDF and a *continuous* reference
/// CDF: the supremum over sample points of both one-sided gaps.
pub fn ks_distance(e: &Ecdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = e.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in e.sorted().iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f; // gap just after the jump
        let lo = f - i as f64 / n; // gap just before the jump
        sup = sup.max(hi).max(lo);
    }
    sup
}

/// Asymptotic 5% KS acceptance threshold for sample size `n`.
pub fn ks_threshold_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evaluate a polynomial given by ascending coefficients, by Horner's rule.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// log(sum of exp(terms)), stable under large magnitudes.
pub fn logsumexp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let (mut p, mut dp);
        loop {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            p = p1;
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // One final evaluation for the weight at the converged node.
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = pk;
        }
        p = p1;
        dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let _ = p;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// One-dimensional Gauss-Legendre integral of `f` over [a, b].
fn quad1d(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Tensor Gauss-Legendre integral of a smooth `f(x, y)` over
/// [a1,b1] x [a2,b2] with `n_nodes` points per axis.
pub fn quad2d(
    f: impl Fn(f64, f64) -> f64,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    n_nodes: usize,
) -> Result<f64> {
    if !(b1 > a1 && b2 > a2) {
        return Err(QclError::InvalidArgument("invalid quadrature bounds".into()));
    }
    let (nodes, weights) = gauss_legendre(n_nodes);
    let mut outer = |x: f64| {
        let mut inner = |y: f64| f(x, y);
        quad1d(&mut inner, a2, b2, &nodes, &weights)
    };
    Ok(quad1d(&mut outer, a1, b1, &nodes, &weights))
}

/// Gauss-Legendre integral of `f(x, y)` over [a1,b1] x [a2,b2] when `f` is
/// smooth except for a kink along the diagonal line `x + y = c`. Both the
/// inner integral (at the crossing point `y = c - x`) and the outer integral
/// (where the crossing enters/leaves the y-range) are split so each panel is
/// smooth, restoring spectral accuracy.
pub fn quad2d_split_diag(
    f: impl Fn(f64, f64) -> f64,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    c: f64,
    n_nodes: usize,
) -> Result<f64> {
    if !(b1 > a1 && b2 > a2) {
        return Err(QclError::InvalidArgument("invalid quadrature bounds".into()));
    }
    let (nodes, weights) = gauss_legendre(n_nodes);
    let mut xcuts = vec![a1, b1];
    for cut in [c - b2, c - a2] {
        if cut > a1 && cut < b1 {
            xcuts.push(cut);
        }
    }
    xcuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut total = 0.0;
    for xs in xcuts.windows(2) {
        let mut outer = |x: f64| {
            let ycut = c - x;
            let mut inner = |y: f64| f(x, y);
            if ycut > a2 && ycut < b2 {
                quad1d(&mut inner, a2, ycut, &nodes, &weights)
                    + quad1d(&mut inner, ycut, b2, &nodes, &weights)
            } else {
                quad1d(&mut inner, a2, b2, &nodes, &weights)
            }
        };
        total += quad1d(&mut outer, xs[0], xs[1], &nodes, &weights);
    }
    Ok(total)
}

/// Pearson χ² test of observed counts against expected cell probabilities.
/// Returns `(statistic, p_value)`; degrees of freedom = cells - 1.
pub fn chi2_test(observed: &[u64], expected_probs: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected_probs.len() || observed.len() < 2 {
        return Err(QclError::InvalidArgument(
            "chi2 needs matching lengths and >= 2 cells".into(),
        ));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(QclError::InvalidArgument("chi2 needs a nonempty sample".into()));
    }
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        if !(p > 0.0) {
            return Err(QclError::InvalidArgument(
                "expected probability must be > 0 per cell (merge small cells)".into(),
            ));
        }
        let e = n as f64 * p;
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = (observed.len() - 1) as f64;
    let chi = ChiSquared::new(dof)
        .map_err(|e| QclError::Internal(format!("chi-squared dof: {e}")))?;
    Ok((stat, 1.0 - chi.cdf(stat)))
}
