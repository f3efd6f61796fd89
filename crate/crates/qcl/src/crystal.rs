//! Crystal bases B(Λ) and the Kashiwara tensor rule — the combinatorial
//! `q -> 0` skeleton of the representation theory. All weights are kept as
//! exact integers in units of ħ and converted to reals only at the boundary.

use crate::error::{QclError, Result};
use crate::params::HighestWeight;
use crate::stats::poly_eval;
use std::collections::BTreeMap;

/// An element of the crystal B(Λ): its connected-component label Λ and its
/// weight, both as exact integers in units of ħ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrystalElement {
    pub component_units: u64,
    pub wt_units: i64,
    pub hbar: f64,
}

impl CrystalElement {
    pub fn wt(&self) -> f64 {
        self.hbar * self.wt_units as f64
    }

    pub fn component_hw(&self) -> f64 {
        self.hbar * self.component_units as f64
    }
}

/// A pure tensor of two crystal elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrystalTensorElement {
    pub b1: CrystalElement,
    pub b2: CrystalElement,
}

/// The crystal B(Λ) = {-Λ, -Λ+2ħ, ..., Λ}, one element per weight.
pub fn crystal_basis(hw: &HighestWeight) -> Vec<CrystalElement> {
    let lam = hw.units() as i64;
    (0..=lam)
        .map(|i| CrystalElement {
            component_units: hw.units(),
            wt_units: -lam + 2 * i,
            hbar: hw.hbar(),
        })
        .collect()
}

/// Kashiwara tensor rule for sl2 crystals, in units of ħ:
/// `wt(b1⊗b2) = wt1 + wt2`, `hw(b1⊗b2) = max(Λ1 + wt2, -wt1 + Λ2)`.
pub fn tensor_rule_units(b1: &CrystalElement, b2: &CrystalElement) -> (i64, i64) {
    let hw = (b1.component_units as i64 + b2.wt_units).max(-b1.wt_units + b2.component_units as i64);
    (hw, b1.wt_units + b2.wt_units)
}

/// Kashiwara tensor rule returning real values `(hw, wt)`.
pub fn tensor_rule(b1: &CrystalElement, b2: &CrystalElement) -> (f64, f64) {
    let (hw, wt) = tensor_rule_units(b1, b2);
    (b1.hbar * hw as f64, b1.hbar * wt as f64)
}

/// Decompose B(Λ1) ⊗ B(Λ2) into connected components: the multiset of
/// highest weights, each component Λ contributing
/// (number of pairs with hw = Λ) / (Λ/ħ + 1) copies.
pub fn decompose_tensor(hw1: &HighestWeight, hw2: &HighestWeight) -> Result<Vec<HighestWeight>> {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for b1 in crystal_basis(hw1) {
        for b2 in crystal_basis(hw2) {
            let (hw, _) = tensor_rule_units(&b1, &b2);
            *counts.entry(hw).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    let mut total_dim: u64 = 0;
    for (lam, count) in counts {
        if lam < 0 {
            return Err(QclError::Internal(format!("negative highest weight {lam}")));
        }
        let dim = lam as u64 + 1;
        if count % dim != 0 {
            return Err(QclError::Internal(format!(
                "component Λ/ħ={lam}: {count} pairs not divisible by dim {dim}"
            )));
        }
        for _ in 0..count / dim {
            out.push(HighestWeight::from_units(lam as u64, hw1.hbar())?);
            total_dim += dim;
        }
    }
    if total_dim != (hw1.units() + 1) * (hw2.units() + 1) {
        return Err(QclError::Internal("tensor dimension not preserved".into()));
    }
    Ok(out)
}

/// Exact crystal-side expectation:
/// `(1/((λ1+1)(λ2+1))) Σ_{b1,b2} φ(hw(b1⊗b2)) ψ(wt(b1⊗b2))`
/// with φ, ψ given as ascending polynomial coefficients.
pub fn crystal_expectation(
    hw1: &HighestWeight,
    hw2: &HighestWeight,
    phi: &[f64],
    psi: &[f64],
) -> f64 {
    let mut sum = 0.0;
    for b1 in crystal_basis(hw1) {
        for b2 in crystal_basis(hw2) {
            let (hw, wt) = tensor_rule(&b1, &b2);
            sum += poly_eval(phi, hw) * poly_eval(psi, wt);
        }
    }
    sum / ((hw1.units() + 1) as f64 * (hw2.units() + 1) as f64)
}

/// Connected-component multiplicities of `B(ħ)^{⊗n}` (units -> count),
/// by iterating the Clebsch-Gordan step `λ ⊗ 1 = (λ-1) ⊕ (λ+1)`.
pub fn tensor_power_components(n: u32) -> Result<BTreeMap<u64, u64>> {
    if n == 0 {
        return Err(QclError::InvalidArgument("tensor power needs n >= 1".into()));
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    counts.insert(1, 1);
    for _ in 1..n {
        let mut next: BTreeMap<u64, u64> = BTreeMap::new();
        for (&lam, &c) in &counts {
            *next.entry(lam + 1).or_insert(0) += c;
            if lam > 0 {
                *next.entry(lam - 1).or_insert(0) += c;
            }
        }
        counts = next;
    }
    Ok(counts)
}

/// Tropicalized log-sum `(1/r) log(e^{ra} + e^{rb})`, computed stably as
/// `max(a,b) + (1/r) log1p(exp(-r|a-b|))`; tends to `max(a,b)` as `r -> ∞`.
pub fn trop_log_sum(a: f64, b: f64, r: f64) -> f64 {
    assert!(r > 0.0, "trop_log_sum needs r > 0");
    a.max(b) + (-r * (a - b).abs()).exp().ln_1p() / r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hw(units: u64) -> HighestWeight {
        HighestWeight::from_units(units, 1.0).unwrap()
    }

    #[test]
    fn basis_shapes() {
        assert_eq!(crystal_basis(&hw(0)).len(), 1);
        let b = crystal_basis(&hw(1));
        assert_eq!(b.iter().map(|x| x.wt_units).collect::<Vec<_>>(), vec![-1, 1]);
        for units in [0u64, 3, 10] {
            assert_eq!(crystal_basis(&hw(units)).len(), hw(units).dim());
        }
    }

    #[test]
    fn tensor_rule_examples() {
        let up = CrystalElement { component_units: 1, wt_units: 1, hbar: 1.0 };
        let down = CrystalElement { component_units: 1, wt_units: -1, hbar: 1.0 };
        assert_eq!(tensor_rule_units(&up, &down), (0, 0));
        assert_eq!(tensor_rule_units(&up, &up), (2, 2));
        let mut hws: Vec<i64> = crystal_basis(&hw(1))
            .iter()
            .flat_map(|b1| {
                crystal_basis(&hw(1))
                    .iter()
                    .map(|b2| tensor_rule_units(b1, b2).0)
                    .collect::<Vec<_>>()
            })
            .collect();
        hws.sort_unstable();
        assert_eq!(hws, vec![0, 2, 2, 2]);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_tensor(&hw(1), &hw(1)).unwrap();
        assert_eq!(d.iter().map(|x| x.units()).collect::<Vec<_>>(), vec![0, 2]);
        let d = decompose_tensor(&hw(5), &hw(0)).unwrap();
        assert_eq!(d.iter().map(|x| x.units()).collect::<Vec<_>>(), vec![5]);
        let d = decompose_tensor(&hw(2), &hw(1)).unwrap();
        assert_eq!(d.iter().map(|x| x.units()).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn clebsch_gordan_series() {
        // Components run over |Λ1-Λ2| .. Λ1+Λ2 step 2, multiplicity one.
        for l1 in 0u64..=20 {
            for l2 in 0u64..=8 {
                let d = decompose_tensor(&hw(l1), &hw(l2)).unwrap();
                let lo = l1.abs_diff(l2);
                let expect: Vec<u64> = (lo..=l1 + l2).step_by(2).collect();
                assert_eq!(d.iter().map(|x| x.units()).collect::<Vec<_>>(), expect);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        assert!((crystal_expectation(&hw(3), &hw(2), &[1.0], &[1.0]) - 1.0).abs() < 1e-14);
        // φ=id, ψ=1 on B(ħ)⊗B(ħ): (2+2+2+0)/4 = 3/2 in units ħ=1.
        let v = crystal_expectation(&hw(1), &hw(1), &[0.0, 1.0], &[1.0]);
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn expectation_riemann_sum_limit() {
        // With Λi = 1 fixed and ħ -> 0 the crystal expectation converges to
        // the corner integral (value 4/3 for φ=id, ψ=1).
        let mut prev = f64::INFINITY;
        for units in [10u64, 40, 160] {
            let h = 1.0 / units as f64;
            let w = HighestWeight::from_units(units, h).unwrap();
            let v = crystal_expectation(&w, &w, &[0.0, 1.0], &[1.0]);
            let gap = (v - 4.0 / 3.0).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 0.01, "gap = {prev}");
    }

    #[test]
    fn tensor_power_component_counts() {
        // n=2: 0 and 2 once each; n=3: 1 twice, 3 once (Catalan triangle).
        let c2 = tensor_power_components(2).unwrap();
        assert_eq!(c2.get(&0), Some(&1));
        assert_eq!(c2.get(&2), Some(&1));
        let c3 = tensor_power_components(3).unwrap();
        assert_eq!(c3.get(&1), Some(&2));
        assert_eq!(c3.get(&3), Some(&1));
        // Dimension conservation at n=10.
        let c10 = tensor_power_components(10).unwrap();
        let total: u64 = c10.iter().map(|(l, c)| (l + 1) * c).sum();
        assert_eq!(total, 1 << 10);
        // Matches the pairwise decomposition applied iteratively.
        let mut law: BTreeMap<u64, u64> = BTreeMap::new();
        law.insert(1, 1);
        for _ in 1..6 {
            let mut next: BTreeMap<u64, u64> = BTreeMap::new();
            for (&lam, &c) in &law {
                let parts = decompose_tensor(
                    &HighestWeight::from_units(lam, 1.0).unwrap(),
                    &HighestWeight::from_units(1, 1.0).unwrap(),
                )
                .unwrap();
                for p in parts {
                    *next.entry(p.units()).or_insert(0) += c;
                }
            }
            law = next;
        }
        assert_eq!(law, tensor_power_components(6).unwrap());
    }

    #[test]
    fn trop_examples() {
        assert!((trop_log_sum(0.0, 0.0, 1.0) - 2.0f64.ln()).abs() < 1e-14);
        assert!((trop_log_sum(1.0, 0.0, 50.0) - 1.0).abs() < 1e-12);
        for (a, b) in [(0.3, -0.2), (1.0, 1.0), (-2.0, 0.5)] {
            let naive = ((a as f64).exp() + (b as f64).exp()).ln();
            assert!((trop_log_sum(a, b, 1.0) - naive).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dimension_conservation(l1 in 0u64..15, l2 in 0u64..15) {
            let d = decompose_tensor(&hw(l1), &hw(l2)).unwrap();
            let total: u64 = d.iter().map(|x| x.units() + 1).sum();
            prop_assert_eq!(total, (l1 + 1) * (l2 + 1));
        }

        #[test]
        fn hw_dominates_weight(l1 in 0u64..10, l2 in 0u64..10) {
            for b1 in crystal_basis(&hw(l1)) {
                for b2 in crystal_basis(&hw(l2)) {
                    let (h, w) = tensor_rule_units(&b1, &b2);
                    prop_assert!(h >= w.abs());
                }
            }
        }

        #[test]
        fn trop_dominates_max(a in -5.0f64..5.0, b in -5.0f64..5.0, r in 0.1f64..60.0) {
            let v = trop_log_sum(a, b, r);
            prop_assert!(v >= a.max(b));
            prop_assert!(v <= a.max(b) + 2.0f64.ln() / r + 1e-12);
        }
    }
}
