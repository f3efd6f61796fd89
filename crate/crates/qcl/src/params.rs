use crate::error::{QclError, Result};
use serde::{Deserialize, Serialize};

/// Global parameters: curvature `r >= 0` and Planck constant `hbar > 0`.
/// The deformation parameter is derived: `q = e^{-r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub r: f64,
    pub hbar: f64,
}

impl Params {
    pub fn new(r: f64, hbar: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(QclError::InvalidArgument(format!("r must be >= 0, got {r}")));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(QclError::InvalidArgument(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(Params { r, hbar })
    }

    /// Deformation parameter `q = e^{-r}` in `(0, 1]`.
    pub fn q(&self) -> f64 {
        (-self.r).exp()
    }

    /// Zero-curvature regime (flat / classical limit formulas apply).
    pub fn is_flat(&self) -> bool {
        self.r == 0.0
    }

    /// `e^{r hbar} - e^{-r hbar}`, the denominator of the quantum integers.
    pub fn sinh2rh(&self) -> f64 {
        2.0 * (self.r * self.hbar).sinh()
    }

    /// Normalization constant of the raising/lowering coefficients:
    /// `alpha = (1/2r) sqrt(2 r hbar / (e^{r hbar} - e^{-r hbar}))`.
    /// Only defined for `r > 0`; the flat case uses the closed-form limit of
    /// the matrix coefficients instead.
    pub fn alpha(&self) -> f64 {
        (2.0 * self.r * self.hbar / self.sinh2rh()).sqrt() / (2.0 * self.r)
    }
}

/// A highest weight stored on the exact lattice: `value = hbar * units`
/// with `units` a nonnegative integer. The associated irreducible has
/// dimension `units + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighestWeight {
    units: u64,
    hbar: f64,
}

impl HighestWeight {
    /// Exact constructor from the integer number of `hbar` steps.
    pub fn from_units(units: u64, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(QclError::InvalidArgument(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(HighestWeight { units, hbar })
    }

    /// Floor a real `lambda >= 0` to the lattice: `hbar * floor(lambda/hbar)`.
    pub fn floor_from_real(lambda: f64, hbar: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(QclError::InvalidArgument(format!(
                "highest weight must be >= 0, got {lambda}"
            )));
        }
        Self::from_units((lambda / hbar).floor() as u64, hbar)
    }

    /// Exact constructor that rejects values off the lattice.
    pub fn exact_from_real(lambda: f64, hbar: f64) -> Result<Self> {
        let units = lambda / hbar;
        if (units - units.round()).abs() > 1e-9 * (1.0 + units.abs()) {
            return Err(QclError::InvalidArgument(format!(
                "highest weight {lambda} is not an integer multiple of hbar {hbar}"
            )));
        }
        Self::from_units(units.round() as u64, hbar)
    }

    pub fn units(&self) -> u64 {
        self.units
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// The real value `hbar * units`.
    pub fn value(&self) -> f64 {
        self.hbar * self.units as f64
    }

    /// Dimension of the associated irreducible representation.
    pub fn dim(&self) -> usize {
        self.units as usize + 1
    }
}
