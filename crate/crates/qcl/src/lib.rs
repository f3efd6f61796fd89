//! Numerical laboratory for the two-parameter quantum group U_q^ħ(sl2),
//! its quantum random walks, the dual Poisson-Lie group (SU2*)_r with its
//! dressing orbits, crystal combinatorics, and the Bougerol-Jeulin process.
//!
//! The two parameters are the curvature `r` (with `q = e^{-r}`) and the
//! Planck constant `ħ`. Every module checks one face of the same picture:
//!
//! * [`rep`] — matrix representations, coproduct, Casimir and its radial map.
//! * [`crystal`] — crystal bases and the Kashiwara tensor rule (the `q -> 0`
//!   combinatorial skeleton).
//! * [`orbit`] — the dual group in coordinates, dressing-orbit sampling,
//!   spherical functions, and Monte Carlo convolution.
//! * [`chains`] — classical Markov kernels: the radial chain, the flat and
//!   q-deformed joint chains, and the Pitman transform.
//! * [`qwalk`] — the non-commutative random walk built from iterated
//!   coproducts, and its exact joint trajectory law.
//! * [`sde`] — pathwise simulation of the Bougerol-Jeulin process and its
//!   flat (`r -> 0`) and crystal (`r -> ∞`) limits.
//! * [`stats`] — ECDF/KS/χ² utilities and piecewise Gauss-Legendre quadrature.
//! * [`cli`] — the experiment runner behind the `qcl` binary.

pub mod chains;
pub mod cli;
pub mod crystal;
pub mod error;
pub mod orbit;
pub mod params;
pub mod qwalk;
pub mod rep;
pub mod sde;
pub mod stats;
pub mod streams;

pub use error::QclError;
pub use params::{HighestWeight, Params};

/// Dense complex matrix used throughout the representation-theoretic modules.
pub type CMat = nalgebra::DMatrix<num_complex::Complex<f64>>;
/// Complex scalar.
pub type C64 = num_complex::Complex<f64>;
