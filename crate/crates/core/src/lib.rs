//! Pure-dephasing simulation of single qubits and qubit registers coupled to
//! a thermal bosonic reservoir.
//!
//! * [`spectral`]: the single-qubit decay exponent Γ(t), by quadrature and
//!   in closed form, plus the time-regime classification.
//! * [`bloch`]: the stochastic classical-field picture with ensemble averages.
//! * [`register`]: element-wise dephasing of an L-qubit density matrix under
//!   shared or independent reservoirs, including the collective Γ±.
//! * [`encoding`]: the two-qubit-per-bit noiseless encoding.
//! * [`scaling`]: boosting arithmetic and register-size bounds.
//! * [`cli`]: the `dephase` command-line front end.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod register;
pub mod scaling;
pub mod spectral;
pub mod zeta;

pub use error::{Error, Result};
pub use spectral::{
    classify_regime, decoherence_curve, gamma_analytic_1d, gamma_closed_form, gamma_exact_3d, gamma_quadrature,
    DecoherenceCurve, Dimension, Method, Regime, ReservoirSpec,
};
pub use zeta::hurwitz_zeta2;
