//! Dephasing of an L-qubit register.
//!
//! Basis index bit `n` is the state of qubit `n`, so `|i⟩ = |i_{L-1}⟩⊗…⊗|i₀⟩`.
//! Every matrix element decays independently:
//!
//! ```text
//! ρ_ij(t) = ρ_ij(0) exp(−E_ij(t)),   E_ij = Σ_{m,n} d_m d_n M_mn(t),   d_n = i_n − j_n
//! ```
//!
//! For a shared reservoir `M_mn = J(t, |x_m − x_n|)`, the transit integral with
//! the field's spatial kernel (cos for a 1D field, sin(x)/x for 3D); for
//! independent reservoirs `M = Γ(t)·I`. Co-located qubits give the
//! `|Σ d_n|² Γ` law and independent reservoirs the Hamming law.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral::{transit_integral, ReservoirSpec};

/// Largest register held as a dense matrix.
pub const MAX_QUBITS: usize = 12;
/// Largest register whose positivity is checked on construction.
pub const PSD_CHECK_MAX_QUBITS: usize = 8;

const TRACE_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// One reservoir seen by every qubit at its own position.
    Shared,
    /// One private reservoir per qubit.
    Independent,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(Topology::Shared),
            "independent" => Ok(Topology::Independent),
            other => Err(Error::invalid(format!("unknown topology {other:?}"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Shared => "shared",
            Topology::Independent => "independent",
        })
    }
}

/// Sign of the collective exponent Γ±.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Superdecoherent, e.g. ρ_{11,00}.
    Plus,
    /// Subdecoherent, e.g. ρ_{10,01}.
    Minus,
}

/// Density matrix of an L-qubit register together with its geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    n_qubits: usize,
    rho: CMatrix,
    positions: Vec<f64>,
    topology: Topology,
}

impl RegisterState {
    /// Validates trace, Hermiticity, size, geometry, and (for L ≤ 8) positivity.
    pub fn new(rho: CMatrix, positions: Vec<f64>, topology: Topology) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "density matrix must be 2^L x 2^L, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "at most {MAX_QUBITS} qubits are supported, got {n_qubits}"
            )));
        }
        check_positions(&positions, n_qubits)?;
        if rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("density matrix has non-finite entries".into()));
        }
        let tr = linalg::trace(&rho);
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace must be 1, got {tr}")));
        }
        let defect = linalg::hermiticity_defect(&rho);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        if n_qubits <= PSD_CHECK_MAX_QUBITS {
            let low = linalg::min_eigenvalue(&rho);
            if low < -PSD_TOL {
                return Err(Error::InvalidState(format!(
                    "density matrix is not positive semidefinite (eigenvalue {low:e})"
                )));
            }
        }
        Ok(RegisterState {
            n_qubits,
            rho,
            positions,
            topology,
        })
    }

    /// Register prepared in a pure state with the given amplitudes.
    pub fn from_amplitudes(amplitudes: &[Complex64], positions: Vec<f64>, topology: Topology) -> Result<Self> {
        if amplitudes.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidState("amplitudes must not all vanish".into()));
        }
        Self::new(linalg::pure_state(amplitudes), positions, topology)
    }

    /// All qubits at coordinate 0.
    pub fn co_located(n_qubits: usize) -> Vec<f64> {
        vec![0.0; n_qubits]
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> CMatrix {
        self.rho
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.rho[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.rho)
    }
}

fn check_positions(positions: &[f64], n_qubits: usize) -> Result<()> {
    if positions.len() != n_qubits {
        return Err(Error::invalid(format!(
            "expected {n_qubits} positions, got {}",
            positions.len()
        )));
    }
    if positions.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("positions must be finite"));
    }
    Ok(())
}

fn check_index(i: usize, n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "register size must be 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    if i >= 1 << n_qubits {
        return Err(Error::invalid(format!(
            "basis index {i} out of range for {n_qubits} qubits"
        )));
    }
    Ok(())
}

/// `d_n = i_n − j_n` for every qubit `n`.
pub fn signed_difference(i: usize, j: usize, n_qubits: usize) -> Vec<i8> {
    (0..n_qubits)
        .map(|n| ((i >> n) & 1) as i8 - ((j >> n) & 1) as i8)
        .collect()
}

/// Exponent of one matrix element, with the bitwise difference that drives it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPairExponent {
    pub i: usize,
    pub j: usize,
    pub weight: Vec<i8>,
    pub exponent: f64,
}

/// `J(t, t_s) = 2A ∫ ω^{n−2} e^{−ω/ω_c} coth(ω/2T)(1 − cos ωt) K(ω t_s) dω`.
///
/// `J(t, 0)` is the single-qubit Γ(t). For `t_s > 0` the value can be negative;
/// only the full quadratic form over a register is guaranteed non-negative.
pub fn transit_exponent(spec: &ReservoirSpec, t: f64, transit: f64) -> Result<f64> {
    spec.validate()?;
    transit_integral(spec, t, transit)
}

/// Pairwise coupling matrix `M(t)` of the quadratic form `E = dᵀ M d`.
///
/// Transit integrals are computed once per distinct qubit separation.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    matrix: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(spec: &ReservoirSpec, positions: &[f64], topology: Topology, t: f64) -> Result<Self> {
        spec.validate()?;
        let n = positions.len();
        check_index(0, n)?;
        check_positions(positions, n)?;
        let matrix = match topology {
            Topology::Independent => {
                let gamma = transit_integral(spec, t, 0.0)?;
                DMatrix::from_diagonal_element(n, n, gamma)
            }
            Topology::Shared => {
                let mut separations: BTreeMap<u64, f64> = BTreeMap::new();
                for a in positions {
                    for b in positions {
                        let s = (a - b).abs();
                        separations.insert(s.to_bits(), s);
                    }
                }
                let values: Vec<(u64, f64)> = separations.into_iter().collect();
                let integrals = values
                    .par_iter()
                    .map(|&(key, s)| transit_integral(spec, t, s).map(|v| (key, v)))
                    .collect::<Result<BTreeMap<u64, f64>>>()?;
                DMatrix::from_fn(n, n, |m, k| integrals[&(positions[m] - positions[k]).abs().to_bits()])
            }
        };
        Ok(CouplingMatrix { matrix })
    }

    /// Wrap a precomputed matrix (must be symmetric).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 || matrix.nrows() > MAX_QUBITS {
            return Err(Error::invalid("coupling matrix must be square with 1..=12 rows"));
        }
        if matrix != matrix.transpose() {
            return Err(Error::invalid("coupling matrix must be symmetric"));
        }
        Ok(CouplingMatrix { matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `dᵀ M d` for the difference of basis indices `i` and `j`.
    pub fn exponent(&self, i: usize, j: usize) -> f64 {
        let diff = i ^ j;
        if diff == 0 {
            return 0.0;
        }
        let n = self.matrix.nrows();
        let mut support = [0usize; MAX_QUBITS];
        let mut sign = [0.0f64; MAX_QUBITS];
        let mut len = 0;
        for q in 0..n {
            if (diff >> q) & 1 == 1 {
                support[len] = q;
                sign[len] = if (i >> q) & 1 == 1 { 1.0 } else { -1.0 };
                len += 1;
            }
        }
        let mut total = 0.0;
        for a in 0..len {
            let mut row = 0.0;
            for b in 0..len {
                row += sign[b] * self.matrix[(support[a], support[b])];
            }
            total += sign[a] * row;
        }
        // the form is positive semidefinite; clip round-off below zero
        total.max(0.0)
    }

    /// Largest exponent over all index pairs.
    ///
    /// The form is convex, so the maximum over `d ∈ {−1, 0, 1}^L` sits at a
    /// vertex `d ∈ {−1, 1}^L`; half of those are enumerated (d and −d agree).
    pub fn worst_case(&self) -> f64 {
        let n = self.matrix.nrows();
        let full = (1usize << n) - 1;
        (0..(1usize << (n - 1)))
            .map(|minus| self.exponent(full & !minus, minus))
            .fold(0.0, f64::max)
    }
}

/// Decay exponent of `ρ_ij` at time `t`.
pub fn pair_exponent(
    spec: &ReservoirSpec,
    i: usize,
    j: usize,
    positions: &[f64],
    topology: Topology,
    t: f64,
) -> Result<f64> {
    Ok(pair_exponent_detail(spec, i, j, positions, topology, t)?.exponent)
}

pub fn pair_exponent_detail(
    spec: &ReservoirSpec,
    i: usize,
    j: usize,
    positions: &[f64],
    topology: Topology,
    t: f64,
) -> Result<IndexPairExponent> {
    let n = positions.len();
    check_index(i, n)?;
    check_index(j, n)?;
    let coupling = CouplingMatrix::new(spec, positions, topology, t)?;
    Ok(IndexPairExponent {
        i,
        j,
        weight: signed_difference(i, j, n),
        exponent: coupling.exponent(i, j),
    })
}

/// Collective exponent `Γ±(t_s, t) = 2[Γ(t) ± J(t, t_s)]` of two qubits a transit time `t_s` apart.
pub fn gamma_pm(spec: &ReservoirSpec, transit: f64, branch: Branch, t: f64) -> Result<f64> {
    spec.validate()?;
    let single = transit_integral(spec, t, 0.0)?;
    let cross = if transit == 0.0 {
        single
    } else {
        transit_integral(spec, t, transit)?
    };
    Ok(match branch {
        Branch::Plus => 2.0 * (single + cross),
        Branch::Minus => (2.0 * (single - cross)).max(0.0),
    })
}

/// Largest decay exponent over all matrix elements of an L-qubit register.
pub fn worst_case_exponent(
    spec: &ReservoirSpec,
    n_qubits: usize,
    positions: &[f64],
    topology: Topology,
    t: f64,
) -> Result<f64> {
    if positions.len() != n_qubits {
        return Err(Error::invalid(format!(
            "expected {n_qubits} positions, got {}",
            positions.len()
        )));
    }
    Ok(CouplingMatrix::new(spec, positions, topology, t)?.worst_case())
}

/// Apply the coupling to every element: `ρ'_ij = ρ_ij exp(−E_ij)`.
///
/// Only the upper triangle is computed; the lower one is its conjugate, so
/// Hermiticity and the diagonal are preserved exactly.
pub fn apply_coupling(state: &RegisterState, coupling: &CouplingMatrix) -> Result<RegisterState> {
    if coupling.n_qubits() != state.n_qubits {
        return Err(Error::invalid("coupling matrix does not match the register size"));
    }
    let dim = state.dim();
    let rho = &state.rho;
    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..dim)
                .map(|j| rho[(i, j)] * (-coupling.exponent(i, j)).exp())
                .collect()
        })
        .collect();
    let mut out = rho.clone();
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Ok(RegisterState {
        n_qubits: state.n_qubits,
        rho: out,
        positions: state.positions.clone(),
        topology: state.topology,
    })
}

/// State of the register after dephasing for time `t`.
pub fn evolve(state: &RegisterState, spec: &ReservoirSpec, t: f64) -> Result<RegisterState> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    let coupling = CouplingMatrix::new(spec, &state.positions, state.topology, t)?;
    apply_coupling(state, &coupling)
}

/// GHZ-type state `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_amplitudes(n_qubits: usize) -> Vec<Complex64> {
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(1.0, 0.0);
    amps[dim - 1] = Complex64::new(1.0, 0.0);
    amps
}

/// Product state `|+⟩^{⊗L}`.
pub fn plus_amplitudes(n_qubits: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); 1usize << n_qubits]
}
