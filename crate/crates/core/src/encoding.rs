//! Two physical qubits per logical qubit: `|0̃⟩ = |01⟩`, `|1̃⟩ = |10⟩`.
//!
//! Logical qubit `m` occupies physical qubits `2m` (low bit) and `2m + 1`.
//! Every code word has equal numbers of ones and zeros within each pair, so
//! coherences between code words carry `Σ d_n = 0` pair by pair and do not
//! couple to a reservoir shared by the two members of a pair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::register::{RegisterState, Topology};

pub const MAX_LOGICAL_QUBITS: usize = 6;
/// Leaked probability above which decoding fails.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-9;

const ZERO_WORD: usize = 0b01;
const ONE_WORD: usize = 0b10;

/// Physical basis index of a logical basis index.
pub fn physical_index(logical: usize, n_logical: usize) -> usize {
    (0..n_logical).fold(0, |acc, m| {
        let word = if (logical >> m) & 1 == 1 { ONE_WORD } else { ZERO_WORD };
        acc | (word << (2 * m))
    })
}

/// Physical register carrying `n_logical` encoded qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalRegister {
    n_logical: usize,
    physical: RegisterState,
}

impl LogicalRegister {
    /// Wrap an arbitrary physical register with an even number of qubits.
    ///
    /// The state need not lie in the code space; [`decode`] reports leakage.
    pub fn from_physical(physical: RegisterState) -> Result<Self> {
        let l = physical.n_qubits();
        if !l.is_multiple_of(2) || l / 2 > MAX_LOGICAL_QUBITS {
            return Err(Error::invalid(format!(
                "physical register of {l} qubits cannot hold pairs"
            )));
        }
        Ok(LogicalRegister {
            n_logical: l / 2,
            physical,
        })
    }

    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    pub fn physical(&self) -> &RegisterState {
        &self.physical
    }

    pub fn into_physical(self) -> RegisterState {
        self.physical
    }

    /// Probability mass outside the code space.
    pub fn leakage(&self) -> f64 {
        code_space_leakage(self.physical.rho(), self.n_logical)
    }
}

fn validate_logical(rho: &CMatrix) -> Result<usize> {
    let dim = rho.nrows();
    if dim != rho.ncols() || dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState("logical state must be 2^l x 2^l".into()));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_LOGICAL_QUBITS {
        return Err(Error::InvalidState(format!(
            "at most {MAX_LOGICAL_QUBITS} logical qubits, got {n}"
        )));
    }
    let tr = linalg::trace(rho);
    if (tr - 1.0).norm() > 1e-12 {
        return Err(Error::InvalidState(format!("logical trace must be 1, got {tr}")));
    }
    if linalg::hermiticity_defect(rho) > 1e-12 {
        return Err(Error::InvalidState("logical state is not Hermitian".into()));
    }
    if linalg::min_eigenvalue(rho) < -1e-10 {
        return Err(Error::InvalidState("logical state is not positive semidefinite".into()));
    }
    Ok(n)
}

/// Encode with both members of pair `m` at `pair_positions[m]` under a shared reservoir.
pub fn encode(logical_rho: &CMatrix, pair_positions: &[f64]) -> Result<LogicalRegister> {
    encode_with(logical_rho, pair_positions, 0.0, Topology::Shared)
}

/// Encode with the second member of each pair displaced by `intra_pair_offset`.
pub fn encode_with(
    logical_rho: &CMatrix,
    pair_positions: &[f64],
    intra_pair_offset: f64,
    topology: Topology,
) -> Result<LogicalRegister> {
    let n = validate_logical(logical_rho)?;
    if pair_positions.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} pair positions, got {}",
            pair_positions.len()
        )));
    }
    if !intra_pair_offset.is_finite() {
        return Err(Error::invalid("intra-pair offset must be finite"));
    }
    let map: Vec<usize> = (0..1usize << n).map(|x| physical_index(x, n)).collect();
    let pdim = 1usize << (2 * n);
    let mut rho = CMatrix::from_element(pdim, pdim, Complex64::new(0.0, 0.0));
    for (x, &px) in map.iter().enumerate() {
        for (y, &py) in map.iter().enumerate() {
            rho[(px, py)] = logical_rho[(x, y)];
        }
    }
    let positions: Vec<f64> = pair_positions
        .iter()
        .flat_map(|&p| [p, p + intra_pair_offset])
        .collect();
    let physical = RegisterState::new(rho, positions, topology)?;
    Ok(LogicalRegister { n_logical: n, physical })
}

/// `1 − Σ_x ρ[code(x), code(x)]`, clipped at zero.
pub fn code_space_leakage(physical: &CMatrix, n_logical: usize) -> f64 {
    let inside: f64 = (0..1usize << n_logical)
        .map(|x| {
            let p = physical_index(x, n_logical);
            physical[(p, p)].re
        })
        .sum();
    (linalg::trace(physical).re - inside).max(0.0)
}

/// Result of decoding: the logical state and the mass that was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub rho: CMatrix,
    pub leaked: f64,
}

pub fn decode(reg: &LogicalRegister) -> Result<Decoded> {
    decode_with_threshold(reg, DEFAULT_LEAKAGE_THRESHOLD)
}

/// Project onto the code space, renormalize, and undo the encoding.
pub fn decode_with_threshold(reg: &LogicalRegister, threshold: f64) -> Result<Decoded> {
    let n = reg.n_logical;
    let rho = reg.physical.rho();
    let leaked = code_space_leakage(rho, n);
    if leaked > threshold {
        return Err(Error::DecodeLeakage { mass: leaked });
    }
    let map: Vec<usize> = (0..1usize << n).map(|x| physical_index(x, n)).collect();
    let block = CMatrix::from_fn(map.len(), map.len(), |x, y| rho[(map[x], map[y])]);
    let norm = linalg::trace(&block).re;
    if !(norm > 0.0) {
        return Err(Error::DecodeLeakage { mass: 1.0 });
    }
    Ok(Decoded {
        rho: block.unscale(norm),
        leaked,
    })
}
