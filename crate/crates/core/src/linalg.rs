//! Small dense-matrix helpers for density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// max |m_ij - conj(m_ji)|
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`, clamped to [0, 1].
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let root = hermitian_sqrt(rho);
    let inner = &root * sigma * &root;
    let s: f64 = hermitian_eigenvalues(&inner).iter().map(|l| l.max(0.0).sqrt()).sum();
    (s * s).clamp(0.0, 1.0)
}

/// Random full-rank density matrix `W W† / tr(W W†)` with Gaussian `W`.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let w = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let p = &w * w.adjoint();
    let tr = trace(&p).re;
    let mut out = p.unscale(tr);
    // exact Hermitian symmetry
    for i in 0..dim {
        out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            out[(j, i)] = out[(i, j)].conj();
        }
    }
    out
}

/// Random pure state with Gaussian amplitudes (Haar distributed).
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let mut out = pure_state(&amps);
    for i in 0..dim {
        out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            out[(j, i)] = out[(i, j)].conj();
        }
    }
    out
}

/// Density matrix of a pure state given by (unnormalized) amplitudes.
pub fn pure_state(amplitudes: &[Complex64]) -> CMatrix {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let n = amplitudes.len();
    CMatrix::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj() / (norm * norm))
}
