//! Boosting arithmetic for randomized algorithms run on a decohering register.
//!
//! A run of an L-qubit computation takes `t = τL²`; its success probability is
//! taken to be the worst-case coherence survival `exp(−E_worst(t))`, so the
//! failure rate is `ε(L) = 1 − exp(−E_worst)` and `k(L)` repetitions are needed
//! to reach a target success probability `P = 1 − ε^k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::register::{CouplingMatrix, Topology, MAX_QUBITS};
use crate::spectral::{gamma_quadrature, ReservoirSpec};

/// `1 − ε^k`.
pub fn success_probability(k: u64, eps: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("run count must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("failure rate must lie in [0, 1), got {eps}")));
    }
    Ok(1.0 - pow_u64(eps, k))
}

fn pow_u64(x: f64, k: u64) -> f64 {
    if k <= i32::MAX as u64 {
        x.powi(k as i32)
    } else {
        x.powf(k as f64)
    }
}

/// Smallest `k` with `1 − ε^k ≥ P`.
pub fn required_runs(eps: f64, target_p: f64) -> Result<u64> {
    check_target(target_p)?;
    if eps == 1.0 {
        return Err(Error::UnachievableTarget);
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("failure rate must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 {
        return Ok(1);
    }
    let ratio = (-target_p).ln_1p() / eps.ln();
    runs_from_ratio(ratio, eps, target_p)
}

fn check_target(target_p: f64) -> Result<()> {
    if !(target_p > 0.0 && target_p < 1.0) {
        return Err(Error::Domain(format!(
            "target probability must lie in (0, 1), got {target_p}"
        )));
    }
    Ok(())
}

// ceil of the real-valued count, nudged so the result is exact under `success_probability`
fn runs_from_ratio(ratio: f64, eps: f64, target_p: f64) -> Result<u64> {
    if !(ratio < 1.8e19) {
        return Err(Error::RunCountOverflow { ln_runs: ratio.ln() });
    }
    let mut k = (ratio.ceil() as u64).max(1);
    for _ in 0..4 {
        if k > 1 && 1.0 - pow_u64(eps, k - 1) >= target_p {
            k -= 1;
        } else if 1.0 - pow_u64(eps, k) < target_p {
            k += 1;
        } else {
            break;
        }
    }
    Ok(k)
}

/// Largest integer `L` with `L³ < t_ratio` (exact while `L³ < 2⁵³`).
pub fn max_register_size(t_ratio: f64) -> Result<u64> {
    if !(t_ratio > 0.0) || t_ratio.is_infinite() {
        return Err(Error::invalid(format!(
            "t/τ must be positive and finite, got {t_ratio}"
        )));
    }
    let cube = |l: u64| (l as f64).powi(3);
    let mut l = t_ratio.cbrt().floor() as u64;
    while l > 0 && cube(l) >= t_ratio {
        l -= 1;
    }
    while cube(l + 1) < t_ratio {
        l += 1;
    }
    Ok(l)
}

/// Where Γ(t) comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GammaModel {
    /// Γ(t) by quadrature for a reservoir.
    Reservoir(ReservoirSpec),
    /// Thermal-regime linearization `Γ(t) = rate·t`; a zero rate switches decoherence off.
    Linear { rate: f64 },
}

impl GammaModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            GammaModel::Reservoir(spec) => spec.validate(),
            GammaModel::Linear { rate } if rate.is_finite() && *rate >= 0.0 => Ok(()),
            GammaModel::Linear { rate } => Err(Error::invalid(format!("linear rate must be non-negative, got {rate}"))),
        }
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        match self {
            GammaModel::Reservoir(spec) => gamma_quadrature(spec, t),
            GammaModel::Linear { rate } => Ok(rate * t),
        }
    }
}

/// How the worst-case exponent is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMode {
    /// `LΓ` (independent) or `L²Γ` (shared, co-located); any register size.
    ClosedForm,
    /// Maximize the full quadratic form; `L ≤ 12`.
    Exact,
}

impl std::str::FromStr for ExponentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(ExponentMode::ClosedForm),
            "exact" => Ok(ExponentMode::Exact),
            other => Err(Error::invalid(format!("unknown exponent mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInput {
    pub model: GammaModel,
    pub topology: Topology,
    /// Distance between neighbouring qubits under a shared reservoir (0 = co-located).
    pub spacing: f64,
    pub tau: f64,
    pub target_p: f64,
    pub sizes: Vec<usize>,
    pub mode: ExponentMode,
    /// Available coherence time over τ, for the size bound.
    pub t_ratio: Option<f64>,
}

impl ScalingInput {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        check_target(self.target_p)?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.spacing >= 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid("spacing must be non-negative and finite"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::invalid("register sizes must be non-empty and positive"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("register sizes must be strictly increasing"));
        }
        let spread = self.topology == Topology::Shared && self.spacing > 0.0;
        match self.mode {
            ExponentMode::ClosedForm if spread => {
                return Err(Error::invalid(
                    "closed-form mode needs co-located qubits; use exact mode",
                ))
            }
            ExponentMode::Exact if self.sizes.iter().any(|&l| l > MAX_QUBITS) => {
                return Err(Error::invalid(format!(
                    "exact mode supports at most {MAX_QUBITS} qubits"
                )))
            }
            _ => {}
        }
        if spread && matches!(self.model, GammaModel::Linear { .. }) {
            return Err(Error::invalid(
                "a linear Γ model has no spatial structure; set spacing to 0",
            ));
        }
        if let Some(r) = self.t_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("t/τ must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub input_sizes: Vec<usize>,
    pub run_times: Vec<f64>,
    /// Worst-case decay exponent at each run time.
    pub exponents: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// `None` where the count exceeds `u64`.
    pub runs: Vec<Option<u64>>,
    /// Natural log of the real-valued run count, clipped at 0.
    pub ln_runs: Vec<f64>,
    /// Slope of `ln ln k` against `ln L` over sizes with `k > 1`.
    pub fitted_exponent: Option<f64>,
    /// Least-squares fit of `1 − ε(L) = A·exp(−αL)`.
    pub survival_prefactor: Option<f64>,
    pub survival_rate: Option<f64>,
    pub l_max: Option<u64>,
    pub input: ScalingInput,
}

fn worst_exponent(input: &ScalingInput, l: usize, t: f64) -> Result<f64> {
    let lf = l as f64;
    match input.mode {
        ExponentMode::ClosedForm => {
            let g = input.model.gamma(t)?;
            Ok(match input.topology {
                Topology::Independent => lf * g,
                Topology::Shared => lf * lf * g,
            })
        }
        ExponentMode::Exact => {
            let coupling = match (&input.model, input.topology) {
                (GammaModel::Reservoir(spec), topology) => {
                    let positions: Vec<f64> = (0..l).map(|n| n as f64 * input.spacing).collect();
                    CouplingMatrix::new(spec, &positions, topology, t)?
                }
                (model, Topology::Independent) => {
                    CouplingMatrix::from_matrix(DMatrix::from_diagonal_element(l, l, model.gamma(t)?))?
                }
                (model, Topology::Shared) => CouplingMatrix::from_matrix(DMatrix::from_element(l, l, model.gamma(t)?))?,
            };
            Ok(coupling.worst_case())
        }
    }
}

/// `ln` of the real-valued run count `ln(1 − P)/ln ε`, computed without forming ε near 1.
fn ln_real_runs(exponent: f64, target_p: f64) -> f64 {
    let survival = (-exponent).exp();
    let ln_neg_ln_eps = if exponent > 600.0 {
        -exponent
    } else if survival > 0.5 {
        (-(-(-exponent).exp_m1()).ln()).ln()
    } else {
        (-(-survival).ln_1p()).ln()
    };
    (-(-target_p).ln_1p()).ln() - ln_neg_ln_eps
}

pub fn runs_vs_size(input: &ScalingInput) -> Result<ScalingReport> {
    input.validate()?;
    let n = input.sizes.len();
    let mut report = ScalingReport {
        input_sizes: input.sizes.clone(),
        run_times: Vec::with_capacity(n),
        exponents: Vec::with_capacity(n),
        epsilon: Vec::with_capacity(n),
        runs: Vec::with_capacity(n),
        ln_runs: Vec::with_capacity(n),
        fitted_exponent: None,
        survival_prefactor: None,
        survival_rate: None,
        l_max: input.t_ratio.map(max_register_size).transpose()?,
        input: input.clone(),
    };
    for &l in &input.sizes {
        let t = input.tau * (l * l) as f64;
        let e = worst_exponent(input, l, t)?;
        let eps = -(-e).exp_m1();
        let (runs, ln_runs) = if e == 0.0 {
            (Some(1), 0.0)
        } else {
            let ln_k = ln_real_runs(e, input.target_p).max(0.0);
            let runs = if eps < 1.0 && ln_k < 43.0 {
                Some(required_runs(eps, input.target_p)?)
            } else {
                None
            };
            (runs, ln_k)
        };
        report.run_times.push(t);
        report.exponents.push(e);
        report.epsilon.push(eps);
        report.runs.push(runs);
        report.ln_runs.push(ln_runs);
    }

    let growth: Vec<(f64, f64)> = report
        .input_sizes
        .iter()
        .zip(&report.ln_runs)
        .filter(|(_, &lk)| lk > 0.0)
        .map(|(&l, &lk)| ((l as f64).ln(), lk.ln()))
        .collect();
    report.fitted_exponent = fit_line(&growth).map(|(slope, _)| slope);

    let survival: Vec<(f64, f64)> = report
        .input_sizes
        .iter()
        .zip(&report.exponents)
        .map(|(&l, &e)| (l as f64, -e))
        .collect();
    if let Some((slope, intercept)) = fit_line(&survival) {
        report.survival_rate = Some(-slope);
        report.survival_prefactor = Some(intercept.exp());
    }
    Ok(report)
}

/// Least-squares `(slope, intercept)`; `None` with fewer than two distinct abscissae.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
