//! Single-qubit decoherence exponent Γ(t) for a thermal bosonic reservoir.
//!
//! The coupling spectrum is `ωⁿ e^{-ω/ω_c}` with `n = 1` (one-dimensional
//! field) or `n = 3` (three-dimensional field). Γ(t) is available through
//! adaptive quadrature and through the closed forms: the low-temperature
//! logarithmic law for `n = 1` and the exact Hurwitz-zeta expression for
//! `n = 3`. Units are `ħ = k_B = 1`.

mod integral;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zeta::hurwitz_zeta2;

pub(crate) use integral::transit_integral;

/// Default overall coupling prefactor.
pub const DEFAULT_PREFACTOR: f64 = 0.1;

/// `ω_c t` at which the three-dimensional plateau is evaluated.
pub const PLATEAU_CUTOFF_TIME: f64 = 1e4;

/// Spectral exponent of the coupling density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    One,
    Three,
}

impl Dimension {
    pub fn exponent(self) -> u8 {
        match self {
            Dimension::One => 1,
            Dimension::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dimension {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Dimension::One),
            3 => Ok(Dimension::Three),
            other => Err(Error::invalid(format!(
                "reservoir dimension must be 1 or 3, got {other}"
            ))),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.exponent()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}d", self.exponent())
    }
}

/// Thermal reservoir with coupling density `A ωⁿ e^{-ω/ω_c}` at temperature `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub dimension: Dimension,
    /// ω_c
    pub cutoff: f64,
    /// T
    pub temperature: f64,
    /// A
    #[serde(default = "default_prefactor")]
    pub prefactor: f64,
}

fn default_prefactor() -> f64 {
    DEFAULT_PREFACTOR
}

impl ReservoirSpec {
    pub fn new(dimension: Dimension, cutoff: f64, temperature: f64, prefactor: f64) -> Result<Self> {
        let spec = ReservoirSpec {
            dimension,
            cutoff,
            temperature,
            prefactor,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Reservoir at temperature 1 with `ω_c = η`, so times read in units of 1/T.
    pub fn with_ratio(dimension: Dimension, eta: f64) -> Result<Self> {
        Self::new(dimension, eta, 1.0, DEFAULT_PREFACTOR)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cutoff", self.cutoff),
            ("temperature", self.temperature),
            ("prefactor", self.prefactor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// η = ω_c / T
    pub fn ratio(&self) -> f64 {
        self.cutoff / self.temperature
    }
}

/// Time regime of the decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// t < 1/ω_c: fluctuations have not acted yet.
    Quiet,
    /// 1/ω_c ≤ t < 1/T: vacuum fluctuations dominate.
    Quantum,
    /// t ≥ 1/T: thermal fluctuations dominate.
    Thermal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Quiet => "quiet",
            Regime::Quantum => "quantum",
            Regime::Thermal => "thermal",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How Γ(t) is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadrature,
    Analytic1d,
    Exact3d,
}

impl Method {
    /// The closed form matching the reservoir dimension.
    pub fn closed_form_for(dimension: Dimension) -> Method {
        match dimension {
            Dimension::One => Method::Analytic1d,
            Dimension::Three => Method::Exact3d,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(Method::Quadrature),
            "analytic1d" => Ok(Method::Analytic1d),
            "exact3d" => Ok(Method::Exact3d),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// Γ(t) sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceCurve {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `None` at t = 0, where no regime is defined.
    pub regimes: Vec<Option<Regime>>,
    pub spec: ReservoirSpec,
    pub method: Method,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("time must be finite and non-negative, got {t}")))
    }
}

/// Γ(t) = 2A ∫₀^∞ ω^{n-2} e^{-ω/ω_c} coth(ω/2T) (1 - cos ωt) dω by adaptive quadrature.
///
/// The factor 2 puts the integral on the same footing as the closed forms.
pub fn gamma_quadrature(spec: &ReservoirSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    check_time(t)?;
    transit_integral(spec, t, 0.0)
}

/// ln[sinh(x)/x] for x ≥ 0 without overflow.
fn ln_sinhc(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0
    } else if x < 1.0 {
        // sinh(x)/x - 1 by its series, so ln_1p keeps full precision
        let x2 = x * x;
        let mut term = 1.0;
        let mut excess = 0.0;
        for k in 1..12 {
            term *= x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            excess += term;
        }
        excess.ln_1p()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - (2.0 * x).ln()
    }
}

/// Low-temperature closed form for a one-dimensional field:
/// `A {ln(1 + ω_c²t²) + 2 ln[sinh(πTt)/(πTt)]}`.
///
/// Accurate when `ω_c ≫ T`.
pub fn gamma_analytic_1d(spec: &ReservoirSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    check_time(t)?;
    if spec.dimension != Dimension::One {
        return Err(Error::invalid(
            "the logarithmic closed form needs a one-dimensional reservoir",
        ));
    }
    let wt = spec.cutoff * t;
    let vacuum = (wt * wt).ln_1p();
    let thermal = 2.0 * ln_sinhc(PI * spec.temperature * t);
    Ok(spec.prefactor * (vacuum + thermal))
}

/// Exact closed form for a three-dimensional field,
///
/// ```text
/// A { 2T² [2ζ(2, q₀) − ζ(2, q₀(1+iω_c t)) − ζ(2, q₀(1−iω_c t))]
///     + ω_c² [(1+iω_c t)⁻² + (1−iω_c t)⁻² − 2] },   q₀ = T/ω_c.
/// ```
///
/// The m = 0 terms of the zeta sums cancel against part of the vacuum
/// bracket; they are removed analytically before evaluation so small `t`
/// does not suffer cancellation. The conjugate zeta pair must sum to a real
/// number; an imaginary residue above 1e-9 of the bracket scale is reported
/// as an error.
pub fn gamma_exact_3d(spec: &ReservoirSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    check_time(t)?;
    if spec.dimension != Dimension::Three {
        return Err(Error::invalid(
            "the zeta closed form needs a three-dimensional reservoir",
        ));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let temp = spec.temperature;
    let q0 = temp / spec.cutoff;
    let y = temp * t;
    // ζ(2, q) = q⁻² + ζ(2, 1 + q)
    let z0 = hurwitz_zeta2(Complex64::new(1.0 + q0, 0.0))?;
    let zp = hurwitz_zeta2(Complex64::new(1.0 + q0, y))?;
    let zm = hurwitz_zeta2(Complex64::new(1.0 + q0, -y))?;
    let pair = zp + zm;
    let scale = z0.re.abs() + zp.norm();
    if pair.im.abs() > 1e-9 * scale {
        return Err(Error::ImaginaryResidue { residue: pair.im });
    }
    let thermal = 2.0 * temp * temp * (2.0 * z0.re - pair.re);
    // The m = 0 zeta terms plus the vacuum bracket reduce to
    // ω_c² [2 − 2 Re(1+ix)⁻²] = 2ω_c² x²(3 + x²)/(1 + x²)², x = ω_c t.
    let x = spec.cutoff * t;
    let x2 = x * x;
    let vacuum = 2.0 * spec.cutoff * spec.cutoff * x2 * (3.0 + x2) / ((1.0 + x2) * (1.0 + x2));
    Ok(spec.prefactor * (thermal + vacuum))
}

/// Γ(t) through the closed form that matches the reservoir dimension.
pub fn gamma_closed_form(spec: &ReservoirSpec, t: f64) -> Result<f64> {
    match spec.dimension {
        Dimension::One => gamma_analytic_1d(spec, t),
        Dimension::Three => gamma_exact_3d(spec, t),
    }
}

/// Γ(t) with the requested method.
pub fn gamma(spec: &ReservoirSpec, t: f64, method: Method) -> Result<f64> {
    match method {
        Method::Quadrature => gamma_quadrature(spec, t),
        Method::Analytic1d => gamma_analytic_1d(spec, t),
        Method::Exact3d => gamma_exact_3d(spec, t),
    }
}

/// Saturation value of the three-dimensional decay, evaluated at ω_c t = 10⁴.
pub fn gamma_plateau_3d(spec: &ReservoirSpec) -> Result<f64> {
    gamma_exact_3d(spec, PLATEAU_CUTOFF_TIME / spec.cutoff)
}

/// Regime of the decay at time `t > 0`.
///
/// If `ω_c ≤ T` the quantum band is empty: times before `1/ω_c` are quiet
/// and everything later is thermal.
pub fn classify_regime(spec: &ReservoirSpec, t: f64) -> Regime {
    if t < spec.cutoff.recip() {
        Regime::Quiet
    } else if t < spec.temperature.recip() {
        Regime::Quantum
    } else {
        Regime::Thermal
    }
}

/// Sample Γ on `times` with `method`. Samples are computed in parallel.
pub fn decoherence_curve(spec: &ReservoirSpec, times: &[f64], method: Method) -> Result<DecoherenceCurve> {
    spec.validate()?;
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("curve times must be ordered"));
    }
    let gamma = times
        .par_iter()
        .map(|&t| self::gamma(spec, t, method))
        .collect::<Result<Vec<f64>>>()?;
    let regimes = times
        .iter()
        .map(|&t| (t > 0.0).then(|| classify_regime(spec, t)))
        .collect();
    Ok(DecoherenceCurve {
        times: times.to_vec(),
        gamma,
        regimes,
        spec: *spec,
        method,
    })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
