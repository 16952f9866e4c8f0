//! Quadrature route for the spectral integrals
//!
//! ```text
//! J(t, τ) = 2A ∫₀^∞ ω^{n-2} e^{-ω/ω_c} coth(ω/2T) (1 - cos ωt) K(ωτ) dω
//! ```
//!
//! with `K = 1` for a single qubit, `K = cos` for a one-dimensional field and
//! `K = sin(x)/x` for a three-dimensional field. `J(t, 0)` is Γ(t).
//!
//! When the integrand is only mildly oscillatory it is integrated directly on
//! `[0, ω_max]`. Otherwise the range is split at a small frequency `ω_s`:
//! `[0, ω_s]` is integrated directly, and on `[ω_s, ∞)` the trigonometric
//! factors are expanded into `e^{ixω}` terms whose integrals are moved onto
//! the vertical line `ω = ω_s + is`, where they decay like `e^{-xs}`. The
//! spectral density is analytic for `Re ω > 0` (the poles of coth sit on the
//! imaginary axis), so the contour shift is exact.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Dimension, ReservoirSpec};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breakpoints, Estimate, Tolerance};

/// Above this many half-periods on `[0, ω_max]` the contour split is used.
const DIRECT_HALF_PERIODS: f64 = 800.0;
/// Kernel phase `ω_max τ` below which the kernel is treated as a smooth amplitude.
const SMOOTH_KERNEL_PHASE: f64 = 20.0 * PI;
/// The vertical contour is cut where `e^{-xs}` drops below e^-45.
const CONTOUR_DECAY: f64 = 45.0;
/// Below this argument sin(x)/x uses its Taylor series.
const SINC_SERIES: f64 = 1e-4;

const PIECE_TOL: Tolerance = Tolerance {
    epsabs: 1e-13,
    epsrel: 1e-11,
    max_subdivisions: 4000,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trig {
    Cos,
    Sin,
}

/// One term `coef ∫_{ω_s}^∞ h(ω) trig(freq ω) dω` of the expanded tail.
#[derive(Debug, Clone, Copy)]
struct TailTerm {
    coef: f64,
    freq: f64,
    trig: Trig,
}

/// Upper frequency limit of the real-axis integrals.
pub(crate) fn omega_max(spec: &ReservoirSpec) -> f64 {
    let decades = (spec.prefactor * spec.cutoff * spec.cutoff * 1e16).ln();
    spec.cutoff * decades.max(40.0)
}

fn coth(x: f64) -> f64 {
    x.tanh().recip()
}

fn expm1_c(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// coth(z) for Re z > 0.
fn coth_c(z: Complex64) -> Complex64 {
    let e = (-2.0 * z).exp();
    (1.0 + e) / -expm1_c(-2.0 * z)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinc_c(z: Complex64) -> Complex64 {
    if z.norm() < SINC_SERIES {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

struct Integrand<'a> {
    spec: &'a ReservoirSpec,
    t: f64,
    transit: f64,
}

impl Integrand<'_> {
    /// ω^{n-2} e^{-ω/ω_c} coth(ω/2T)
    fn density(&self, w: f64) -> f64 {
        let base = (-w / self.spec.cutoff).exp() * coth(w / (2.0 * self.spec.temperature));
        match self.spec.dimension {
            Dimension::One => base / w,
            Dimension::Three => base * w,
        }
    }

    fn density_c(&self, z: Complex64) -> Complex64 {
        let base = (-z / self.spec.cutoff).exp() * coth_c(z / (2.0 * self.spec.temperature));
        match self.spec.dimension {
            Dimension::One => base / z,
            Dimension::Three => base * z,
        }
    }

    fn kernel(&self, w: f64) -> f64 {
        if self.transit == 0.0 {
            return 1.0;
        }
        let x = w * self.transit;
        match self.spec.dimension {
            Dimension::One => x.cos(),
            Dimension::Three => sinc(x),
        }
    }

    fn kernel_c(&self, z: Complex64) -> Complex64 {
        if self.transit == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let x = z * self.transit;
        match self.spec.dimension {
            Dimension::One => x.cos(),
            Dimension::Three => sinc_c(x),
        }
    }

    /// Value of the full integrand as ω → 0.
    fn zero_limit(&self) -> f64 {
        match self.spec.dimension {
            // (1/ω)(2T/ω)(ω²t²/2)
            Dimension::One => self.spec.temperature * self.t * self.t,
            Dimension::Three => 0.0,
        }
    }

    fn full(&self, w: f64, small: f64) -> f64 {
        if w < small {
            return self.zero_limit();
        }
        let s = (0.5 * w * self.t).sin();
        self.density(w) * 2.0 * s * s * self.kernel(w)
    }
}

fn panel_breaks(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    if !(width > 0.0) || !width.is_finite() {
        return Vec::new();
    }
    let count = ((hi - lo) / width).floor().min(4.0 * DIRECT_HALF_PERIODS) as usize;
    (1..=count).map(|k| lo + k as f64 * width).collect()
}

fn checked(est: Result<Estimate>) -> Result<f64> {
    est.map(|e| e.value)
}

/// `J(t, τ)`: the decay exponent weight of a qubit pair separated by transit time `τ`.
pub(crate) fn transit_integral(spec: &ReservoirSpec, t: f64, transit: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and non-negative, got {t}")));
    }
    if !(transit >= 0.0 && transit.is_finite()) {
        return Err(Error::invalid(format!(
            "transit time must be finite and non-negative, got {transit}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let ig = Integrand { spec, t, transit };
    let w_max = omega_max(spec);
    let f_max = t + transit;
    let small = 1e-6 * spec.temperature.min(f_max.recip());
    let scale_breaks = [spec.temperature, spec.cutoff, 10.0 * spec.cutoff];

    let bare = if f_max * w_max <= DIRECT_HALF_PERIODS * PI {
        let mut breaks = panel_breaks(0.0, w_max, PI / f_max);
        breaks.extend_from_slice(&scale_breaks);
        checked(integrate_with_breakpoints(
            |w| ig.full(w, small),
            0.0,
            w_max,
            &breaks,
            PIECE_TOL,
        ))?
    } else {
        split_integral(&ig, w_max, f_max, small)?
    };
    Ok(2.0 * spec.prefactor * bare)
}

fn split_integral(ig: &Integrand, w_max: f64, f_max: f64, small: f64) -> Result<f64> {
    let spec = ig.spec;
    let w_split = (0.5 * spec.cutoff.min(2.0 * PI * spec.temperature)).min(20.0 * PI / f_max);

    let head = checked(integrate_with_breakpoints(
        |w| ig.full(w, small),
        0.0,
        w_split,
        &panel_breaks(0.0, w_split, PI / f_max),
        PIECE_TOL,
    ))?;

    let t = ig.t;
    let tau = ig.transit;
    // Either the kernel rides along in the amplitude, or it is expanded
    // into trigonometric terms with the amplitude left as the bare density.
    let absorb = tau == 0.0 || tau * w_max <= SMOOTH_KERNEL_PHASE;
    let (terms, inverse_weight): (Vec<TailTerm>, bool) = if absorb {
        (
            vec![
                TailTerm {
                    coef: 1.0,
                    freq: 0.0,
                    trig: Trig::Cos,
                },
                TailTerm {
                    coef: -1.0,
                    freq: t,
                    trig: Trig::Cos,
                },
            ],
            false,
        )
    } else {
        match spec.dimension {
            Dimension::One => (
                vec![
                    TailTerm {
                        coef: 1.0,
                        freq: tau,
                        trig: Trig::Cos,
                    },
                    TailTerm {
                        coef: -0.5,
                        freq: t + tau,
                        trig: Trig::Cos,
                    },
                    TailTerm {
                        coef: -0.5,
                        freq: (t - tau).abs(),
                        trig: Trig::Cos,
                    },
                ],
                false,
            ),
            Dimension::Three => (
                vec![
                    TailTerm {
                        coef: 1.0 / tau,
                        freq: tau,
                        trig: Trig::Sin,
                    },
                    TailTerm {
                        coef: -0.5 / tau,
                        freq: t + tau,
                        trig: Trig::Sin,
                    },
                    TailTerm {
                        coef: -0.5 * (tau - t).signum() / tau,
                        freq: (tau - t).abs(),
                        trig: Trig::Sin,
                    },
                ],
                true,
            ),
        }
    };

    let amp = |w: f64| -> f64 {
        let d = ig.density(w);
        if absorb {
            d * ig.kernel(w)
        } else if inverse_weight {
            d / w
        } else {
            d
        }
    };
    let amp_c = |z: Complex64| -> Complex64 {
        let d = ig.density_c(z);
        if absorb {
            d * ig.kernel_c(z)
        } else if inverse_weight {
            d / z
        } else {
            d
        }
    };
    // growth of the absorbed kernel along the contour
    let kernel_growth = if absorb { tau } else { 0.0 };

    let mut tail = 0.0;
    for term in terms {
        if term.coef == 0.0 {
            continue;
        }
        let x = term.freq;
        let value = if x == 0.0 {
            match term.trig {
                Trig::Cos => checked(integrate_with_breakpoints(
                    amp,
                    w_split,
                    w_max,
                    &[spec.temperature, spec.cutoff, 10.0 * spec.cutoff],
                    PIECE_TOL,
                ))?,
                Trig::Sin => 0.0,
            }
        } else if x * (w_max - w_split) <= DIRECT_HALF_PERIODS * PI {
            let mut breaks = panel_breaks(w_split, w_max, PI / x);
            breaks.extend_from_slice(&[spec.temperature, spec.cutoff, 10.0 * spec.cutoff]);
            checked(integrate_with_breakpoints(
                |w| {
                    let phase = match term.trig {
                        Trig::Cos => (x * w).cos(),
                        Trig::Sin => (x * w).sin(),
                    };
                    amp(w) * phase
                },
                w_split,
                w_max,
                &breaks,
                PIECE_TOL,
            ))?
        } else {
            // ∫_{ω_s}^∞ h(ω) e^{ixω} dω = i e^{ixω_s} ∫_0^∞ h(ω_s + is) e^{-xs} ds
            let decay = x - kernel_growth;
            if decay <= 0.0 {
                return Err(Error::invalid("contour integrand does not decay"));
            }
            let s_max = CONTOUR_DECAY / decay;
            let lead = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, x * w_split);
            let breaks: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k / decay).collect();
            checked(integrate_with_breakpoints(
                |s| {
                    let z = Complex64::new(w_split, s);
                    let v = lead * amp_c(z) * (-x * s).exp();
                    match term.trig {
                        Trig::Cos => v.re,
                        Trig::Sin => v.im,
                    }
                },
                0.0,
                s_max,
                &breaks,
                PIECE_TOL,
            ))?
        };
        tail += term.coef * value;
    }
    Ok(head + tail)
}
