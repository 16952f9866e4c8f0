//! Semiclassical picture: a Bloch vector precessing about z in a static
//! field `B₀` plus a stochastic field `B_z(t)`.
//!
//! `B_z` is a piecewise-constant random walk: each step of length `dt` it
//! moves up by `bstep` with probability `p_up`, down with probability
//! `p_down`, and otherwise stays. Because the field is constant within a
//! step, the azimuthal rotation is integrated exactly; a single realization
//! only picks up a phase, and coherence loss appears in the ensemble mean.
//!
//! Randomness comes from ChaCha8 streams. Member `k` of an ensemble with
//! master seed `m` uses the seed [`member_seed`]`(m, k)`, so results do not
//! depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Members simulated concurrently before being folded into the running sum.
const ENSEMBLE_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StochasticFieldParams {
    /// Static field B₀.
    pub b0: f64,
    /// Field jump B′.
    pub bstep: f64,
    pub p_up: f64,
    pub p_down: f64,
    /// Time step, in units of 1/ω₀.
    pub dt: f64,
    /// Gyromagnetic ratio.
    pub g: f64,
}

impl Default for StochasticFieldParams {
    fn default() -> Self {
        StochasticFieldParams {
            b0: 1.0,
            bstep: 0.1,
            p_up: 0.1,
            p_down: 0.1,
            dt: 0.01,
            g: 1.0,
        }
    }
}

impl StochasticFieldParams {
    /// Defaults scaled to a given static field: B′ = 0.1 B₀ and dt = 0.01/ω₀.
    pub fn for_field(b0: f64, g: f64) -> Self {
        StochasticFieldParams {
            b0,
            bstep: 0.1 * b0,
            dt: 0.01 / (g * b0),
            g,
            ..Default::default()
        }
    }

    /// ω₀ = g B₀
    pub fn omega0(&self) -> f64 {
        self.g * self.b0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0.is_finite() && self.b0 > 0.0) {
            return Err(Error::invalid(format!("b0 must be positive, got {}", self.b0)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::invalid(format!("g must be positive, got {}", self.g)));
        }
        if !self.bstep.is_finite() {
            return Err(Error::invalid("bstep must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        for (name, p) in [("p_up", self.p_up), ("p_down", self.p_down)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.p_up + self.p_down > 1.0 {
            return Err(Error::invalid("p_up + p_down must not exceed 1"));
        }
        Ok(())
    }
}

/// Bloch vector `s` of `ρ = ½(1 + s·σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        BlochVector::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Member,
    EnsembleMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub kind: TrajectoryKind,
}

impl BlochTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// |s_x + i s_y| at every sample.
    pub fn transverse_amplitude(&self) -> Vec<f64> {
        self.sx.iter().zip(&self.sy).map(|(x, y)| x.hypot(*y)).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of ensemble member `index` under `master`.
pub fn member_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn step_count(t_max: f64, dt: f64) -> usize {
    // tolerate t_max being a float multiple of dt
    ((t_max / dt) * (1.0 - 1e-12)).ceil() as usize
}

fn check_inputs(params: &StochasticFieldParams, s0: BlochVector, t_max: f64) -> Result<()> {
    params.validate()?;
    if !(s0.x.is_finite() && s0.y.is_finite() && s0.z.is_finite()) || s0.norm() > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "initial Bloch vector must have norm ≤ 1, got {}",
            s0.norm()
        )));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    Ok(())
}

/// One realization of the stochastic field, sampled at `k·dt` for
/// `k = 0..=⌈t_max/dt⌉`.
pub fn simulate_member(
    params: &StochasticFieldParams,
    s0: BlochVector,
    t_max: f64,
    seed: u64,
) -> Result<BlochTrajectory> {
    check_inputs(params, s0, t_max)?;
    Ok(run_member(params, s0, t_max, seed))
}

fn run_member(params: &StochasticFieldParams, s0: BlochVector, t_max: f64, seed: u64) -> BlochTrajectory {
    let steps = step_count(t_max, params.dt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = s0.x.hypot(s0.y);
    let phi0 = s0.y.atan2(s0.x);
    let omega0 = params.omega0();
    let up = params.p_up;
    let down = 1.0 - params.p_down;

    let mut times = Vec::with_capacity(steps + 1);
    let mut sx = Vec::with_capacity(steps + 1);
    let mut sy = Vec::with_capacity(steps + 1);
    let mut field = 0.0;
    // ∫ g B_z dt, kept apart from the deterministic precession
    let mut field_phase = 0.0;
    for k in 0..=steps {
        let t = k as f64 * params.dt;
        let (sin, cos) = (phi0 + omega0 * t + field_phase).sin_cos();
        times.push(t);
        sx.push(radius * cos);
        sy.push(radius * sin);
        field_phase += params.g * field * params.dt;
        let kappa: f64 = rng.gen();
        if kappa < up {
            field += params.bstep;
        } else if kappa > down {
            field -= params.bstep;
        }
    }
    let sz = vec![s0.z; times.len()];
    BlochTrajectory {
        times,
        sx,
        sy,
        sz,
        kind: TrajectoryKind::Member,
    }
}

/// Pointwise mean of `n_members` realizations seeded from `master_seed`.
///
/// Members run in parallel in blocks; the sum is always accumulated in
/// member-index order, so the result is bit-identical for any thread count.
pub fn simulate_ensemble(
    params: &StochasticFieldParams,
    s0: BlochVector,
    t_max: f64,
    n_members: usize,
    master_seed: u64,
) -> Result<BlochTrajectory> {
    check_inputs(params, s0, t_max)?;
    if n_members == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    let steps = step_count(t_max, params.dt);
    let mut sum_x = vec![0.0; steps + 1];
    let mut sum_y = vec![0.0; steps + 1];
    let mut sum_z = vec![0.0; steps + 1];
    let mut times = Vec::new();

    let indices: Vec<u64> = (0..n_members as u64).collect();
    for block in indices.chunks(ENSEMBLE_BLOCK) {
        let members: Vec<BlochTrajectory> = block
            .par_iter()
            .map(|&k| run_member(params, s0, t_max, member_seed(master_seed, k)))
            .collect();
        for m in members {
            for (acc, v) in sum_x.iter_mut().zip(&m.sx) {
                *acc += v;
            }
            for (acc, v) in sum_y.iter_mut().zip(&m.sy) {
                *acc += v;
            }
            for (acc, v) in sum_z.iter_mut().zip(&m.sz) {
                *acc += v;
            }
            if times.is_empty() {
                times = m.times;
            }
        }
    }
    let n = n_members as f64;
    let scale = |v: Vec<f64>| v.into_iter().map(|x| x / n).collect::<Vec<f64>>();
    Ok(BlochTrajectory {
        times,
        sx: scale(sum_x),
        sy: scale(sum_y),
        sz: scale(sum_z),
        kind: TrajectoryKind::EnsembleMean,
    })
}
