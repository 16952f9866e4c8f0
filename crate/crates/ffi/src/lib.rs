//! C ABI for the `dephasing` library.
//!
//! Conventions:
//! * every fallible function returns a [`DphStatus`]; results go through out-pointers;
//! * objects are opaque handles created by `*_new` and released by `*_free`;
//! * after a failure, [`dph_last_error_message`] describes it (per thread);
//! * panics never cross the boundary; they surface as `DPH_STATUS_PANIC`.
//!
//! The header `include/dephasing.h` is generated by the build script.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dephasing::bloch::{simulate_ensemble, BlochVector, StochasticFieldParams};
use dephasing::linalg::CMatrix;
use dephasing::register::{self, Branch, RegisterState, Topology};
use dephasing::scaling;
use dephasing::spectral::{self, Dimension, Regime, ReservoirSpec};
use dephasing::Error;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DphStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    QuadratureFailure = 3,
    Domain = 4,
    ImaginaryResidue = 5,
    InvalidState = 6,
    DecodeLeakage = 7,
    UnachievableTarget = 8,
    RunCountOverflow = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DphRegime {
    Quiet = 0,
    Quantum = 1,
    Thermal = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DphTopology {
    Shared = 0,
    Independent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DphBranch {
    Plus = 0,
    Minus = 1,
}

/// Parameters of the stochastic field; see [`dph_field_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DphFieldParams {
    pub b0: f64,
    pub bstep: f64,
    pub p_up: f64,
    pub p_down: f64,
    pub dt: f64,
    pub g: f64,
}

/// Opaque reservoir handle.
pub struct DphReservoir(ReservoirSpec);

/// Opaque register handle.
pub struct DphRegister(RegisterState);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DphStatus {
    match e {
        Error::InvalidParameter(_) => DphStatus::InvalidArgument,
        Error::QuadratureFailure { .. } => DphStatus::QuadratureFailure,
        Error::Domain(_) => DphStatus::Domain,
        Error::ImaginaryResidue { .. } => DphStatus::ImaginaryResidue,
        Error::InvalidState(_) => DphStatus::InvalidState,
        Error::DecodeLeakage { .. } => DphStatus::DecodeLeakage,
        Error::UnachievableTarget => DphStatus::UnachievableTarget,
        Error::RunCountOverflow { .. } => DphStatus::RunCountOverflow,
    }
}

struct Failure(DphStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DphStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DphStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DphStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DphStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn reservoir<'a>(p: *const DphReservoir) -> Result<&'a ReservoirSpec, Failure> {
    p.as_ref().map(|r| &r.0).ok_or_else(|| null("reservoir"))
}

fn topology(t: DphTopology) -> Topology {
    match t {
        DphTopology::Shared => Topology::Shared,
        DphTopology::Independent => Topology::Independent,
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dph_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a reservoir with spectral exponent `dimension` (1 or 3).
///
/// # Safety
/// `out_handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dph_reservoir_new(
    dimension: u8,
    cutoff: f64,
    temperature: f64,
    prefactor: f64,
    out_handle: *mut *mut DphReservoir,
) -> DphStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let spec = ReservoirSpec::new(Dimension::try_from(dimension)?, cutoff, temperature, prefactor)?;
        *slot = Box::into_raw(Box::new(DphReservoir(spec)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`dph_reservoir_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dph_reservoir_free(handle: *mut DphReservoir) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Γ(t) by adaptive quadrature.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_gamma_quadrature(res: *const DphReservoir, t: f64, out_value: *mut f64) -> DphStatus {
    guard(|| {
        let spec = reservoir(res)?;
        *out(out_value, "out_value")? = spectral::gamma_quadrature(spec, t)?;
        Ok(())
    })
}

/// Γ(t) from the closed form of the reservoir's dimension.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_gamma_closed_form(res: *const DphReservoir, t: f64, out_value: *mut f64) -> DphStatus {
    guard(|| {
        let spec = reservoir(res)?;
        *out(out_value, "out_value")? = spectral::gamma_closed_form(spec, t)?;
        Ok(())
    })
}

/// Collective exponent Γ± of two qubits a transit time `ts` apart.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_gamma_pm(
    res: *const DphReservoir,
    ts: f64,
    branch: DphBranch,
    t: f64,
    out_value: *mut f64,
) -> DphStatus {
    guard(|| {
        let spec = reservoir(res)?;
        let branch = match branch {
            DphBranch::Plus => Branch::Plus,
            DphBranch::Minus => Branch::Minus,
        };
        *out(out_value, "out_value")? = register::gamma_pm(spec, ts, branch, t)?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_classify_regime(
    res: *const DphReservoir,
    t: f64,
    out_regime: *mut DphRegime,
) -> DphStatus {
    guard(|| {
        let spec = reservoir(res)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure(
                DphStatus::InvalidArgument,
                format!("t must be positive, got {t}"),
            ));
        }
        *out(out_regime, "out_regime")? = match spectral::classify_regime(spec, t) {
            Regime::Quiet => DphRegime::Quiet,
            Regime::Quantum => DphRegime::Quantum,
            Regime::Thermal => DphRegime::Thermal,
        };
        Ok(())
    })
}

/// ζ(2, q) for complex `q = re + i·im` with `re > 0`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_hurwitz_zeta2(re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> DphStatus {
    guard(|| {
        let (o_re, o_im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let z = dephasing::hurwitz_zeta2(Complex64::new(re, im))?;
        *o_re = z.re;
        *o_im = z.im;
        Ok(())
    })
}

/// `1 − eps^k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_success_probability(k: u64, eps: f64, out_value: *mut f64) -> DphStatus {
    guard(|| {
        *out(out_value, "out_value")? = scaling::success_probability(k, eps)?;
        Ok(())
    })
}

/// Smallest run count reaching `target_p`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_required_runs(eps: f64, target_p: f64, out_runs: *mut u64) -> DphStatus {
    guard(|| {
        *out(out_runs, "out_runs")? = scaling::required_runs(eps, target_p)?;
        Ok(())
    })
}

/// Largest `L` with `L³ < t_ratio`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_max_register_size(t_ratio: f64, out_size: *mut u64) -> DphStatus {
    guard(|| {
        *out(out_size, "out_size")? = scaling::max_register_size(t_ratio)?;
        Ok(())
    })
}

/// Creates a register from a row-major `2^n × 2^n` density matrix given as
/// separate real and imaginary arrays, plus one position per qubit.
///
/// # Safety
/// `rho_re`/`rho_im` must hold `4^n_qubits` values, `positions` `n_qubits` values.
#[no_mangle]
pub unsafe extern "C" fn dph_register_new(
    n_qubits: usize,
    rho_re: *const f64,
    rho_im: *const f64,
    positions: *const f64,
    topo: DphTopology,
    out_handle: *mut *mut DphRegister,
) -> DphStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        if n_qubits == 0 || n_qubits > register::MAX_QUBITS {
            return Err(Error::InvalidState(format!("n_qubits must be 1..={}", register::MAX_QUBITS)).into());
        }
        let dim = 1usize << n_qubits;
        let re = slice(rho_re, dim * dim, "rho_re")?;
        let im = slice(rho_im, dim * dim, "rho_im")?;
        let pos = slice(positions, n_qubits, "positions")?;
        let rho = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[i * dim + j], im[i * dim + j]));
        let state = RegisterState::new(rho, pos.to_vec(), topology(topo))?;
        *slot = Box::into_raw(Box::new(DphRegister(state)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dph_register_free(handle: *mut DphRegister) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Matrix dimension `2^L`, or 0 for a null handle.
///
/// # Safety
/// `reg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dph_register_dim(reg: *const DphRegister) -> usize {
    reg.as_ref().map_or(0, |r| r.0.dim())
}

/// Element `ρ_ij`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_register_element(
    reg: *const DphRegister,
    i: usize,
    j: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> DphStatus {
    guard(|| {
        let state = &reg.as_ref().ok_or_else(|| null("register"))?.0;
        let (o_re, o_im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        if i >= state.dim() || j >= state.dim() {
            return Err(Failure(
                DphStatus::InvalidArgument,
                format!("index ({i}, {j}) out of range"),
            ));
        }
        let z = state.element(i, j);
        *o_re = z.re;
        *o_im = z.im;
        Ok(())
    })
}

/// New register holding the state after dephasing for time `t`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_register_evolve(
    reg: *const DphRegister,
    res: *const DphReservoir,
    t: f64,
    out_handle: *mut *mut DphRegister,
) -> DphStatus {
    guard(|| {
        let state = &reg.as_ref().ok_or_else(|| null("register"))?.0;
        let spec = reservoir(res)?;
        let slot = out(out_handle, "out_handle")?;
        let evolved = register::evolve(state, spec, t)?;
        *slot = Box::into_raw(Box::new(DphRegister(evolved)));
        Ok(())
    })
}

/// Largest decay exponent over all elements of an `n_qubits` register.
///
/// # Safety
/// `positions` must hold `n_qubits` values; `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dph_worst_case_exponent(
    res: *const DphReservoir,
    n_qubits: usize,
    positions: *const f64,
    topo: DphTopology,
    t: f64,
    out_value: *mut f64,
) -> DphStatus {
    guard(|| {
        let spec = reservoir(res)?;
        let pos = slice(positions, n_qubits, "positions")?;
        *out(out_value, "out_value")? = register::worst_case_exponent(spec, n_qubits, pos, topology(topo), t)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dph_field_params_default() -> DphFieldParams {
    let p = StochasticFieldParams::default();
    DphFieldParams {
        b0: p.b0,
        bstep: p.bstep,
        p_up: p.p_up,
        p_down: p.p_down,
        dt: p.dt,
        g: p.g,
    }
}

/// Ensemble-mean Bloch trajectory, written into caller buffers of `capacity`
/// samples each. `*out_len` receives the sample count; if it exceeds
/// `capacity`, nothing is written and `DPH_STATUS_BUFFER_TOO_SMALL` is returned,
/// so a first call with `capacity = 0` queries the size.
///
/// # Safety
/// `params`, `s0` (3 values) and `out_len` must be valid; buffers must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn dph_simulate_ensemble(
    params: *const DphFieldParams,
    s0: *const f64,
    t_max: f64,
    n_members: usize,
    master_seed: u64,
    times: *mut f64,
    sx: *mut f64,
    sy: *mut f64,
    sz: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> DphStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let s0 = slice(s0, 3, "s0")?;
        let len_slot = out(out_len, "out_len")?;
        let params = StochasticFieldParams {
            b0: p.b0,
            bstep: p.bstep,
            p_up: p.p_up,
            p_down: p.p_down,
            dt: p.dt,
            g: p.g,
        };
        let tr = simulate_ensemble(
            &params,
            BlochVector::new(s0[0], s0[1], s0[2]),
            t_max,
            n_members,
            master_seed,
        )?;
        *len_slot = tr.len();
        if tr.len() > capacity {
            return Err(Failure(
                DphStatus::BufferTooSmall,
                format!("need {} samples, buffers hold {capacity}", tr.len()),
            ));
        }
        for (dst, src, name) in [
            (times, &tr.times, "times"),
            (sx, &tr.sx, "sx"),
            (sy, &tr.sy, "sy"),
            (sz, &tr.sz, "sz"),
        ] {
            if dst.is_null() {
                return Err(null(name));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        }
        Ok(())
    })
}
