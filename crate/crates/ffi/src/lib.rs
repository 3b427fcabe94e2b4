//! C ABI over the analysis library.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a `P53Status`; on
//! anything but `P53_STATUS_OK` the message is available from
//! `p53_last_error_message` until the next call on the same thread. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use p53hopf::error::AnalysisError;
use p53hopf::model::{linearize, solve_equilibrium, Equilibrium, LinearizationCoeffs, ModelParams};
use p53hopf::normal_form::{self, Direction, OrbitStability};
use p53hopf::report::{to_json_string, verify_published};
use p53hopf::sim::{simulate_discrete, simulate_weak_chain, simulate_weak_quadrature, HistorySpec, SimOptions, Trajectory};
use p53hopf::spectral::{critical_delay, KernelFamily};

/// Result codes. The numeric values of the analysis failures match the
/// command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P53Status {
    Ok = 0,
    InvalidArgument = 1,
    NoEquilibrium = 2,
    NoHopf = 3,
    NumericalDegeneracy = 4,
    NullPointer = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P53Kernel {
    /// Point delays on transcription and translation.
    Discrete = 0,
    /// Point delay on transcription, weak exponential kernel on translation.
    Weak = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P53Params {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub c2: f64,
    pub d2: f64,
    pub d12: f64,
    pub a: f64,
    pub n: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P53State {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P53HopfPoint {
    pub omega: f64,
    pub tau_crit: f64,
    pub lambda_prime_re: f64,
    pub lambda_prime_im: f64,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P53NormalForm {
    pub c1_re: f64,
    pub c1_im: f64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
    pub supercritical: bool,
    pub stable_orbits: bool,
}

/// Model parameters with the selected equilibrium and its linearization.
pub struct P53Model {
    params: ModelParams,
    equilibrium: Equilibrium,
    lin: LinearizationCoeffs,
}

/// Uniformly sampled solution of the nonlinear model.
pub struct P53Trajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &AnalysisError) -> P53Status {
    match err.exit_code() {
        2 => P53Status::NoEquilibrium,
        3 => P53Status::NoHopf,
        4 => P53Status::NumericalDegeneracy,
        _ => P53Status::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (P53Status, String)>) -> P53Status {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => P53Status::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            P53Status::Internal
        }
    }
}

fn analysis<T>(r: p53hopf::Result<T>) -> Result<T, (P53Status, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, (P53Status, String)> {
    // SAFETY: the caller promises `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| (P53Status::NullPointer, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (P53Status, String)> {
    // SAFETY: the caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| (P53Status::NullPointer, format!("{what} is null")))
}

impl From<P53Params> for ModelParams {
    fn from(p: P53Params) -> Self {
        ModelParams {
            a1: p.a1,
            a2: p.a2,
            b1: p.b1,
            b2: p.b2,
            b12: p.b12,
            c2: p.c2,
            d2: p.d2,
            d12: p.d12,
            a: p.a,
            n: p.n,
        }
    }
}

impl From<ModelParams> for P53Params {
    fn from(p: ModelParams) -> Self {
        P53Params {
            a1: p.a1,
            a2: p.a2,
            b1: p.b1,
            b2: p.b2,
            b12: p.b12,
            c2: p.c2,
            d2: p.d2,
            d12: p.d12,
            a: p.a,
            n: p.n,
        }
    }
}

fn family(kernel: P53Kernel, q2: f64) -> KernelFamily {
    match kernel {
        P53Kernel::Discrete => KernelFamily::Discrete,
        P53Kernel::Weak => KernelFamily::Weak { q2 },
    }
}

/// Message for the most recent failure on this thread; empty after success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn p53_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Writes the worked-example parameter set.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_params_reference(out: *mut P53Params) -> P53Status {
    guard(|| {
        *out_ptr(out, "out")? = ModelParams::reference_set().into();
        Ok(())
    })
}

/// Solves for the equilibria and linearizes at root `root_index`.
///
/// # Safety
/// `params` must be null or valid for reads; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_model_new(
    params: *const P53Params,
    root_index: usize,
    out: *mut *mut P53Model,
) -> P53Status {
    guard(|| {
        let params: ModelParams = (*non_null(params, "params")?).into();
        let slot = out_ptr(out, "out")?;
        let set = analysis(solve_equilibrium(&params))?;
        let equilibrium = *analysis(set.select(root_index))?;
        let lin = analysis(linearize(&params, &equilibrium))?;
        *slot = Box::into_raw(Box::new(P53Model { params, equilibrium, lin }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a pointer from `p53_model_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn p53_model_free(model: *mut P53Model) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_model_equilibrium(model: *const P53Model, out: *mut P53State) -> P53Status {
    guard(|| {
        let m = non_null(model, "model")?;
        let e = &m.equilibrium;
        *out_ptr(out, "out")? = P53State { x1: e.x10, y1: e.y10, x2: e.x20, y2: e.y20 };
        Ok(())
    })
}

/// First crossing of the imaginary axis as the bifurcation delay grows.
/// `q2` is read only for the weak kernel.
///
/// # Safety
/// `model` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_model_hopf(
    model: *const P53Model,
    kernel: P53Kernel,
    q2: f64,
    out: *mut P53HopfPoint,
) -> P53Status {
    guard(|| {
        let m = non_null(model, "model")?;
        let slot = out_ptr(out, "out")?;
        let h = analysis(critical_delay(&m.lin, family(kernel, q2)))?;
        *slot = P53HopfPoint {
            omega: h.omega,
            tau_crit: h.tau_crit,
            lambda_prime_re: h.lambda_prime.re,
            lambda_prime_im: h.lambda_prime.im,
            residual: h.residual,
        };
        Ok(())
    })
}

/// Normal-form quantities at the first crossing. `tau2` splits the critical
/// delay for the discrete kernel; `q2` is read for the weak kernel.
///
/// # Safety
/// `model` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_model_normal_form(
    model: *const P53Model,
    kernel: P53Kernel,
    q2: f64,
    tau2: f64,
    out: *mut P53NormalForm,
) -> P53Status {
    guard(|| {
        let m = non_null(model, "model")?;
        let slot = out_ptr(out, "out")?;
        let h = analysis(critical_delay(&m.lin, family(kernel, q2)))?;
        let split = (kernel == P53Kernel::Discrete).then_some(tau2);
        let nf = analysis(normal_form::analyze(&m.lin, &h, split))?;
        let s = &nf.summary;
        *slot = P53NormalForm {
            c1_re: s.c1.re,
            c1_im: s.c1.im,
            mu2: s.mu2,
            beta2: s.beta2,
            t2: s.t2,
            supercritical: s.direction == Direction::Supercritical,
            stable_orbits: s.orbit_stability == OrbitStability::Stable,
        };
        Ok(())
    })
}

/// Integrates from a constant history at the model's equilibrium with
/// `perturb` added to y1. For the discrete kernel `tau2_or_q2` is the
/// translation lag, for the weak kernel the kernel rate. `quadrature`
/// selects direct evaluation of the weak-kernel integral instead of the
/// auxiliary chain variable.
///
/// # Safety
/// `model` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_simulate(
    model: *const P53Model,
    kernel: P53Kernel,
    tau1: f64,
    tau2_or_q2: f64,
    perturb: f64,
    horizon: f64,
    step: f64,
    quadrature: bool,
    out: *mut *mut P53Trajectory,
) -> P53Status {
    guard(|| {
        let m = non_null(model, "model")?;
        let slot = out_ptr(out, "out")?;
        let mut state = m.equilibrium.state();
        state[1] += perturb;
        let hist = HistorySpec::ConstantValue { state };
        let opts = SimOptions { horizon, step };
        let traj = analysis(match (kernel, quadrature) {
            (P53Kernel::Discrete, _) => simulate_discrete(&m.params, tau1, tau2_or_q2, &hist, &opts),
            (P53Kernel::Weak, false) => simulate_weak_chain(&m.params, tau1, tau2_or_q2, &hist, &opts),
            (P53Kernel::Weak, true) => simulate_weak_quadrature(&m.params, tau1, tau2_or_q2, &hist, &opts),
        })?;
        *slot = Box::into_raw(Box::new(P53Trajectory { inner: traj }));
        Ok(())
    })
}

/// Number of samples; 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p53_trajectory_len(traj: *const P53Trajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.times.len())
}

/// State dimension per sample (4, or 5 with the chain variable); 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p53_trajectory_dim(traj: *const P53Trajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.dim())
}

/// Copies `len` sample times into `times` and `len * dim` row-major states
/// into `states`. `len` must equal `p53_trajectory_len`.
///
/// # Safety
/// `times` must be valid for `len` writes and `states` for `len * dim`.
#[no_mangle]
pub unsafe extern "C" fn p53_trajectory_copy(
    traj: *const P53Trajectory,
    times: *mut f64,
    states: *mut f64,
    len: usize,
) -> P53Status {
    guard(|| {
        let t = &non_null(traj, "traj")?.inner;
        if times.is_null() || states.is_null() {
            return Err((P53Status::NullPointer, "output buffer is null".into()));
        }
        if len != t.times.len() {
            return Err((
                P53Status::InvalidArgument,
                format!("len = {len} but the trajectory holds {} samples", t.times.len()),
            ));
        }
        let dim = t.dim();
        ptr::copy_nonoverlapping(t.times.as_ptr(), times, len);
        for (i, row) in t.states.iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), states.add(i * dim), dim);
        }
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a pointer from `p53_simulate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn p53_trajectory_free(traj: *mut P53Trajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Runs the published worked-example check and returns its JSON report.
/// Release the string with `p53_string_free`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn p53_verify_published_json(out: *mut *mut c_char) -> P53Status {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let report = analysis(verify_published())?;
        let json = CString::new(to_json_string(&report)).map_err(|e| (P53Status::Internal, e.to_string()))?;
        *slot = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn p53_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
