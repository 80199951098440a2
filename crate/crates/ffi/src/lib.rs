//! C ABI for the `nsqp` solver.
//!
//! Problems and reports are opaque handles created and released through this
//! interface. Every fallible call returns an [`NsqpStatus`] and writes its
//! result through an out-pointer; panics never cross the boundary.

use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nsqp::corpus;
use nsqp::sqp::{SolverConfig, SolverReport, SolverStatus};
use nsqp::{NoiseModel, Problem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsqpStatus {
    Ok = 0,
    NullPointer = 1,
    UnknownProblem = 2,
    InvalidArgument = 3,
    OutOfRange = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsqpSolveStatus {
    BudgetExhausted = 0,
    DqpTolerance = 1,
    SubproblemFailure = 2,
}

/// Opaque problem handle.
pub struct NsqpProblem {
    inner: Problem,
}

/// Opaque solver report handle.
pub struct NsqpReport {
    inner: SolverReport,
}

/// Noise bounds on `f`, `c`, `∇f` and the constraint Jacobian, plus the seed
/// of the noise stream.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsqpNoise {
    pub eps_f: f64,
    pub eps_c: f64,
    pub eps_g: f64,
    pub eps_j: f64,
    pub seed: u64,
}

/// Solver parameters. A negative `active_tol` or `dqp_stop_tol` selects the
/// noise-dependent default.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsqpConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub delta: f64,
    pub pi0: f64,
    pub max_iter: usize,
    pub ls_max_backtracks: usize,
    pub window: usize,
    pub qn_damping: f64,
    pub active_tol: f64,
    pub dqp_stop_tol: f64,
}

/// Scalar fields of one iteration record.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsqpIterRecord {
    pub k: usize,
    pub f_tilde: f64,
    pub v_tilde: f64,
    pub pi: f64,
    pub alpha: f64,
    pub rho: f64,
    pub psi_v_tilde: f64,
    pub psi_o_tilde: f64,
    pub qn_skipped: bool,
    pub ls_backtracks: usize,
}

/// User-supplied problem functions. `constraints` writes the `m` constraint
/// values and `jacobian` the `n × m` Jacobian row-major (entry `j * m + i` is
/// `∂cᵢ/∂xⱼ`); both may be null when `m = 0`. The callbacks run on the thread
/// that calls `nsqp_solve` and must stay valid for the lifetime of the problem
/// handle.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct NsqpCallbacks {
    pub user_data: *mut c_void,
    pub objective: Option<extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize) -> f64>,
    pub gradient: Option<extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, g: *mut f64)>,
    pub constraints: Option<extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, c: *mut f64, m: usize)>,
    pub jacobian: Option<extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, jac: *mut f64, m: usize)>,
}

#[derive(Clone, Copy)]
struct UserData(*mut c_void);

// The caller owns the synchronization of `user_data`; see `NsqpCallbacks`.
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

impl UserData {
    fn get(self) -> *mut c_void {
        self.0
    }
}

fn guard(f: impl FnOnce() -> NsqpStatus) -> NsqpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(NsqpStatus::Panic)
}

/// Writes `value` through `out`, which must be non-null.
unsafe fn put<T>(out: *mut T, value: T) -> NsqpStatus {
    if out.is_null() {
        return NsqpStatus::NullPointer;
    }
    out.write(value);
    NsqpStatus::Ok
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn nsqp_status_message(status: NsqpStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        NsqpStatus::Ok => c"ok",
        NsqpStatus::NullPointer => c"null pointer argument",
        NsqpStatus::UnknownProblem => c"unknown problem name",
        NsqpStatus::InvalidArgument => c"invalid argument",
        NsqpStatus::OutOfRange => c"index out of range",
        NsqpStatus::BufferTooSmall => c"output buffer too small",
        NsqpStatus::Panic => c"internal error",
    };
    msg.as_ptr()
}

/// Number of built-in problems.
#[no_mangle]
pub extern "C" fn nsqp_corpus_len() -> usize {
    corpus::corpus().len()
}

/// Copies the NUL-terminated name of built-in problem `index` into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nsqp_corpus_name(index: usize, buf: *mut c_char, len: usize) -> NsqpStatus {
    guard(|| {
        if buf.is_null() {
            return NsqpStatus::NullPointer;
        }
        let problems = corpus::corpus();
        let Some(p) = problems.get(index) else { return NsqpStatus::OutOfRange };
        let name = p.name().as_bytes();
        if name.len() + 1 > len {
            return NsqpStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(name.as_ptr(), buf.cast::<u8>(), name.len());
        *buf.add(name.len()) = 0;
        NsqpStatus::Ok
    })
}

/// Looks up a built-in problem by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_problem_from_corpus(name: *const c_char, out: *mut *mut NsqpProblem) -> NsqpStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return NsqpStatus::NullPointer;
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else { return NsqpStatus::InvalidArgument };
        match corpus::find(name) {
            Some(p) => put(out, Box::into_raw(Box::new(NsqpProblem { inner: p }))),
            None => NsqpStatus::UnknownProblem,
        }
    })
}

/// Builds a problem `min f(x) s.t. c(x) ≤ 0` from callbacks.
///
/// # Safety
/// `name` must be NUL-terminated or null, `x0` must point to `n` values and
/// the callbacks must follow the contract documented on `NsqpCallbacks`.
#[no_mangle]
pub unsafe extern "C" fn nsqp_problem_from_callbacks(
    name: *const c_char,
    n: usize,
    m: usize,
    x0: *const f64,
    callbacks: NsqpCallbacks,
    out: *mut *mut NsqpProblem,
) -> NsqpStatus {
    guard(|| {
        if x0.is_null() || out.is_null() {
            return NsqpStatus::NullPointer;
        }
        if n == 0 {
            return NsqpStatus::InvalidArgument;
        }
        let (Some(obj), Some(grad)) = (callbacks.objective, callbacks.gradient) else {
            return NsqpStatus::NullPointer;
        };
        if m > 0 && (callbacks.constraints.is_none() || callbacks.jacobian.is_none()) {
            return NsqpStatus::NullPointer;
        }
        let label = if name.is_null() {
            "custom".to_string()
        } else {
            match CStr::from_ptr(name).to_str() {
                Ok(s) => s.to_string(),
                Err(_) => return NsqpStatus::InvalidArgument,
            }
        };
        let x0 = std::slice::from_raw_parts(x0, n).to_vec();
        let ud = UserData(callbacks.user_data);
        let cons = callbacks.constraints;
        let jacf = callbacks.jacobian;
        let problem = Problem::new(
            label,
            n,
            m,
            x0,
            Arc::new(move |x: &[f64]| obj(ud.get(), x.as_ptr(), x.len())),
            Arc::new(move |x: &[f64], g: &mut [f64]| grad(ud.get(), x.as_ptr(), x.len(), g.as_mut_ptr())),
            Arc::new(move |x: &[f64], c: &mut [f64]| {
                if let Some(f) = cons {
                    f(ud.get(), x.as_ptr(), x.len(), c.as_mut_ptr(), c.len())
                }
            }),
            Arc::new(move |x: &[f64], j: &mut nsqp::Mat| {
                if let Some(f) = jacf {
                    let cols = j.cols();
                    f(ud.get(), x.as_ptr(), x.len(), j.as_mut_slice().as_mut_ptr(), cols)
                }
            }),
        );
        put(out, Box::into_raw(Box::new(NsqpProblem { inner: problem })))
    })
}

/// Writes the number of variables and constraints.
///
/// # Safety
/// `problem` must be a live handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_problem_dims(problem: *const NsqpProblem, n: *mut usize, m: *mut usize) -> NsqpStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return NsqpStatus::NullPointer };
        if n.is_null() || m.is_null() {
            return NsqpStatus::NullPointer;
        }
        *n = p.inner.n();
        *m = p.inner.m();
        NsqpStatus::Ok
    })
}

/// Writes the reference optimal value, or returns `OutOfRange` when the
/// problem has none.
///
/// # Safety
/// `problem` must be a live handle; `f` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_problem_reference_f(problem: *const NsqpProblem, f: *mut f64) -> NsqpStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return NsqpStatus::NullPointer };
        match p.inner.reference() {
            Some(r) => put(f, r.f),
            None => NsqpStatus::OutOfRange,
        }
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nsqp_problem_free(problem: *mut NsqpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Noise model with function noise `eps1` and derivative noise `√eps1`.
#[no_mangle]
pub extern "C" fn nsqp_noise_from_eps1(eps1: f64, seed: u64) -> NsqpNoise {
    let m = if eps1 >= 0.0 { nsqp::derive_eps(eps1) } else { NoiseModel::zero() };
    NsqpNoise { eps_f: m.eps_f, eps_c: m.eps_c, eps_g: m.eps_g, eps_j: m.eps_j, seed }
}

#[no_mangle]
pub extern "C" fn nsqp_config_default() -> NsqpConfig {
    let c = SolverConfig::default();
    NsqpConfig {
        theta1: c.theta1,
        theta2: c.theta2,
        delta: c.delta,
        pi0: c.pi0,
        max_iter: c.max_iter,
        ls_max_backtracks: c.ls_max_backtracks,
        window: c.window,
        qn_damping: c.qn_damping,
        active_tol: -1.0,
        dqp_stop_tol: -1.0,
    }
}

fn to_config(c: &NsqpConfig) -> SolverConfig {
    let derived = |v: f64| if v < 0.0 { None } else { Some(v) };
    SolverConfig {
        theta1: c.theta1,
        theta2: c.theta2,
        delta: c.delta,
        pi0: c.pi0,
        max_iter: c.max_iter,
        ls_max_backtracks: c.ls_max_backtracks,
        window: c.window,
        qn_damping: c.qn_damping,
        active_tol: derived(c.active_tol),
        dqp_stop_tol: derived(c.dqp_stop_tol),
    }
}

/// Runs the solver. `noise` and `config` may be null for an exact oracle and
/// default parameters.
///
/// # Safety
/// `problem` must be a live handle, `noise` and `config` null or valid, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_solve(
    problem: *const NsqpProblem,
    noise: *const NsqpNoise,
    config: *const NsqpConfig,
    out: *mut *mut NsqpReport,
) -> NsqpStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return NsqpStatus::NullPointer };
        if out.is_null() {
            return NsqpStatus::NullPointer;
        }
        let model = noise.as_ref().map_or(NoiseModel::zero(), |z| NoiseModel {
            eps_f: z.eps_f,
            eps_c: z.eps_c,
            eps_g: z.eps_g,
            eps_j: z.eps_j,
            seed: z.seed,
        });
        let bounds = [model.eps_f, model.eps_c, model.eps_g, model.eps_j];
        if bounds.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return NsqpStatus::InvalidArgument;
        }
        let cfg = config.as_ref().map_or_else(SolverConfig::default, to_config);
        if cfg.validate().is_err() {
            return NsqpStatus::InvalidArgument;
        }
        let report = nsqp::solve(&p.inner, &model, &cfg);
        put(out, Box::into_raw(Box::new(NsqpReport { inner: report })))
    })
}

/// # Safety
/// `report` must be a live handle; `status` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_status(report: *const NsqpReport, status: *mut NsqpSolveStatus) -> NsqpStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return NsqpStatus::NullPointer };
        let s = match r.inner.status {
            SolverStatus::BudgetExhausted => NsqpSolveStatus::BudgetExhausted,
            SolverStatus::DqpTolerance => NsqpSolveStatus::DqpTolerance,
            SolverStatus::SubproblemFailure => NsqpSolveStatus::SubproblemFailure,
        };
        put(status, s)
    })
}

/// # Safety
/// `report` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_iterations(report: *const NsqpReport, count: *mut usize) -> NsqpStatus {
    guard(|| match report.as_ref() {
        Some(r) => put(count, r.inner.trace.len()),
        None => NsqpStatus::NullPointer,
    })
}

/// # Safety
/// `report` must be a live handle; `pi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_final_pi(report: *const NsqpReport, pi: *mut f64) -> NsqpStatus {
    guard(|| match report.as_ref() {
        Some(r) => put(pi, r.inner.final_pi),
        None => NsqpStatus::NullPointer,
    })
}

/// # Safety
/// `report` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_qn_skips(report: *const NsqpReport, count: *mut usize) -> NsqpStatus {
    guard(|| match report.as_ref() {
        Some(r) => put(count, r.inner.qn_skip_count),
        None => NsqpStatus::NullPointer,
    })
}

/// Copies the returned point into `buf`, which must hold `n` values.
///
/// # Safety
/// `report` must be a live handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_x_final(report: *const NsqpReport, buf: *mut f64, len: usize) -> NsqpStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return NsqpStatus::NullPointer };
        if buf.is_null() {
            return NsqpStatus::NullPointer;
        }
        let x = &r.inner.x_final;
        if len < x.len() {
            return NsqpStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        NsqpStatus::Ok
    })
}

/// Scalar fields of iteration `k`.
///
/// # Safety
/// `report` must be a live handle; `record` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_record(
    report: *const NsqpReport,
    k: usize,
    record: *mut NsqpIterRecord,
) -> NsqpStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return NsqpStatus::NullPointer };
        let Some(t) = r.inner.trace.get(k) else { return NsqpStatus::OutOfRange };
        put(
            record,
            NsqpIterRecord {
                k: t.k,
                f_tilde: t.f_tilde,
                v_tilde: t.v_tilde,
                pi: t.pi,
                alpha: t.alpha,
                rho: t.rho,
                psi_v_tilde: t.psi_v_tilde,
                psi_o_tilde: t.psi_o_tilde,
                qn_skipped: t.qn_skipped,
                ls_backtracks: t.ls_backtracks,
            },
        )
    })
}

/// Full report as a JSON string, released with `nsqp_string_free`.
///
/// # Safety
/// `report` must be a live handle; `json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_json(report: *const NsqpReport, json: *mut *mut c_char) -> NsqpStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return NsqpStatus::NullPointer };
        let Ok(text) = serde_json::to_string(&r.inner) else { return NsqpStatus::InvalidArgument };
        let Ok(c) = CString::new(text) else { return NsqpStatus::InvalidArgument };
        put(json, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nsqp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nsqp_report_free(report: *mut NsqpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
