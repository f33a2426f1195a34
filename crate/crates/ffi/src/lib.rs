//! C ABI over `bathlab`.
//!
//! Every fallible call returns a [`BathlabStatus`]; on failure the message is
//! kept per thread and read with [`bathlab_last_error_message`]. Handles are
//! opaque, created by `*_new`/`*_run` functions and released with the
//! matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bathlab::cli::{parse_config, run_experiment, ConfigError, RunOutput};
use bathlab::covariance::covariance_at;
use bathlab::density::{density_at, GaussianState};
use bathlab::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult, Method};
use bathlab::response::{build_response, characteristic_roots, discretize_bath, stability_bound, ModelParams, Regime, ResponseSolution};
use bathlab::spectral::SpectralDensity;
use bathlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RegimeMismatch = 3,
    Numerical = 4,
    Config = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathlabRegime {
    LargeCoupling = 0,
    SmallCoupling = 1,
    Boundary = 2,
    Overdamped = 3,
    OscillatoryRunaway = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathlabMethod {
    SolutionFormula = 0,
    Symplectic = 1,
}

/// Characteristic roots, ascending by real part.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BathlabRoots {
    pub re: [f64; 3],
    pub im: [f64; 3],
}

/// Ensemble statistics at one output time, with standard errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BathlabMoments {
    pub t: f64,
    pub mean_q: f64,
    pub se_q: f64,
    pub mean_p: f64,
    pub se_p: f64,
    pub var_q: f64,
    pub se_var_q: f64,
    pub var_p: f64,
    pub se_var_p: f64,
    pub cov_qp: f64,
    pub se_cov_qp: f64,
}

/// Spectral density and model parameters, with the response built once.
pub struct BathlabModel {
    sd: SpectralDensity,
    mp: ModelParams,
    response: Result<ResponseSolution, Error>,
}

pub struct BathlabEnsemble {
    result: EnsembleResult,
}

/// Output of one experiment run: CSV text and JSON summary.
pub struct BathlabRun {
    csv: CString,
    summary: CString,
    checks_passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> BathlabStatus {
    match e {
        Error::InvalidParameter { .. } => BathlabStatus::InvalidArgument,
        Error::RegimeMismatch { .. } => BathlabStatus::RegimeMismatch,
        _ => BathlabStatus::Numerical,
    }
}

fn fail(status: BathlabStatus, msg: impl Into<String>) -> BathlabStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> BathlabStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning a panic into [`BathlabStatus::Panic`].
fn guard(f: impl FnOnce() -> BathlabStatus) -> BathlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BathlabStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn regime_code(r: Regime) -> BathlabRegime {
    match r {
        Regime::LargeCoupling => BathlabRegime::LargeCoupling,
        Regime::SmallCoupling => BathlabRegime::SmallCoupling,
        Regime::Boundary => BathlabRegime::Boundary,
        Regime::Overdamped => BathlabRegime::Overdamped,
        Regime::OscillatoryRunaway => BathlabRegime::OscillatoryRunaway,
    }
}

macro_rules! deref {
    ($p:expr, $name:literal) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(BathlabStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

macro_rules! out {
    ($p:expr, $name:literal) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(BathlabStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

fn model_response(model: &BathlabModel) -> Result<&ResponseSolution, BathlabStatus> {
    model.response.as_ref().map_err(|e| fail(status_of(e), e.to_string()))
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn bathlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn bathlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn model_new(sd: Result<SpectralDensity, Error>, mp: impl FnOnce(&SpectralDensity) -> Result<ModelParams, Error>, out: *mut *mut BathlabModel) -> BathlabStatus {
    let out = out!(out, "out");
    *out = ptr::null_mut();
    let sd = try_ffi!(sd);
    let mp = try_ffi!(mp(&sd));
    let response = build_response(characteristic_roots(&sd, &mp));
    *out = Box::into_raw(Box::new(BathlabModel { sd, mp, response }));
    BathlabStatus::Ok
}

/// Model with `J(nu) = 1 / (a + b nu^2)` and coupling `epsilon`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_new(
    a: f64,
    b: f64,
    omega: f64,
    epsilon: f64,
    kt: f64,
    q0: f64,
    p0: f64,
    out: *mut *mut BathlabModel,
) -> BathlabStatus {
    guard(|| model_new(SpectralDensity::new(a, b), |_| ModelParams::new(omega, epsilon, kt, q0, p0), out))
}

/// As [`bathlab_model_new`], with the coupling given as `eps^2 pi / (2 b)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_from_coupling_rhs(
    a: f64,
    b: f64,
    omega: f64,
    coupling_rhs: f64,
    kt: f64,
    q0: f64,
    p0: f64,
    out: *mut *mut BathlabModel,
) -> BathlabStatus {
    guard(|| {
        model_new(
            SpectralDensity::new(a, b),
            |sd| ModelParams::from_coupling_rhs(sd, omega, coupling_rhs, kt, q0, p0),
            out,
        )
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_free(model: *mut BathlabModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Roots of the characteristic cubic and the coupling regime.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_roots(
    model: *const BathlabModel,
    roots: *mut BathlabRoots,
    regime: *mut BathlabRegime,
) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let roots = out!(roots, "roots");
        let regime = out!(regime, "regime");
        let cr = characteristic_roots(&model.sd, &model.mp);
        let mut rs = cr.roots();
        rs.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        for (i, z) in rs.iter().enumerate() {
            roots.re[i] = z.re;
            roots.im[i] = z.im;
        }
        *regime = regime_code(cr.regime());
        BathlabStatus::Ok
    })
}

/// Continuum positivity bound on `eps^2` and whether the model satisfies it.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_stability(
    model: *const BathlabModel,
    critical_eps_sq: *mut f64,
    positive_definite: *mut bool,
) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let crit = out!(critical_eps_sq, "critical_eps_sq");
        let pd = out!(positive_definite, "positive_definite");
        let b = stability_bound(&model.sd, &model.mp);
        *crit = b.critical_eps_sq;
        *pd = b.positive_definite;
        BathlabStatus::Ok
    })
}

/// `v(t)`, `v'(t)`, `v''(t)` of the continuum response.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_response(
    model: *const BathlabModel,
    t: f64,
    v: *mut f64,
    v1: *mut f64,
    v2: *mut f64,
) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let (v, v1, v2) = (out!(v, "v"), out!(v1, "v1"), out!(v2, "v2"));
        if !(t.is_finite() && t >= 0.0) {
            return fail(BathlabStatus::InvalidArgument, format!("t must be finite and nonnegative, got {t}"));
        }
        let rs = match model_response(model) {
            Ok(rs) => rs,
            Err(s) => return s,
        };
        let r = rs.eval(t);
        (*v, *v1, *v2) = (r.v, r.v1, r.v2);
        BathlabStatus::Ok
    })
}

/// Mean `(q*, p*)` and Gaussian coefficients `A = Var q`, `B = Cov(q, p)`,
/// `C = Var p` at time `t`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_gaussian(
    model: *const BathlabModel,
    t: f64,
    q_star: *mut f64,
    p_star: *mut f64,
    a: *mut f64,
    b: *mut f64,
    c: *mut f64,
) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let (qs, ps) = (out!(q_star, "q_star"), out!(p_star, "p_star"));
        let (a, b, c) = (out!(a, "a"), out!(b, "b"), out!(c, "c"));
        let rs = match model_response(model) {
            Ok(rs) => rs,
            Err(s) => return s,
        };
        let cov = try_ffi!(covariance_at(&model.sd, &model.mp, rs, t));
        (*qs, *ps) = rs.mean(model.mp.q0(), model.mp.p0(), t);
        (*a, *b, *c) = (cov.a_coef, cov.b_coef, cov.c_coef);
        BathlabStatus::Ok
    })
}

/// Limiting density of the system oscillator at `(q, p)` and time `t`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_model_density(model: *const BathlabModel, t: f64, q: f64, p: f64, rho: *mut f64) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let rho = out!(rho, "rho");
        let rs = match model_response(model) {
            Ok(rs) => rs,
            Err(s) => return s,
        };
        let cov = try_ffi!(covariance_at(&model.sd, &model.mp, rs, t));
        *rho = try_ffi!(density_at(&GaussianState::from_response(rs, &model.mp, cov), q, p));
        BathlabStatus::Ok
    })
}

/// Monte Carlo over Gibbs-distributed baths of `n` modes up to `nu_max`.
/// `step <= 0` selects the method default.
///
/// # Safety
/// `times` must point to `n_times` readable values; other pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_ensemble_run(
    model: *const BathlabModel,
    n: usize,
    nu_max: f64,
    sample_count: usize,
    times: *const f64,
    n_times: usize,
    seed: u64,
    method: BathlabMethod,
    step: f64,
    out: *mut *mut BathlabEnsemble,
) -> BathlabStatus {
    guard(|| {
        let model = deref!(model, "model");
        let out = out!(out, "out");
        *out = ptr::null_mut();
        if times.is_null() {
            return fail(BathlabStatus::NullPointer, "`times` is null");
        }
        let times = unsafe { std::slice::from_raw_parts(times, n_times) }.to_vec();
        let bath = try_ffi!(discretize_bath(&model.sd, n, nu_max));
        let cfg = EnsembleConfig {
            bath,
            mp: model.mp,
            sample_count,
            times,
            seed,
            method: match method {
                BathlabMethod::SolutionFormula => Method::SolutionFormula,
                BathlabMethod::Symplectic => Method::Symplectic,
            },
            step: (step > 0.0).then_some(step),
        };
        let result = try_ffi!(run_ensemble(&cfg));
        *out = Box::into_raw(Box::new(BathlabEnsemble { result }));
        BathlabStatus::Ok
    })
}

/// Number of output times held by `ensemble`; 0 for null.
///
/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_ensemble_len(ensemble: *const BathlabEnsemble) -> usize {
    unsafe { ensemble.as_ref() }.map_or(0, |e| e.result.moments.len())
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_ensemble_moments(
    ensemble: *const BathlabEnsemble,
    index: usize,
    out: *mut BathlabMoments,
) -> BathlabStatus {
    guard(|| {
        let ens = deref!(ensemble, "ensemble");
        let out = out!(out, "out");
        let Some(m) = ens.result.moments.get(index) else {
            return fail(
                BathlabStatus::OutOfRange,
                format!("index {index} out of range for {} times", ens.result.moments.len()),
            );
        };
        *out = BathlabMoments {
            t: m.t,
            mean_q: m.mean_q,
            se_q: m.se_q,
            mean_p: m.mean_p,
            se_p: m.se_p,
            var_q: m.var_q,
            se_var_q: m.se_var_q,
            var_p: m.var_p,
            se_var_p: m.se_var_p,
            cov_qp: m.cov_qp,
            se_cov_qp: m.se_cov_qp,
        };
        BathlabStatus::Ok
    })
}

/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_ensemble_free(ensemble: *mut BathlabEnsemble) {
    if !ensemble.is_null() {
        drop(unsafe { Box::from_raw(ensemble) });
    }
}

/// Runs an experiment from JSON config text, as the command line does.
///
/// # Safety
/// `config_json` must be a nul-terminated string; `out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn bathlab_run_config(config_json: *const c_char, out: *mut *mut BathlabRun) -> BathlabStatus {
    guard(|| {
        let out = out!(out, "out");
        *out = ptr::null_mut();
        if config_json.is_null() {
            return fail(BathlabStatus::NullPointer, "`config_json` is null");
        }
        let Ok(text) = unsafe { CStr::from_ptr(config_json) }.to_str() else {
            return fail(BathlabStatus::Config, "config is not valid UTF-8");
        };
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(ConfigError::Validation(errs)) => {
                let msg: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
                return fail(BathlabStatus::Config, msg.join("; "));
            }
            Err(e) => return fail(BathlabStatus::Config, e.to_string()),
        };
        let run: RunOutput = try_ffi!(run_experiment(&cfg));
        let to_c = |s: String| CString::new(s).expect("outputs contain no nul bytes");
        *out = Box::into_raw(Box::new(BathlabRun {
            checks_passed: run.checks_passed(),
            summary: to_c(run.summary_text()),
            csv: to_c(run.csv),
        }));
        BathlabStatus::Ok
    })
}

/// CSV text owned by `run`; null for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_run_csv(run: *const BathlabRun) -> *const c_char {
    unsafe { run.as_ref() }.map_or(ptr::null(), |r| r.csv.as_ptr())
}

/// JSON summary owned by `run`; null for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_run_summary(run: *const BathlabRun) -> *const c_char {
    unsafe { run.as_ref() }.map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_run_checks_passed(run: *const BathlabRun) -> bool {
    unsafe { run.as_ref() }.is_some_and(|r| r.checks_passed)
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bathlab_run_free(run: *mut BathlabRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}
