//! C ABI over the nhlab library.
//!
//! Every fallible function returns an [`NhlabStatus`] and writes its result
//! through an out pointer. Handles are opaque and freed by the matching
//! `*_free` function. The message of the last failure on the calling thread
//! is available from [`nhlab_last_error_message`].

use nhlab::biorthogonality::binorm;
use nhlab::observables::{packet_binorm, packet_ev, Observable, PacketParams};
use nhlab::report::{to_json, VerificationReport};
use nhlab::scattering::{green, transmission};
use nhlab::suites::{self, Suite, SuiteOptions};
use nhlab::{Error, ModelKind, ModelParams, SpectralFunction};
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type C = Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    ExcludedMomentum = 4,
    Convergence = 5,
    ToleranceNotMet = 6,
    OnCut = 7,
    AtPole = 8,
    ZeroDenominator = 9,
    Unsupported = 10,
    IndexOutOfRange = 11,
    InvalidUtf8 = 12,
    Internal = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhlabModelKind {
    JordanBound = 0,
    TwoLevel = 1,
    Threshold = 2,
    ContinuumBs = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhlabObservable {
    Binorm = 0,
    Total = 1,
    Potential = 2,
    Kinetic = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NhlabComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C> for NhlabComplex {
    fn from(z: C) -> Self {
        NhlabComplex { re: z.re, im: z.im }
    }
}

impl From<NhlabComplex> for C {
    fn from(z: NhlabComplex) -> Self {
        C::new(z.re, z.im)
    }
}

/// Opaque validated model parameters.
pub struct NhlabModel {
    params: ModelParams,
    states: Vec<SpectralFunction>,
}

/// Opaque verification report.
pub struct NhlabReport {
    report: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NhlabStatus {
    match e {
        Error::Parameter(_) => NhlabStatus::InvalidParameter,
        Error::Domain { .. } => NhlabStatus::Domain,
        Error::ExcludedMomentum(_) => NhlabStatus::ExcludedMomentum,
        Error::Convergence(_) | Error::SlowDecay(_) | Error::FitUnstable(_) | Error::AsymptoteNotReached(_) => {
            NhlabStatus::Convergence
        }
        Error::ToleranceNotMet { .. } => NhlabStatus::ToleranceNotMet,
        Error::OnCut => NhlabStatus::OnCut,
        Error::AtPole => NhlabStatus::AtPole,
        Error::ZeroDenominator(_) | Error::SingularTransform => NhlabStatus::ZeroDenominator,
        Error::Unsupported(_) => NhlabStatus::Unsupported,
    }
}

enum Failure {
    Status(NhlabStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn fail(status: NhlabStatus, msg: &str) -> Failure {
    Failure::Status(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NhlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NhlabStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, m))) => {
            set_last_error(&m);
            s
        }
        Err(_) => {
            set_last_error("internal panic");
            NhlabStatus::Internal
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(NhlabStatus::NullPointer, "null output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn model_ref<'a>(m: *const NhlabModel) -> Result<&'a NhlabModel, Failure> {
    m.as_ref().ok_or_else(|| fail(NhlabStatus::NullPointer, "null model handle"))
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(NhlabStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(NhlabStatus::InvalidUtf8, "string is not UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nhlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn nhlab_status_name(status: NhlabStatus) -> *const c_char {
    let s: &'static str = match status {
        NhlabStatus::Ok => "ok\0",
        NhlabStatus::NullPointer => "null pointer\0",
        NhlabStatus::InvalidParameter => "invalid parameter\0",
        NhlabStatus::Domain => "domain\0",
        NhlabStatus::ExcludedMomentum => "excluded momentum\0",
        NhlabStatus::Convergence => "convergence\0",
        NhlabStatus::ToleranceNotMet => "tolerance not met\0",
        NhlabStatus::OnCut => "on cut\0",
        NhlabStatus::AtPole => "at pole\0",
        NhlabStatus::ZeroDenominator => "zero denominator\0",
        NhlabStatus::Unsupported => "unsupported\0",
        NhlabStatus::IndexOutOfRange => "index out of range\0",
        NhlabStatus::InvalidUtf8 => "invalid utf-8\0",
        NhlabStatus::Internal => "internal\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nhlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a model. `alpha` is complex only for the two-level model; `beta`
/// is used by the two-level model and `n` by the threshold model.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_new(
    kind: NhlabModelKind,
    alpha: NhlabComplex,
    beta: f64,
    z: NhlabComplex,
    n: u32,
    out: *mut *mut NhlabModel,
) -> NhlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(NhlabStatus::NullPointer, "null output pointer"));
        }
        let kind = match kind {
            NhlabModelKind::JordanBound => ModelKind::JordanBound,
            NhlabModelKind::TwoLevel => ModelKind::TwoLevel,
            NhlabModelKind::Threshold => ModelKind::Threshold,
            NhlabModelKind::ContinuumBs => ModelKind::ContinuumBs,
        };
        let params = ModelParams::new(kind, alpha.into(), beta, z.into(), n)?;
        let states = params.bound_states();
        write(out, Box::into_raw(Box::new(NhlabModel { params, states })))
    })
}

/// # Safety
/// `model` must come from [`nhlab_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_free(model: *mut NhlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_potential(model: *const NhlabModel, x: f64, out: *mut NhlabComplex) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, m.params.potential(x)?.into())
    })
}

/// Number of closed-form discrete states (bound or chain).
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_state_count(model: *const NhlabModel, out: *mut usize) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, m.states.len())
    })
}

unsafe fn state<'a>(m: &'a NhlabModel, index: usize) -> Result<&'a SpectralFunction, Failure> {
    m.states.get(index).ok_or_else(|| fail(NhlabStatus::IndexOutOfRange, "state index out of range"))
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_state_eval(
    model: *const NhlabModel,
    index: usize,
    x: f64,
    out: *mut NhlabComplex,
) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, state(m, index)?.eval(x).into())
    })
}

/// Eigenvalue of the cell the state belongs to.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_state_lambda(model: *const NhlabModel, index: usize, out: *mut NhlabComplex) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, state(m, index)?.lambda().into())
    })
}

/// `∫ψ_i ψ_j dx` without conjugation.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_binorm(
    model: *const NhlabModel,
    i: usize,
    j: usize,
    tol: f64,
    out: *mut NhlabComplex,
) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, binorm(state(m, i)?, state(m, j)?, tol)?.into())
    })
}

/// Continuum solution `ψ(x; k)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_continuum_eval(model: *const NhlabModel, x: f64, k: f64, out: *mut NhlabComplex) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, m.params.continuum_state(k)?.eval(x).into())
    })
}

/// Transmission and reflection amplitudes at real momentum `k > 0`.
///
/// # Safety
/// `model` must be a live handle; `t` and `r` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_transmission(
    model: *const NhlabModel,
    k: f64,
    t: *mut NhlabComplex,
    r: *mut NhlabComplex,
) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        if t.is_null() || r.is_null() {
            return Err(fail(NhlabStatus::NullPointer, "null output pointer"));
        }
        let tr = transmission(&m.params, k)?;
        write(t, tr.t.into())?;
        write(r, tr.r.into())
    })
}

/// Green function `G(x, x'; λ)` off the cut and the poles.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_model_green(
    model: *const NhlabModel,
    lambda: NhlabComplex,
    x: f64,
    xp: f64,
    out: *mut NhlabComplex,
) -> NhlabStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, green(&m.params, lambda.into(), x, xp)?.into())
    })
}

/// Gaussian-packet quantity of the threshold model at width `eps`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_packet_value(eps: f64, z: NhlabComplex, which: NhlabObservable, out: *mut NhlabComplex) -> NhlabStatus {
    guard(|| {
        let p = PacketParams::new(eps, z.into())?;
        let v = match which {
            NhlabObservable::Binorm => packet_binorm(&p)?,
            NhlabObservable::Total => packet_ev(&p, Observable::Total)?,
            NhlabObservable::Potential => packet_ev(&p, Observable::Potential)?,
            NhlabObservable::Kinetic => packet_ev(&p, Observable::Kinetic)?,
        };
        write(out, v.value.into())
    })
}

/// Runs one suite by name (`chains`, `binorms`, `packet`, `coalescence`,
/// `identity`, `scattering`, `finite`) or every suite when `name` is `all`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_verify(name: *const c_char, seed: u64, out: *mut *mut NhlabReport) -> NhlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(NhlabStatus::NullPointer, "null output pointer"));
        }
        let name = str_arg(name)?;
        let selected = if name == "all" { Suite::ALL.to_vec() } else { vec![name.parse::<Suite>()?] };
        let opts = SuiteOptions { seed, ..SuiteOptions::default() };
        let start = Instant::now();
        let reports = selected.into_iter().map(|s| suites::run(s, &opts)).collect();
        let report = VerificationReport::new("verify", serde_json::json!({ "suite": name, "seed": seed }), reports, start.elapsed().as_secs_f64());
        write(out, Box::into_raw(Box::new(NhlabReport { report })))
    })
}

/// # Safety
/// `report` must be a live handle and `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_report_pass(report: *const NhlabReport, pass: *mut bool) -> NhlabStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| fail(NhlabStatus::NullPointer, "null report handle"))?;
        write(pass, r.report.pass)
    })
}

/// # Safety
/// `report` must be a live handle; `records` and `failures` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_report_counts(report: *const NhlabReport, records: *mut usize, failures: *mut usize) -> NhlabStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| fail(NhlabStatus::NullPointer, "null report handle"))?;
        if records.is_null() || failures.is_null() {
            return Err(fail(NhlabStatus::NullPointer, "null output pointer"));
        }
        write(records, r.report.record_count())?;
        write(failures, r.report.failure_count())
    })
}

/// JSON serialization of the report; release it with [`nhlab_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nhlab_report_json(report: *const NhlabReport, out: *mut *mut c_char) -> NhlabStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| fail(NhlabStatus::NullPointer, "null report handle"))?;
        let bytes = to_json(&r.report)?;
        let s = CString::new(bytes).map_err(|_| fail(NhlabStatus::Internal, "report contains NUL"))?;
        write(out, s.into_raw())
    })
}

/// # Safety
/// `report` must come from [`nhlab_verify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhlab_report_free(report: *mut NhlabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
