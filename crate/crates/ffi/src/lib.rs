//! C interface to the heraldic simulator.
//!
//! Every function returns a [`HeraldicStatus`]. On failure a message is kept
//! per thread and can be read with [`heraldic_last_error`]. Objects handed out
//! through `out` pointers are owned by the caller and released with the
//! matching `*_free` function; strings with [`heraldic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heraldic::cascade::{corrected_metrics_with, migration_check_with};
use heraldic::{
    builtin, DetectorModel, Error, Evaluator, MetricsReport, Scheme, Simulator, TargetGate,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeraldicStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidScheme = 4,
    PhotonCapExceeded = 5,
    UnknownBuiltin = 6,
    InvalidArgument = 7,
    /// The requested quantity does not exist (a Pb whose herald never fires).
    Undefined = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeraldicTarget {
    Cz = 0,
    Cx = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeraldicDetector {
    Pnr = 0,
    Threshold = 1,
}

/// Opaque scheme handle.
pub struct HeraldicScheme(Scheme);

/// Opaque metrics report handle.
pub struct HeraldicReport(MetricsReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(HeraldicStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => HeraldicStatus::ParseError,
            Error::ModeOutOfRange { .. }
            | Error::SameMode { .. }
            | Error::InvalidScheme(_)
            | Error::NotTwoQubit(_) => HeraldicStatus::InvalidScheme,
            Error::PhotonCapExceeded { .. } => HeraldicStatus::PhotonCapExceeded,
            Error::UnknownBuiltin(_) => HeraldicStatus::UnknownBuiltin,
            _ => HeraldicStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HeraldicStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HeraldicStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HeraldicStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {message}"));
            HeraldicStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(HeraldicStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(text: String) -> Result<*mut c_char, Failure> {
    CString::new(text).map(CString::into_raw).map_err(|_| {
        Failure(
            HeraldicStatus::InvalidArgument,
            "text contains a NUL byte".into(),
        )
    })
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn heraldic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn heraldic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a library scheme by name (`NSx`, `CZ_1_16`, `CX_1_9`, `CZ_1_9`, `CZ_2_27`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_scheme_builtin(
    name: *const c_char,
    out: *mut *mut HeraldicScheme,
) -> HeraldicStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let name = name.strip_prefix("builtin:").unwrap_or(name);
        let scheme = builtin(name)?;
        write_out(out, Box::into_raw(Box::new(HeraldicScheme(scheme))))
    })
}

/// Parses and validates a scheme JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_scheme_from_json(
    json: *const c_char,
    out: *mut *mut HeraldicScheme,
) -> HeraldicStatus {
    guard(|| {
        let scheme = Scheme::from_json(read_str(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(HeraldicScheme(scheme))))
    })
}

/// Serializes a scheme; free the result with [`heraldic_string_free`].
///
/// # Safety
/// `scheme` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_scheme_to_json(
    scheme: *const HeraldicScheme,
    out: *mut *mut c_char,
) -> HeraldicStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write_out(out, into_c_string(s.0.to_json())?)
    })
}

/// # Safety
/// `scheme` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_scheme_mode_count(
    scheme: *const HeraldicScheme,
    out: *mut usize,
) -> HeraldicStatus {
    guard(|| write_out(out, borrow(scheme, "scheme")?.0.modes))
}

/// # Safety
/// `scheme` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heraldic_scheme_free(scheme: *mut HeraldicScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Evaluates a two-qubit scheme against a target gate.
///
/// `corrected` adds the signal coincidence check when the scheme passes the
/// migration check. `photon_cap` of 0 keeps the default cap.
///
/// # Safety
/// `scheme` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_evaluate(
    scheme: *const HeraldicScheme,
    target: HeraldicTarget,
    detector: HeraldicDetector,
    corrected: bool,
    photon_cap: usize,
    out: *mut *mut HeraldicReport,
) -> HeraldicStatus {
    guard(|| {
        let s = &borrow(scheme, "scheme")?.0;
        let eval = Evaluator::new(if photon_cap == 0 {
            Simulator::default()
        } else {
            Simulator::new(photon_cap)
        });
        let gate = match target {
            HeraldicTarget::Cz => TargetGate::cz(),
            HeraldicTarget::Cx => TargetGate::cx(),
        };
        let detector = match detector {
            HeraldicDetector::Pnr => DetectorModel::Pnr,
            HeraldicDetector::Threshold => DetectorModel::Threshold,
        };
        let report = if corrected {
            corrected_metrics_with(s, &gate, detector, &eval)?
        } else {
            eval.metrics_report(s, &gate, detector)?
        };
        write_out(out, Box::into_raw(Box::new(HeraldicReport(report))))
    })
}

/// True when photons cannot leak into empty signal modes on a successful herald.
///
/// # Safety
/// `scheme` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_migration_check(
    scheme: *const HeraldicScheme,
    out: *mut bool,
) -> HeraldicStatus {
    guard(|| {
        let ok = migration_check_with(&borrow(scheme, "scheme")?.0, &Evaluator::default())?;
        write_out(out, ok)
    })
}

/// # Safety
/// `report` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_free(report: *mut HeraldicReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_fidelity(
    report: *const HeraldicReport,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| write_out(out, borrow(report, "report")?.0.fidelity))
}

/// Actuation probability.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_probability(
    report: *const HeraldicReport,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| write_out(out, borrow(report, "report")?.0.p))
}

fn logical_input(input: usize) -> Result<usize, Failure> {
    if input < 4 {
        Ok(input)
    } else {
        Err(Failure(
            HeraldicStatus::InvalidArgument,
            format!("logical input {input} is out of range 0..4"),
        ))
    }
}

/// Herald probability for logical input 0..3.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_pa(
    report: *const HeraldicReport,
    input: usize,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| {
        let r = &borrow(report, "report")?.0;
        write_out(out, r.pa[logical_input(input)?])
    })
}

/// Conditional success probability for logical input 0..3; `Undefined` when
/// the herald never fires for that input.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_pb(
    report: *const HeraldicReport,
    input: usize,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| {
        let r = &borrow(report, "report")?.0;
        match r.pb[logical_input(input)?] {
            Some(v) => write_out(out, v),
            None => Err(Failure(
                HeraldicStatus::Undefined,
                format!("herald never fires for input {input}"),
            )),
        }
    })
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_pa_mean(
    report: *const HeraldicReport,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| write_out(out, borrow(report, "report")?.0.pa_mean))
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_pb_mean(
    report: *const HeraldicReport,
    out: *mut f64,
) -> HeraldicStatus {
    guard(|| match borrow(report, "report")?.0.pb_mean {
        Some(v) => write_out(out, v),
        None => Err(Failure(
            HeraldicStatus::Undefined,
            "herald never fires".into(),
        )),
    })
}

/// Whether the coincidence correction was applied.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_corrected(
    report: *const HeraldicReport,
    out: *mut bool,
) -> HeraldicStatus {
    guard(|| write_out(out, borrow(report, "report")?.0.corrected))
}

/// Report as JSON; free the result with [`heraldic_string_free`].
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heraldic_report_to_json(
    report: *const HeraldicReport,
    out: *mut *mut c_char,
) -> HeraldicStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let text = serde_json::to_string(&r.0)
            .map_err(|e| Failure(HeraldicStatus::InvalidArgument, e.to_string()))?;
        write_out(out, into_c_string(text)?)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heraldic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
