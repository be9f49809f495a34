//! C ABI over `lipcomp`.
//!
//! Spaces and maps live behind opaque handles created from the same JSON
//! formats the command line reads. Every fallible call returns a
//! [`LipcompStatus`]; on failure a message is available from
//! [`lipcomp_last_error`] until the next call on the same thread. Strings
//! handed out through `char **` parameters are owned by the caller and must
//! be released with [`lipcomp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lipcomp::compop::{self, MapJson, Method, VerdictJson};
use lipcomp::metric::{Concavity, SpaceJson};
use lipcomp::{cli, freespace, lipfunc, Error, PointedMetricSpace};
use serde_json::{json, Value};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipcompStatus {
    Ok = 0,
    InvalidInput = 1,
    EmptyDomain = 2,
    Generation = 3,
    /// Two decision routes or a certificate check disagreed.
    Inconsistency = 4,
    NullPointer = 5,
    Utf8 = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipcompMethod {
    Oracle = 0,
    Theorem = 1,
    Both = 2,
}

/// A validated finite pointed metric space.
pub struct LipcompSpace {
    space: PointedMetricSpace,
}

/// A basepoint-preserving map between two spaces, holding its own copies.
pub struct LipcompMap {
    domain: PointedMetricSpace,
    codomain: PointedMetricSpace,
    images: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LipcompStatus {
    match e {
        Error::Input(_) | Error::Json(_) | Error::Io(_) => LipcompStatus::InvalidInput,
        Error::EmptyDomain(_) => LipcompStatus::EmptyDomain,
        Error::Generation(_) => LipcompStatus::Generation,
        Error::Inconsistency(_) => LipcompStatus::Inconsistency,
    }
}

struct Failure(LipcompStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(LipcompStatus::InvalidInput, format!("json: {e}"))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LipcompStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LipcompStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lipcomp".into());
            LipcompStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(LipcompStatus::NullPointer, "null pointer argument".into())
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(LipcompStatus::Utf8, format!("argument is not UTF-8: {e}")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put_json(out: *mut *mut c_char, v: &Value) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    let s = serde_json::to_string(v)?;
    *out = CString::new(s).expect("JSON has no nul bytes").into_raw();
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = v;
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `lipcomp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lipcomp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a space from its JSON form.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_from_json(json: *const c_char, out: *mut *mut LipcompSpace) -> LipcompStatus {
    guard(|| {
        let sj: SpaceJson = serde_json::from_str(text(json)?)?;
        let space = sj.to_space()?;
        put(out, Box::into_raw(Box::new(LipcompSpace { space })))
    })
}

/// # Safety
/// `space` is NULL or a live handle from [`lipcomp_space_from_json`].
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_free(space: *mut LipcompSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points, or 0 for a NULL handle.
///
/// # Safety
/// `space` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_len(space: *const LipcompSpace) -> usize {
    space.as_ref().map_or(0, |s| s.space.len())
}

/// # Safety
/// `space` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_is_concave(space: *const LipcompSpace, out: *mut bool) -> LipcompStatus {
    guard(|| {
        let s = &handle(space)?.space;
        put(out, s.check_concave() == Concavity::Concave)
    })
}

/// Writes `{"peak_property": bool, "witness": [x, y] | null}`.
///
/// # Safety
/// `space` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_peak_property(
    space: *const LipcompSpace,
    out_json: *mut *mut c_char,
) -> LipcompStatus {
    guard(|| {
        let s = &handle(space)?.space;
        let peak = lipfunc::has_peak_property(s)?;
        let witness = peak.witness.map(|p| {
            let (a, b) = s.pair_labels(p);
            json!([a, b])
        });
        put_json(out_json, &json!({ "peak_property": peak.holds, "witness": witness }))
    })
}

/// Writes the molecule classification table as a JSON array.
///
/// # Safety
/// `space` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_space_molecules(
    space: *const LipcompSpace,
    out_json: *mut *mut c_char,
) -> LipcompStatus {
    guard(|| {
        let table = freespace::classify(&handle(space)?.space)?;
        put_json(out_json, &serde_json::to_value(table)?)
    })
}

/// Binds a map JSON to a domain and codomain. The handle keeps its own
/// copies of both spaces.
///
/// # Safety
/// `domain` and `codomain` are live handles; `json` is a NUL-terminated
/// string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_map_from_json(
    domain: *const LipcompSpace,
    codomain: *const LipcompSpace,
    json: *const c_char,
    out: *mut *mut LipcompMap,
) -> LipcompStatus {
    guard(|| {
        let (y, x) = (&handle(domain)?.space, &handle(codomain)?.space);
        let mj: MapJson = serde_json::from_str(text(json)?)?;
        let images = mj.bind(y, x)?.images().to_vec();
        let map = LipcompMap { domain: y.clone(), codomain: x.clone(), images };
        put(out, Box::into_raw(Box::new(map)))
    })
}

/// # Safety
/// `map` is NULL or a live handle from [`lipcomp_map_from_json`].
#[no_mangle]
pub unsafe extern "C" fn lipcomp_map_free(map: *mut LipcompMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

impl LipcompMap {
    fn bind(&self) -> Result<compop::BasepointMap<'_>, Failure> {
        Ok(compop::BasepointMap::new(&self.domain, &self.codomain, self.images.clone())?)
    }
}

/// Decides whether the composition operator is an isometry and writes the
/// verdict JSON (certificate, `lip_phi`, hypotheses). Route disagreement
/// under `Both` returns `Inconsistency`.
///
/// # Safety
/// `map` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_map_isometry(
    map: *const LipcompMap,
    method: LipcompMethod,
    out_json: *mut *mut c_char,
) -> LipcompStatus {
    guard(|| {
        let m = handle(map)?.bind()?;
        let method = match method {
            LipcompMethod::Oracle => Method::Oracle,
            LipcompMethod::Theorem => Method::Theorem,
            LipcompMethod::Both => Method::Both,
        };
        put_json(out_json, &cli::isometry_report(&m, method)?)
    })
}

/// Re-checks a verdict JSON (such as the output of
/// [`lipcomp_map_isometry`]) against the map.
///
/// # Safety
/// `map` is a live handle; `verdict_json` is a NUL-terminated string;
/// `confirmed` is writable.
#[no_mangle]
pub unsafe extern "C" fn lipcomp_map_verify_verdict(
    map: *const LipcompMap,
    verdict_json: *const c_char,
    confirmed: *mut bool,
) -> LipcompStatus {
    guard(|| {
        let m = handle(map)?.bind()?;
        let vj: VerdictJson = serde_json::from_str(text(verdict_json)?)?;
        let verdict = vj.bind(&m)?;
        match compop::verify_certificate(&verdict, &m)? {
            compop::CertificateCheck::Confirmed => put(confirmed, true),
            compop::CertificateCheck::Refuted(reason) => {
                set_error(reason);
                put(confirmed, false)
            }
        }
    })
}
