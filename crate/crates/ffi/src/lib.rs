//! C ABI over the ifactor library.
//!
//! Structures and fitted models are opaque handles released with their
//! `_free` functions. Every fallible call returns an [`IfStatus`]; on
//! failure [`if_last_error`] describes the cause. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`if_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ifactor::energy::{load_model, EnergyModel};
use ifactor::identify::{identify, RoutePreference};
use ifactor::model::io::GraphSpec;
use ifactor::model::{IfmStructure, RegimeSet, RegimeVector};
use ifactor::sampling::{gibbs_sample, GibbsOptions};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Rejected input or failed computation; see `if_last_error`.
    Domain = 3,
    /// Output buffer too small.
    BufferTooSmall = 4,
    Panic = 5,
}

/// Route selection for [`if_identify`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfRoute {
    Auto = 0,
    JunctionTree = 1,
    Algebraic = 2,
}

/// Opaque interventional factor model structure.
pub struct IfStructure(IfmStructure);

/// Opaque fitted energy model.
pub struct IfModel(EnergyModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

struct Fail(IfStatus, String);

impl From<ifactor::Error> for Fail {
    fn from(e: ifactor::Error) -> Self {
        Fail(IfStatus::Domain, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(IfStatus::Domain, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            IfStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            IfStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(IfStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(IfStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no nul bytes").into_raw()
}

/// Library version and model format, e.g. `0.1.0 (model format 1)`.
/// Static storage; do not free.
#[no_mangle]
pub extern "C" fn if_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), " (model format 1)\0")
        .as_ptr()
        .cast()
}

/// Message for the last failed call on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn if_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn if_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a graph spec JSON document into a structure handle.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn if_structure_from_json(json: *const c_char, out: *mut *mut IfStructure) -> IfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: GraphSpec = serde_json::from_str(str_arg(json, "json")?)?;
        let s = Box::new(IfStructure(spec.to_structure()?));
        *out = Box::into_raw(s);
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`if_structure_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn if_structure_free(s: *mut IfStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Identifies `target_json` (a level array) from `train_json` (an array of
/// level arrays). Writes the certificate JSON to `out_json`; an
/// unidentifiable target is a successful answer with `"identifiable": false`.
///
/// # Safety
/// Pointers must be valid; strings nul-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn if_identify(
    s: *const IfStructure,
    train_json: *const c_char,
    target_json: *const c_char,
    route: IfRoute,
    out_json: *mut *mut c_char,
) -> IfStatus {
    guard(|| {
        let ifm = &ref_arg(s, "structure")?.0;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let train: RegimeSet = serde_json::from_str(str_arg(train_json, "train_json")?)?;
        let target: RegimeVector = serde_json::from_str(str_arg(target_json, "target_json")?)?;
        let pref = match route {
            IfRoute::Auto => RoutePreference::Auto,
            IfRoute::JunctionTree => RoutePreference::JunctionTree,
            IfRoute::Algebraic => RoutePreference::Algebraic,
        };
        let id = identify(ifm, &train, &target, pref)?;
        *out_json = into_c_string(serde_json::to_string(&id)?);
        Ok(())
    })
}

/// Loads a fitted model file.
///
/// # Safety
/// `path` must be nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn if_model_load(path: *const c_char, out: *mut *mut IfModel) -> IfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = load_model(std::path::Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(IfModel(model)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`if_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn if_model_free(m: *mut IfModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of random variables; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn if_model_num_vars(m: *const IfModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.num_vars())
}

/// Number of intervention variables; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn if_model_num_interventions(m: *const IfModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.ifm().space().dim())
}

unsafe fn regime_arg(model: &EnergyModel, levels: *const usize, len: usize) -> Result<RegimeVector, Fail> {
    let r = RegimeVector(slice_arg(levels, len, "regime")?.to_vec());
    model.ifm().space().check(&r)?;
    Ok(r)
}

/// Unnormalized log density of one point under a regime.
///
/// # Safety
/// `x` holds `x_len` values and `regime` holds `regime_len` levels; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn if_model_log_unnorm(
    m: *const IfModel,
    x: *const f64,
    x_len: usize,
    regime: *const usize,
    regime_len: usize,
    out: *mut f64,
) -> IfStatus {
    guard(|| {
        let model = &ref_arg(m, "model")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = slice_arg(x, x_len, "x")?;
        if x.len() != model.num_vars() {
            return Err(Fail(
                IfStatus::Domain,
                format!("x has {} values, model has {} variables", x.len(), model.num_vars()),
            ));
        }
        let r = regime_arg(model, regime, regime_len)?;
        *out = model.log_unnorm(&model.bin_row(x), &r);
        Ok(())
    })
}

/// Draws `n` Gibbs samples (burn-in 500, thinning 5) into `out`, row-major
/// `n × num_vars`. `out_len` is the buffer length in doubles.
///
/// # Safety
/// `regime` holds `regime_len` levels; `out` holds `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn if_model_gibbs(
    m: *const IfModel,
    regime: *const usize,
    regime_len: usize,
    n: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> IfStatus {
    guard(|| {
        let model = &ref_arg(m, "model")?.0;
        let need = n * model.num_vars();
        if out_len < need {
            return Err(Fail(
                IfStatus::BufferTooSmall,
                format!("need {need} doubles, buffer holds {out_len}"),
            ));
        }
        if need > 0 && out.is_null() {
            return Err(null("out"));
        }
        let r = regime_arg(model, regime, regime_len)?;
        let rows = gibbs_sample(model, &r, n, &GibbsOptions::seeded(seed))?;
        if need > 0 {
            let buf = std::slice::from_raw_parts_mut(out, need);
            for (dst, v) in buf.iter_mut().zip(rows.iter().flatten()) {
                *dst = *v;
            }
        }
        Ok(())
    })
}
