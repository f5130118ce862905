//! C ABI over the splitinv engine.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible call returns a
//! [`SplitinvStatus`]; on failure `splitinv_last_error` describes the cause
//! on the calling thread. Strings returned through `char **` are allocated
//! here and must be released with `splitinv_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splitinv::network::{generate, Family};
use splitinv::procdsl::{gen_dining, gen_mutex, parse_model, print_model, ModelFile};
use splitinv::refine::{refine_loop, Strategy, Verdict};
use splitinv::semantics::{reach, Program};
use splitinv::splitfix::{check_property, strongest_split_invariant, Mode, SplitInvariant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidModel = 3,
    InvalidArgument = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvMode {
    Ag = 0,
    SplitForm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvStrategy {
    Expose = 0,
    Last = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvVerdict {
    Proved = 0,
    Unknown = 1,
    Violated = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvFamily {
    Ring = 0,
    Star = 1,
    Torus = 2,
    Line = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitinvProtocol {
    Dining = 0,
    Mutex = 1,
    MutexLast = 2,
}

/// A parsed and compiled model.
pub struct SplitinvModel {
    model: ModelFile,
    program: Program,
}

/// A computed split invariant with its verdict.
pub struct SplitinvResult {
    program: Program,
    theta: SplitInvariant,
    verdict: Verdict,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

type FfiResult<T> = Result<T, (SplitinvStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SplitinvStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplitinvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SplitinvStatus::Panic
        }
    }
}

fn null(what: &str) -> (SplitinvStatus, String) {
    (SplitinvStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (SplitinvStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

fn invalid(e: impl std::fmt::Display) -> (SplitinvStatus, String) {
    (SplitinvStatus::InvalidModel, e.to_string())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn wrap(model: ModelFile) -> FfiResult<Box<SplitinvModel>> {
    let program = Program::compile(&model).map_err(invalid)?;
    Ok(Box::new(SplitinvModel { model, program }))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn splitinv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// NUL-terminated version string with static lifetime.
#[no_mangle]
pub extern "C" fn splitinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn splitinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and compiles a JSON model.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_model_from_json(json: *const c_char, out: *mut *mut SplitinvModel) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let model = parse_model(text).map_err(invalid)?;
        *out = Box::into_raw(wrap(model)?);
        Ok(())
    })
}

/// Generates a model. `size` is the ring/line size or the number of star
/// leaves; torus uses `size` rows and `cols` columns. Mutex protocols use
/// the generated network's node count.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_model_generate(
    family: SplitinvFamily,
    size: usize,
    cols: usize,
    protocol: SplitinvProtocol,
    out: *mut *mut SplitinvModel,
) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let family = match family {
            SplitinvFamily::Ring => Family::Ring { size },
            SplitinvFamily::Star => Family::Star { leaves: size },
            SplitinvFamily::Torus => Family::Torus { rows: size, cols },
            SplitinvFamily::Line => Family::Line { size },
        };
        let net = generate(&family).map_err(|e| (SplitinvStatus::InvalidArgument, e.to_string()))?;
        let model = match protocol {
            SplitinvProtocol::Dining => gen_dining(&net),
            SplitinvProtocol::Mutex => gen_mutex(net.node_count(), false).map_err(invalid)?,
            SplitinvProtocol::MutexLast => gen_mutex(net.node_count(), true).map_err(invalid)?,
        };
        *out = Box::into_raw(wrap(model)?);
        Ok(())
    })
}

/// Canonical JSON of the model; free with `splitinv_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_model_to_json(model: *const SplitinvModel, out: *mut *mut c_char) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = to_c_string(print_model(&in_arg(model, "model")?.model));
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitinv_model_node_count(model: *const SplitinvModel) -> usize {
    model.as_ref().map_or(0, |m| m.program.node_count())
}

/// # Safety
/// `model` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn splitinv_model_free(model: *mut SplitinvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Computes the strongest split invariant and checks the property.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_check(
    model: *const SplitinvModel,
    mode: SplitinvMode,
    out: *mut *mut SplitinvResult,
) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = in_arg(model, "model")?;
        let mode = match mode {
            SplitinvMode::Ag => Mode::Ag,
            SplitinvMode::SplitForm => Mode::SplitForm,
        };
        let theta = strongest_split_invariant(&m.program, mode);
        let verdict = Verdict::from(check_property(&m.program, &theta));
        *out = Box::into_raw(Box::new(SplitinvResult { program: m.program.clone(), theta, verdict }));
        Ok(())
    })
}

/// Runs the refinement loop; `state_cap` bounds the oracle used when
/// nothing is left to refine.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_refine(
    model: *const SplitinvModel,
    strategy: SplitinvStrategy,
    budget: usize,
    state_cap: usize,
    out: *mut *mut SplitinvResult,
) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = in_arg(model, "model")?;
        let strategy = match strategy {
            SplitinvStrategy::Expose => Strategy::Expose,
            SplitinvStrategy::Last => Strategy::Last,
        };
        let r = refine_loop(&m.model, budget, strategy, Mode::Ag, state_cap).map_err(invalid)?;
        *out = Box::into_raw(Box::new(SplitinvResult { program: r.program, theta: r.theta, verdict: r.verdict }));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_verdict(result: *const SplitinvResult, out: *mut SplitinvVerdict) -> SplitinvStatus {
    guard(|| {
        let r = in_arg(result, "result")?;
        *out_arg(out, "out")? = match r.verdict {
            Verdict::Proved => SplitinvVerdict::Proved,
            Verdict::Unknown { .. } => SplitinvVerdict::Unknown,
            Verdict::Violated { .. } => SplitinvVerdict::Violated,
        };
        Ok(())
    })
}

/// Number of nodes in the (possibly refined) model behind a result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_node_count(result: *const SplitinvResult) -> usize {
    result.as_ref().map_or(0, |r| r.program.node_count())
}

/// Number of local states in the component of `node`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_component_size(
    result: *const SplitinvResult,
    node: usize,
    out: *mut usize,
) -> SplitinvStatus {
    guard(|| {
        let r = in_arg(result, "result")?;
        let out = out_arg(out, "out")?;
        if node >= r.theta.len() {
            return Err((SplitinvStatus::OutOfRange, format!("node {node} out of range (0..{})", r.theta.len())));
        }
        *out = r.theta.component(node).len();
        Ok(())
    })
}

/// Per-node sorted listing of the invariant; free with
/// `splitinv_string_free`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_dump(result: *const SplitinvResult, out: *mut *mut c_char) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = in_arg(result, "result")?;
        *out = to_c_string(r.theta.dump(&r.program));
        Ok(())
    })
}

/// Verdict and evidence as JSON; free with `splitinv_string_free`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_verdict_json(result: *const SplitinvResult, out: *mut *mut c_char) -> SplitinvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = in_arg(result, "result")?;
        let json = serde_json::to_string(&r.verdict).map_err(|e| (SplitinvStatus::Panic, e.to_string()))?;
        *out = to_c_string(json);
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn splitinv_result_free(result: *mut SplitinvResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Explores reachable global states up to `cap`.
///
/// # Safety
/// `model` must be a live handle; `states` and `complete` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitinv_reach(
    model: *const SplitinvModel,
    cap: usize,
    states: *mut usize,
    complete: *mut bool,
) -> SplitinvStatus {
    guard(|| {
        let m = in_arg(model, "model")?;
        let states = out_arg(states, "states")?;
        let complete = out_arg(complete, "complete")?;
        let r = reach(&m.program, cap);
        *states = r.len();
        *complete = r.is_complete();
        Ok(())
    })
}
