//! C interface to `cpcstar`.
//!
//! Systems are passed around as opaque `CpcSystem` handles created by
//! [`cpc_system_parse`], [`cpc_system_builtin`] or [`cpc_nf_lift`] and
//! released with [`cpc_system_free`]. Every fallible call returns a
//! [`CpcStatus`]; on failure [`cpc_last_error`] describes what went wrong.
//! Strings handed out by the library are freed with [`cpc_string_free`].
//!
//! Elements cross the boundary as interleaved `(re, im)` pairs of the
//! column-stacked coordinates of each block, blocks in order, so an element
//! of a stage of dimension `d` takes `2 d` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpcstar::constructions::direct_sum_nf_lift;
use cpcstar::io::{emit_system, parse_system_file, Builtin};
use cpcstar::systems::{cpc_defect, defect_sweep, nf_defect, GeneratorPolicy, IndexGrid};
use cpcstar::{Element, Error, InductiveSystem};
use num_complex::Complex64;

/// Opaque handle to an inductive system.
pub struct CpcSystem {
    inner: InductiveSystem,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Index = 5,
    Shape = 6,
    Infeasible = 7,
    Internal = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CpcStatus {
    match e {
        Error::Parse { .. } | Error::Io(_) => CpcStatus::Parse,
        Error::Index(_) => CpcStatus::Index,
        Error::ShapeMismatch { .. } | Error::InvalidShape(_) => CpcStatus::Shape,
        Error::Infeasible { .. } | Error::OrderZeroThreshold { .. } => CpcStatus::Infeasible,
        Error::Field { source, .. } => status_of(source),
        _ => CpcStatus::Validation,
    }
}

/// Failure raised inside an entry point body.
struct Fail(CpcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CpcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any error or panic.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CpcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CpcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            CpcStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(CpcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn sys_arg<'a>(p: *const CpcSystem) -> Result<&'a InductiveSystem, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn element_arg(sys: &InductiveSystem, k: usize, p: *const f64, len: usize, what: &str) -> Result<Element, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let shape = sys.stage(k)?;
    if len != 2 * shape.dim() {
        return Err(Fail(
            CpcStatus::Shape,
            format!("{what}: stage {k} needs {} doubles, got {len}", 2 * shape.dim()),
        ));
    }
    let raw = std::slice::from_raw_parts(p, len);
    let coords: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(Element::from_coords(shape, &coords)?)
}

fn new_handle(inner: InductiveSystem) -> *mut CpcSystem {
    Box::into_raw(Box::new(CpcSystem { inner }))
}

fn new_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(CpcStatus::Internal, "output contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cpc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a JSON description (system or CPAP; a CPAP yields its
/// associated system).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpc_system_parse(json: *const c_char, out: *mut *mut CpcSystem) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let sys = parse_system_file(text)?.into_system()?;
        *out = new_handle(sys);
        Ok(())
    })
}

/// Builds a builtin example such as `uhf{2,3}` or `interval{3,5,9}`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpc_system_builtin(name: *const c_char, out: *mut *mut CpcSystem) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let b: Builtin = str_arg(name, "name")?.parse()?;
        *out = new_handle(b.build()?.into_system()?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sys` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpc_system_free(sys: *mut CpcSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of stages `N + 1`.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpc_stage_count(sys: *const CpcSystem, out: *mut usize) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = sys_arg(sys)?.num_stages();
        Ok(())
    })
}

/// Block sizes of stage `n`. `*len` receives the block count; when
/// `blocks` is null only the count is written, otherwise `cap` must be at
/// least the count.
///
/// # Safety
/// `sys` must be a live handle, `len` a valid pointer and `blocks` null or
/// writable for `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn cpc_stage_blocks(
    sys: *const CpcSystem,
    n: usize,
    blocks: *mut usize,
    cap: usize,
    len: *mut usize,
) -> CpcStatus {
    guard(|| {
        let len = out_arg(len, "len")?;
        let shape = sys_arg(sys)?.stage(n)?;
        *len = shape.num_blocks();
        if blocks.is_null() {
            return Ok(());
        }
        if cap < shape.num_blocks() {
            return Err(Fail(
                CpcStatus::Shape,
                format!("buffer holds {cap} entries, stage {n} has {} blocks", shape.num_blocks()),
            ));
        }
        std::slice::from_raw_parts_mut(blocks, cap)[..shape.num_blocks()].copy_from_slice(shape.blocks());
        Ok(())
    })
}

/// cpc defect of `x, y ∈ F_k` at `(m, n, l)`, each element given by `len`
/// interleaved doubles.
///
/// # Safety
/// `x` and `y` must be readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpc_cpc_defect(
    sys: *const CpcSystem,
    k: usize,
    x: *const f64,
    y: *const f64,
    len: usize,
    m: usize,
    n: usize,
    l: usize,
    out: *mut f64,
) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = sys_arg(sys)?;
        let (x, y) = (element_arg(s, k, x, len, "x")?, element_arg(s, k, y, len, "y")?);
        *out = cpc_defect(s, k, &x, &y, m, n, l)?;
        Ok(())
    })
}

/// nf defect of `x, y ∈ F_k` at `(m, n)`.
///
/// # Safety
/// As for [`cpc_cpc_defect`].
#[no_mangle]
pub unsafe extern "C" fn cpc_nf_defect(
    sys: *const CpcSystem,
    k: usize,
    x: *const f64,
    y: *const f64,
    len: usize,
    m: usize,
    n: usize,
    out: *mut f64,
) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = sys_arg(sys)?;
        let (x, y) = (element_arg(s, k, x, len, "x")?, element_arg(s, k, y, len, "y")?);
        *out = nf_defect(s, k, &x, &y, m, n)?;
        Ok(())
    })
}

/// Full cpc/nf sweep from stage `k` as CSV. `probes` is `units`,
/// `hermitian`, `coordinate` or `random:COUNT`.
///
/// # Safety
/// `probes` must be a NUL-terminated string, `out` a valid pointer. The
/// string written to `out` is freed with [`cpc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cpc_defect_sweep_csv(
    sys: *const CpcSystem,
    k: usize,
    probes: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = sys_arg(sys)?;
        let policy: GeneratorPolicy = str_arg(probes, "probes")?.parse()?;
        let report = defect_sweep(s, k, &policy, &IndexGrid::full(s.horizon()), seed)?;
        *out = new_string(report.to_csv())?;
        Ok(())
    })
}

/// The system as a JSON description.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer. Free the result
/// with [`cpc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cpc_emit_json(sys: *const CpcSystem, out: *mut *mut c_char) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = new_string(emit_system(sys_arg(sys)?))?;
        Ok(())
    })
}

/// The direct-sum NF lift `B_n = F_0 ⊕ … ⊕ F_n` as a new handle.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpc_nf_lift(sys: *const CpcSystem, out: *mut *mut CpcSystem) -> CpcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = new_handle(direct_sum_nf_lift(sys_arg(sys)?)?);
        Ok(())
    })
}

/// Frees a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
