//! C ABI over the `evlcp` library.
//!
//! Instances live behind an opaque [`EvlcpInstance`] handle. Every fallible
//! function returns an [`EvlcpStatus`]; on failure a description is kept
//! per thread and can be read with [`evlcp_last_error_message`]. Panics are
//! caught at the boundary and reported as [`EvlcpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evlcp::bounds::{compute, BoundOptions};
use evlcp::cli::instance_file;
use evlcp::{builtin, solver, BlockMatrix, Error, Matrix, Method, Norm, Rigor, SolveOptions, WOptions};

/// Opaque problem instance `min_j (A_j x + q_j) = 0`.
pub struct EvlcpInstance {
    inner: evlcp::EvlcpInstance,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvlcpStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: shapes, non-finite numbers, bad JSON, unknown names.
    InvalidInput = 2,
    /// A hypothesis of the requested bound does not hold.
    Precondition = 3,
    /// Enumeration would exceed the budget; the question is undecided.
    Budget = 4,
    NoSolution = 5,
    NotConverged = 6,
    SingularJacobian = 7,
    Numerical = 8,
    Overflow = 9,
    /// The output buffer length does not match the instance dimension.
    BufferSize = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvlcpMethod {
    Rearrangement = 0,
    Convex = 1,
    Hmatrix = 2,
    Sdd = 3,
    AlphaXz = 4,
    Lower = 5,
    MathiasPang = 6,
    ChenXiang = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvlcpNorm {
    Inf = 0,
    One = 1,
}

/// Tuning for [`evlcp_bound`]. Zero fields select the library defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvlcpBoundOptions {
    /// Weight grid step in `(0, 1]`.
    pub grid_step: f64,
    /// Cap on exhaustive enumerations.
    pub budget: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvlcpBound {
    /// The constant `c`; `INFINITY` when a singular combination was found.
    pub value: f64,
    /// True for closed-form values, false for numerical estimates.
    pub rigorous: bool,
    pub evaluations: u64,
    pub objective_evaluations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EvlcpStatus {
    match e {
        Error::Input(_) => EvlcpStatus::InvalidInput,
        Error::Precondition(_) => EvlcpStatus::Precondition,
        Error::Budget { .. } => EvlcpStatus::Budget,
        Error::Overflow(_) => EvlcpStatus::Overflow,
        Error::NoSolution(_) => EvlcpStatus::NoSolution,
        Error::SingularJacobian { .. } => EvlcpStatus::SingularJacobian,
        Error::NotConverged { .. } => EvlcpStatus::NotConverged,
        Error::Numerical(_) => EvlcpStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic in the thread's last-error slot.
fn guard(f: impl FnOnce() -> Result<(), (EvlcpStatus, String)>) -> EvlcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            EvlcpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            EvlcpStatus::Panic
        }
    }
}

fn lib(e: Error) -> (EvlcpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (EvlcpStatus, String) {
    (EvlcpStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or a valid nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EvlcpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (EvlcpStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `inst` is null or a live handle.
unsafe fn handle<'a>(inst: *const EvlcpInstance) -> Result<&'a evlcp::EvlcpInstance, (EvlcpStatus, String)> {
    inst.as_ref().map(|h| &h.inner).ok_or_else(|| null("instance"))
}

/// # Safety
/// `out` is null or valid for writing one pointer.
unsafe fn publish(out: *mut *mut EvlcpInstance, inner: evlcp::EvlcpInstance) {
    *out = Box::into_raw(Box::new(EvlcpInstance { inner }));
}

/// Creates an instance from `k + 1` row-major `n x n` blocks stored back to
/// back in `a` and, if `q` is not null, `k + 1` vectors of length `n`.
///
/// # Safety
/// `a` must point to `(k + 1) * n * n` doubles, `q` to `(k + 1) * n` doubles
/// or be null, and `out` must be valid for writing one pointer. On success
/// `*out` owns a handle to release with [`evlcp_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn evlcp_instance_new(
    n: usize,
    k: usize,
    a: *const f64,
    q: *const f64,
    out: *mut *mut EvlcpInstance,
) -> EvlcpStatus {
    guard(|| {
        if a.is_null() {
            return Err(null("a"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || k == 0 {
            return Err((EvlcpStatus::InvalidInput, format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
        }
        let nn = n.checked_mul(n).and_then(|v| v.checked_mul(k + 1));
        let len = nn.ok_or((EvlcpStatus::InvalidInput, "dimensions overflow".to_string()))?;
        let data = std::slice::from_raw_parts(a, len);
        let blocks = data
            .chunks_exact(n * n)
            .map(|c| Matrix::from_row_slice(n, c))
            .collect::<evlcp::Result<Vec<_>>>()
            .map_err(lib)?;
        let bm = BlockMatrix::new(blocks).map_err(lib)?;
        let inner = if q.is_null() {
            evlcp::EvlcpInstance::homogeneous(bm)
        } else {
            let qs = std::slice::from_raw_parts(q, (k + 1) * n).chunks_exact(n).map(<[f64]>::to_vec).collect();
            evlcp::EvlcpInstance::new(bm, qs).map_err(lib)?
        };
        publish(out, inner);
        Ok(())
    })
}

/// Parses an `evlcp-v1` JSON document.
///
/// # Safety
/// `json` is a nul-terminated string and `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn evlcp_instance_from_json(json: *const c_char, out: *mut *mut EvlcpInstance) -> EvlcpStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        publish(out, instance_file::parse(text).map_err(lib)?);
        Ok(())
    })
}

/// Loads a built-in example (`"example-2.1"`, `"example-4.1"`, `"example-4.2"`
/// or `"example-4.3"`) with zero source vectors.
///
/// # Safety
/// `name` is a nul-terminated string and `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn evlcp_instance_builtin(name: *const c_char, out: *mut *mut EvlcpInstance) -> EvlcpStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        publish(out, builtin::instance(name).map_err(lib)?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `inst` is null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn evlcp_instance_free(inst: *mut EvlcpInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Writes the dimension `n` and the number `k` (blocks minus one).
///
/// # Safety
/// `inst` is a live handle; `n` and `k` are valid for writing.
#[no_mangle]
pub unsafe extern "C" fn evlcp_instance_dims(inst: *const EvlcpInstance, n: *mut usize, k: *mut usize) -> EvlcpStatus {
    guard(|| {
        let h = handle(inst)?;
        if n.is_null() || k.is_null() {
            return Err(null("output"));
        }
        *n = h.n();
        *k = h.k();
        Ok(())
    })
}

/// Decides the row W-property by enumerating representative matrices.
/// `budget == 0` uses the default cap; exceeding the cap returns
/// [`EvlcpStatus::Budget`].
///
/// # Safety
/// `inst` is a live handle and `verdict` is valid for writing.
#[no_mangle]
pub unsafe extern "C" fn evlcp_check_w(inst: *const EvlcpInstance, budget: u64, verdict: *mut bool) -> EvlcpStatus {
    guard(|| {
        let h = handle(inst)?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let mut opts = WOptions::default();
        if budget > 0 {
            opts.budget = budget;
        }
        *verdict = evlcp::has_row_w_property(h.matrix(), &opts).map_err(lib)?.verdict;
        Ok(())
    })
}

fn method_of(m: EvlcpMethod) -> Method {
    match m {
        EvlcpMethod::Rearrangement => Method::Rearrangement,
        EvlcpMethod::Convex => Method::Convex,
        EvlcpMethod::Hmatrix => Method::Hmatrix,
        EvlcpMethod::Sdd => Method::Sdd,
        EvlcpMethod::AlphaXz => Method::AlphaXz,
        EvlcpMethod::Lower => Method::Lower,
        EvlcpMethod::MathiasPang => Method::MathiasPang,
        EvlcpMethod::ChenXiang => Method::ChenXiang,
    }
}

/// Computes the constant of the requested bound. `opts` may be null.
///
/// # Safety
/// `inst` is a live handle, `opts` is null or valid for reading and `out`
/// is valid for writing.
#[no_mangle]
pub unsafe extern "C" fn evlcp_bound(
    inst: *const EvlcpInstance,
    method: EvlcpMethod,
    norm: EvlcpNorm,
    opts: *const EvlcpBoundOptions,
    out: *mut EvlcpBound,
) -> EvlcpStatus {
    guard(|| {
        let h = handle(inst)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = opts.as_ref().copied().unwrap_or_default();
        let mut bopts = BoundOptions::default();
        if o.grid_step != 0.0 {
            if !(o.grid_step > 0.0 && o.grid_step <= 1.0) {
                return Err((EvlcpStatus::InvalidInput, format!("grid step {} outside (0, 1]", o.grid_step)));
            }
            bopts.max.grid_step = Some(o.grid_step);
        }
        if o.budget > 0 {
            bopts.max.vertex_budget = o.budget;
        }
        let norm = match norm {
            EvlcpNorm::Inf => Norm::Inf,
            EvlcpNorm::One => Norm::One,
        };
        let r = compute(method_of(method), h.matrix(), norm, &bopts).map_err(lib)?;
        *out = EvlcpBound {
            value: r.value,
            rigorous: r.rigor == Rigor::Rigorous,
            evaluations: r.evaluations,
            objective_evaluations: r.objective_evaluations,
        };
        Ok(())
    })
}

/// Solves the instance into `x` (length `n`). Non-positive `tol` and zero
/// `maxit` select the defaults.
///
/// # Safety
/// `inst` is a live handle and `x` points to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn evlcp_solve(
    inst: *const EvlcpInstance,
    tol: f64,
    maxit: usize,
    x: *mut f64,
    n: usize,
) -> EvlcpStatus {
    guard(|| {
        let h = handle(inst)?;
        if x.is_null() {
            return Err(null("x"));
        }
        if n != h.n() {
            return Err((EvlcpStatus::BufferSize, format!("x has length {n}, instance has n = {}", h.n())));
        }
        let mut opts = SolveOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        if maxit > 0 {
            opts.maxit = maxit;
        }
        let s = solver::solve(h, &opts).map_err(lib)?;
        ptr::copy_nonoverlapping(s.x.as_ptr(), x, n);
        Ok(())
    })
}

/// Writes `r(x) = min_j (A_j x + q_j)` into `r`.
///
/// # Safety
/// `inst` is a live handle, `x` points to `n` readable doubles and `r` to
/// `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn evlcp_residual(
    inst: *const EvlcpInstance,
    x: *const f64,
    r: *mut f64,
    n: usize,
) -> EvlcpStatus {
    guard(|| {
        let h = handle(inst)?;
        if x.is_null() || r.is_null() {
            return Err(null("vector"));
        }
        if n != h.n() {
            return Err((EvlcpStatus::BufferSize, format!("vectors have length {n}, instance has n = {}", h.n())));
        }
        let res = h.residual(std::slice::from_raw_parts(x, n)).map_err(lib)?;
        ptr::copy_nonoverlapping(res.as_ptr(), r, n);
        Ok(())
    })
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn evlcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn evlcp_status_name(status: EvlcpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        EvlcpStatus::Ok => c"ok",
        EvlcpStatus::NullPointer => c"null pointer",
        EvlcpStatus::InvalidInput => c"invalid input",
        EvlcpStatus::Precondition => c"precondition violated",
        EvlcpStatus::Budget => c"budget exceeded",
        EvlcpStatus::NoSolution => c"no solution",
        EvlcpStatus::NotConverged => c"not converged",
        EvlcpStatus::SingularJacobian => c"singular Newton matrix",
        EvlcpStatus::Numerical => c"numerical failure",
        EvlcpStatus::Overflow => c"overflow",
        EvlcpStatus::BufferSize => c"buffer size mismatch",
        EvlcpStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version, e.g. `"0.1.0"`.
#[no_mangle]
pub extern "C" fn evlcp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has no interior nul"),
    };
    VERSION.as_ptr()
}
