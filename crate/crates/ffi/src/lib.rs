//! C ABI for `opgeo`.
//!
//! Matrices cross the boundary as opaque `OpgeoMatrix` handles built from
//! row-major real and imaginary arrays. Every fallible call returns an
//! `OpgeoStatus`; on failure `opgeo_last_error` describes the problem. Strings
//! returned by the library must be released with `opgeo_string_free`, handles
//! with `opgeo_matrix_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use opgeo::experiments::{bound_constant, run_suite, TrialConfig};
use opgeo::manifolds::{polar_dist, polar_geodesic, spd_dist, spd_geodesic, unitary_dist, GroupPoint};
use opgeo::matfun::{matrix_exp, polar_decompose, schatten_norm, CMatrix, SpdMatrix, UnitaryMatrix};
use opgeo::GeoError;

/// Result codes. `OPGEO_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpgeoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotHermitian = 3,
    NotPositiveDefinite = 4,
    NotUnitary = 5,
    Singular = 6,
    BranchCut = 7,
    InvalidP = 8,
    OddDimension = 9,
    DegenerateBasis = 10,
    NotInSubgroup = 11,
    DimensionMismatch = 12,
    NonFinite = 13,
    ConfigInvalid = 14,
    UnknownSuite = 15,
    Parse = 16,
    Io = 17,
    Panic = 18,
}

impl From<&GeoError> for OpgeoStatus {
    fn from(e: &GeoError) -> Self {
        match e {
            GeoError::NotHermitian { .. } => OpgeoStatus::NotHermitian,
            GeoError::NotPositiveDefinite { .. } => OpgeoStatus::NotPositiveDefinite,
            GeoError::NotUnitary { .. } => OpgeoStatus::NotUnitary,
            GeoError::Singular { .. } => OpgeoStatus::Singular,
            GeoError::BranchCut { .. } => OpgeoStatus::BranchCut,
            GeoError::InvalidP(_) => OpgeoStatus::InvalidP,
            GeoError::OddDimension(_) => OpgeoStatus::OddDimension,
            GeoError::DegenerateBasis(_) => OpgeoStatus::DegenerateBasis,
            GeoError::NotInSubgroup { .. } => OpgeoStatus::NotInSubgroup,
            GeoError::DimensionMismatch { .. } => OpgeoStatus::DimensionMismatch,
            GeoError::NonFinite => OpgeoStatus::NonFinite,
            GeoError::ConfigInvalid(_) => OpgeoStatus::ConfigInvalid,
            GeoError::UnknownSuite(_) => OpgeoStatus::UnknownSuite,
            GeoError::Parse(_) => OpgeoStatus::Parse,
            GeoError::Io(_) => OpgeoStatus::Io,
        }
    }
}

/// Opaque square complex matrix.
pub struct OpgeoMatrix {
    inner: CMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Geo(GeoError),
}

impl From<GeoError> for Fail {
    fn from(e: GeoError) -> Self {
        Fail::Geo(e)
    }
}

type FfiResult<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> OpgeoStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpgeoStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            OpgeoStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            OpgeoStatus::InvalidArgument
        }
        Ok(Err(Fail::Geo(e))) => {
            set_error(e.to_string());
            OpgeoStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic");
            OpgeoStatus::Panic
        }
    }
}

unsafe fn handle<'a>(m: *const OpgeoMatrix, what: &'static str) -> FfiResult<&'a CMatrix> {
    m.as_ref().map(|m| &m.inner).ok_or(Fail::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn c_str<'a>(s: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

fn boxed(x: CMatrix) -> *mut OpgeoMatrix {
    Box::into_raw(Box::new(OpgeoMatrix { inner: x }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opgeo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread (empty after success).
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn opgeo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an `n x n` matrix from row-major arrays of length `n * n`.
/// `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `n * n` readable doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut OpgeoMatrix,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if re.is_null() {
            return Err(Fail::Null("re"));
        }
        if n == 0 {
            return Err(Fail::Arg("matrix size must be positive".into()));
        }
        let len = n.checked_mul(n).ok_or_else(|| Fail::Arg("matrix size overflows".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
        let x = CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i * n + j], im.map_or(0.0, |v| v[i * n + j])));
        if !opgeo::matfun::is_finite(&x) {
            return Err(GeoError::NonFinite.into());
        }
        *out = boxed(x);
        Ok(())
    })
}

/// Loads a matrix from a JSON or CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_load(path: *const c_char, out: *mut *mut OpgeoMatrix) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        *out = boxed(opgeo::io::read_matrix(std::path::Path::new(path))?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_free(m: *mut OpgeoMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Side length of the matrix, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_dim(m: *const OpgeoMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// Copies the entries into row-major arrays of length `n * n`. Either output
/// may be null to skip it.
///
/// # Safety
/// `m` must be a live handle; non-null outputs must hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_read(m: *const OpgeoMatrix, re: *mut f64, im: *mut f64) -> OpgeoStatus {
    guard(|| {
        let x = handle(m, "m")?;
        let n = x.nrows();
        for i in 0..n {
            for j in 0..n {
                let z = x[(i, j)];
                if !re.is_null() {
                    *re.add(i * n + j) = z.re;
                }
                if !im.is_null() {
                    *im.add(i * n + j) = z.im;
                }
            }
        }
        Ok(())
    })
}

/// Positive-cone distance between positive definite matrices.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_spd_distance(
    p: *const OpgeoMatrix,
    q: *const OpgeoMatrix,
    out: *mut f64,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let a = SpdMatrix::new(handle(p, "p")?.clone())?;
        let b = SpdMatrix::new(handle(q, "q")?.clone())?;
        *out = spd_dist(&a, &b)?;
        Ok(())
    })
}

/// Bi-invariant distance between unitary matrices.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_unitary_distance(
    u: *const OpgeoMatrix,
    w: *const OpgeoMatrix,
    out: *mut f64,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let a = UnitaryMatrix::new(handle(u, "u")?.clone())?;
        let b = UnitaryMatrix::new(handle(w, "w")?.clone())?;
        *out = unitary_dist(&a, &b)?;
        Ok(())
    })
}

/// Polar product distance between invertible matrices.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_polar_distance(
    p: *const OpgeoMatrix,
    q: *const OpgeoMatrix,
    out: *mut f64,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let a = GroupPoint::new(handle(p, "p")?.clone())?;
        let b = GroupPoint::new(handle(q, "q")?.clone())?;
        *out = polar_dist(&a, &b)?;
        Ok(())
    })
}

/// Constant `c(p, q)` of the left-invariant length bound.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_bound_constant(
    p: *const OpgeoMatrix,
    q: *const OpgeoMatrix,
    out: *mut f64,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let a = GroupPoint::new(handle(p, "p")?.clone())?;
        let b = GroupPoint::new(handle(q, "q")?.clone())?;
        *out = bound_constant(&a, &b)?;
        Ok(())
    })
}

/// Schatten norm; pass `INFINITY` for the operator norm.
///
/// # Safety
/// `x` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_schatten_norm(x: *const OpgeoMatrix, p: f64, out: *mut f64) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = schatten_norm(handle(x, "x")?, p)?;
        Ok(())
    })
}

/// Matrix exponential.
///
/// # Safety
/// `x` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_matrix_exp(x: *const OpgeoMatrix, out: *mut *mut OpgeoMatrix) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let x = handle(x, "x")?;
        if !opgeo::matfun::is_finite(x) {
            return Err(GeoError::NonFinite.into());
        }
        *out = boxed(matrix_exp(x));
        Ok(())
    })
}

/// Polar decomposition `g = u p` into new handles.
///
/// # Safety
/// `g` must be live and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_polar_decompose(
    g: *const OpgeoMatrix,
    u_out: *mut *mut OpgeoMatrix,
    p_out: *mut *mut OpgeoMatrix,
) -> OpgeoStatus {
    guard(|| {
        let u_out = out_ref(u_out, "u_out")?;
        let p_out = out_ref(p_out, "p_out")?;
        *u_out = ptr::null_mut();
        *p_out = ptr::null_mut();
        let (u, p) = polar_decompose(handle(g, "g")?)?;
        *u_out = boxed(u.into_matrix());
        *p_out = boxed(p.into_matrix());
        Ok(())
    })
}

/// Point at time `t` on the positive-cone geodesic from `p` to `q`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_spd_geodesic(
    p: *const OpgeoMatrix,
    q: *const OpgeoMatrix,
    t: f64,
    out: *mut *mut OpgeoMatrix,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if !t.is_finite() {
            return Err(Fail::Arg("t must be finite".into()));
        }
        let a = SpdMatrix::new(handle(p, "p")?.clone())?;
        let b = SpdMatrix::new(handle(q, "q")?.clone())?;
        *out = boxed(spd_geodesic(&a, &b, t)?.into_matrix());
        Ok(())
    })
}

/// Point at time `t` on the polar product geodesic from `p` to `q`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_polar_geodesic(
    p: *const OpgeoMatrix,
    q: *const OpgeoMatrix,
    t: f64,
    out: *mut *mut OpgeoMatrix,
) -> OpgeoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if !t.is_finite() {
            return Err(Fail::Arg("t must be finite".into()));
        }
        let a = GroupPoint::new(handle(p, "p")?.clone())?;
        let b = GroupPoint::new(handle(q, "q")?.clone())?;
        *out = boxed(polar_geodesic(&a, &b, t)?.matrix().clone());
        Ok(())
    })
}

/// Runs a verification suite. `config_json` may be null for the defaults;
/// otherwise it is a JSON object with the same fields as the CLI config file.
/// On success `*report_json` receives the JSON report (free it with
/// `opgeo_string_free`) and `*passed` whether every trial passed.
///
/// # Safety
/// `suite` must be a NUL-terminated string, `config_json` null or one, and the
/// outputs writable.
#[no_mangle]
pub unsafe extern "C" fn opgeo_run_suite(
    suite: *const c_char,
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    passed: *mut bool,
) -> OpgeoStatus {
    guard(|| {
        let report_json = out_ref(report_json, "report_json")?;
        *report_json = ptr::null_mut();
        let passed = out_ref(passed, "passed")?;
        let suite = c_str(suite, "suite")?;
        let cfg: TrialConfig = if config_json.is_null() {
            TrialConfig::default()
        } else {
            serde_json::from_str(c_str(config_json, "config_json")?)
                .map_err(|e| GeoError::ConfigInvalid(e.to_string()))?
        };
        let report = run_suite(suite, &cfg)?;
        *passed = report.pass;
        *report_json = CString::new(report.to_json()).map_err(|_| Fail::Arg("report contains NUL".into()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgeo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
