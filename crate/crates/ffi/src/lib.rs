//! C ABI over `cpwl-core`.
//!
//! Networks are opaque handles created from JSON and released with
//! [`cpwl_network_free`]. Every fallible call returns a [`CpwlStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`cpwl_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use cpwl_core::bounds::beta;
use cpwl_core::geometry::{count_report, enumerate_regions, Domain, EnumerationConfig};
use cpwl_core::paths::{count_knots, PolygonalPath};
use cpwl_core::{CpwlError, NetworkSpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpwlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidNetwork = 3,
    InvalidParameter = 4,
    DimensionMismatch = 5,
    Unsupported = 6,
    BudgetExceeded = 7,
    BufferTooSmall = 8,
    Internal = 9,
    Panic = 10,
}

/// Opaque network handle.
pub struct CpwlNetwork {
    spec: NetworkSpec,
}

/// Region counts of a network on a domain.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CpwlCounts {
    pub cells: usize,
    pub distinct_pieces: usize,
    pub connected_pieces: usize,
}

/// Knot count and density along a path.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpwlKnots {
    pub count: usize,
    pub length: f64,
    pub density: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &CpwlError) -> CpwlStatus {
    match err {
        CpwlError::InvalidNetwork(_) | CpwlError::Json(_) => CpwlStatus::InvalidNetwork,
        CpwlError::InvalidParameter(_) | CpwlError::Construction(_) => CpwlStatus::InvalidParameter,
        CpwlError::DimensionMismatch { .. } => CpwlStatus::DimensionMismatch,
        CpwlError::Unsupported(_) | CpwlError::DimensionTooLarge { .. } => CpwlStatus::Unsupported,
        CpwlError::BudgetExceeded { .. } => CpwlStatus::BudgetExceeded,
        CpwlError::Lp(_) | CpwlError::Io(_) => CpwlStatus::Internal,
    }
}

struct Failure(CpwlStatus, String);

impl From<CpwlError> for Failure {
    fn from(e: CpwlError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CpwlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpwlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CpwlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CpwlStatus::Panic
        }
    }
}

unsafe fn network<'a>(handle: *const CpwlNetwork) -> Result<&'a NetworkSpec, Failure> {
    handle.as_ref().map(|n| &n.spec).ok_or_else(|| null("network"))
}

unsafe fn doubles<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// Copies `text` with a terminating NUL into `buf` when it fits; always
/// returns the required size including the NUL.
unsafe fn write_c_string(text: &str, buf: *mut c_char, len: usize) -> usize {
    let needed = text.len() + 1;
    if !buf.is_null() && len >= needed {
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
    }
    needed
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpwl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` and returns the
/// size needed including the terminating NUL. Pass a null `buf` to query the
/// size.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cpwl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| write_c_string(&e.borrow(), buf, len))
}

/// Parses a network from NUL-terminated JSON. On success `*out` owns a new
/// handle.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpwl_network_from_json(json: *const c_char, out: *mut *mut CpwlNetwork) -> CpwlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(CpwlStatus::InvalidUtf8, e.to_string()))?;
        let spec = NetworkSpec::from_json(text)?;
        *out = Box::into_raw(Box::new(CpwlNetwork { spec }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpwl_network_free(net: *mut CpwlNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Writes the input and output dimensions.
///
/// # Safety
/// `net` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cpwl_network_dims(
    net: *const CpwlNetwork,
    input_dim: *mut usize,
    output_dim: *mut usize,
) -> CpwlStatus {
    guard(|| {
        let spec = network(net)?;
        if input_dim.is_null() || output_dim.is_null() {
            return Err(null("output"));
        }
        *input_dim = spec.input_dim;
        *output_dim = spec.output_dim();
        Ok(())
    })
}

/// Evaluates the network at `x` (length `x_len`) into `y` (length `y_len`).
///
/// # Safety
/// `x` and `y` must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn cpwl_network_eval(
    net: *const CpwlNetwork,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> CpwlStatus {
    guard(|| {
        let spec = network(net)?;
        let input = doubles(x, x_len, "x")?;
        let value = spec.eval(input)?;
        if y.is_null() {
            return Err(null("y"));
        }
        if y_len < value.len() {
            return Err(Failure(
                CpwlStatus::BufferTooSmall,
                format!("output needs {} values", value.len()),
            ));
        }
        ptr::copy_nonoverlapping(value.as_ptr(), y, value.len());
        Ok(())
    })
}

/// Exact region counts on the box `[lo, hi]` (each of length `dim`), or on
/// all of space when both are null.
///
/// # Safety
/// `lo` and `hi` must be null or valid for `dim` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cpwl_count_regions(
    net: *const CpwlNetwork,
    lo: *const f64,
    hi: *const f64,
    dim: usize,
    out: *mut CpwlCounts,
) -> CpwlStatus {
    guard(|| {
        let spec = network(net)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let domain = if lo.is_null() && hi.is_null() {
            Domain::default()
        } else {
            Domain::Box {
                lo: doubles(lo, dim, "lo")?.to_vec(),
                hi: doubles(hi, dim, "hi")?.to_vec(),
            }
        };
        let cfg = EnumerationConfig::default();
        let rs = enumerate_regions(spec, &domain, &cfg)?;
        let report = count_report(&rs, spec, &cfg)?;
        *out = CpwlCounts {
            cells: report.cell_count,
            distinct_pieces: report.distinct_piece_count,
            connected_pieces: report.connected_piece_count,
        };
        Ok(())
    })
}

/// Knots along the polygonal path whose `n_vertices` vertices are stored
/// row-major in `vertices`, each of the network's input dimension.
///
/// # Safety
/// `vertices` must be valid for `n_vertices * input_dim` values; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn cpwl_count_knots(
    net: *const CpwlNetwork,
    vertices: *const f64,
    n_vertices: usize,
    out: *mut CpwlKnots,
) -> CpwlStatus {
    guard(|| {
        let spec = network(net)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = spec.input_dim;
        let flat = doubles(vertices, n_vertices * d, "vertices")?;
        let path = PolygonalPath::new(flat.chunks(d).map(<[f64]>::to_vec).collect())?;
        let report = count_knots(spec, &path)?;
        *out = CpwlKnots {
            count: report.count,
            length: report.length,
            density: report.density,
        };
        Ok(())
    })
}

/// Maximal cell count of an arrangement of `n` convex partitions of `R^d`
/// with `sizes[i]` regions each, written as a decimal string into `buf`.
/// `*needed` receives the buffer size required including the NUL.
///
/// # Safety
/// `sizes` must be valid for `n` values, `buf` null or valid for `len`
/// bytes, and `needed` valid.
#[no_mangle]
pub unsafe extern "C" fn cpwl_beta(
    d: usize,
    sizes: *const u64,
    n: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CpwlStatus {
    guard(|| {
        if needed.is_null() {
            return Err(null("needed"));
        }
        let ns: &[u64] = if n == 0 {
            &[]
        } else if sizes.is_null() {
            return Err(null("sizes"));
        } else {
            slice::from_raw_parts(sizes, n)
        };
        if d == 0 || ns.contains(&0) {
            return Err(Failure(
                CpwlStatus::InvalidParameter,
                "dimension and partition sizes must be positive".into(),
            ));
        }
        let text = beta(d, ns).to_string();
        *needed = write_c_string(&text, buf, len);
        if buf.is_null() || len < *needed {
            return Err(Failure(CpwlStatus::BufferTooSmall, format!("need {} bytes", *needed)));
        }
        Ok(())
    })
}
