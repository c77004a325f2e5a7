//! C ABI over `tsallis-geometry`.
//!
//! Every fallible call returns a [`TgStatus`] and writes its result through
//! an out-pointer. On failure the message is kept per thread and read back
//! with [`tg_last_error_message`]. Metrics, trees and CAT reports cross the
//! boundary as opaque handles owned by the caller and released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tsallis_geometry::catk::{self, CatReport, TreeSpace, Verdict, WarpedHyperbolicSpace};
use tsallis_geometry::entropy::{tsallis_discrete, DiscreteDistribution};
use tsallis_geometry::geometry::{
    deformed_distance, exponential_distance, geodesic_distance_numeric, sectional_curvature_numeric, MetricPoint,
    WarpedMetric,
};
use tsallis_geometry::qcalc::QParam;
use tsallis_geometry::superstat::{q_exponential, SuperstatParams};
use tsallis_geometry::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Range = 3,
    Singularity = 4,
    Division = 5,
    Shape = 6,
    Capability = 7,
    Unsupported = 8,
    Validation = 9,
    Numerical = 10,
    Parse = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for TgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => TgStatus::Domain,
            Error::Range(_) => TgStatus::Range,
            Error::Singularity(_) => TgStatus::Singularity,
            Error::Division => TgStatus::Division,
            Error::Shape { .. } => TgStatus::Shape,
            Error::Capability(_) => TgStatus::Capability,
            Error::Unsupported(_) => TgStatus::Unsupported,
            Error::Validation(_) => TgStatus::Validation,
            Error::Numerical { .. } => TgStatus::Numerical,
            Error::Parse(_) => TgStatus::Parse,
            Error::Io(_) => TgStatus::Io,
        }
    }
}

/// Outcome of a CAT(k) test.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgVerdict {
    Pass = 0,
    Fail = 1,
}

/// Opaque warped-product metric.
pub struct TgMetric(WarpedMetric);

/// Opaque metric tree.
pub struct TgTree(TreeSpace);

/// Opaque CAT(k) report.
pub struct TgCatReport(CatReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn fail(status: TgStatus, msg: impl Into<String>) -> TgStatus {
    set_last_error(msg.into());
    status
}

/// Run `f`, turning errors and panics into a status.
fn guard<F>(f: F) -> TgStatus
where
    F: FnOnce() -> Result<(), TgStatus>,
{
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TgStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(TgStatus::Panic, msg)
        }
    }
}

fn check<T>(r: tsallis_geometry::Result<T>) -> Result<T, TgStatus> {
    r.map_err(|e| fail(TgStatus::from(&e), e.to_string()))
}

fn write<T>(out: *mut T, value: T) -> Result<(), TgStatus> {
    if out.is_null() {
        return Err(fail(TgStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], TgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(TgStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: caller guarantees `len` readable values at `ptr`.
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, TgStatus> {
    // SAFETY: caller passes null or a live handle from this library.
    unsafe { ptr.as_ref() }.ok_or_else(|| fail(TgStatus::NullPointer, format!("{what} handle is null")))
}

fn qparam(q: f64) -> Result<QParam, TgStatus> {
    check(QParam::new(q))
}

fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), TgStatus> {
    if out.is_null() {
        return Err(fail(TgStatus::NullPointer, "output pointer is null"));
    }
    write(out, Box::into_raw(Box::new(value)))
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn tg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tg_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// `tau_q(x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_tau(q: f64, x: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        write(out, check(p.tau(x))?.value())
    })
}

/// Inverse of `tau_q`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_tau_inv(q: f64, u: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        write(out, check(p.tau_inv_value(u))?)
    })
}

/// Deformed sum `u + v + (1 - q) u v`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_q_add(q: f64, u: f64, v: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        let (u, v) = (check(p.element(u))?, check(p.element(v))?);
        write(out, check(p.q_add_deformed(u, v))?.value())
    })
}

/// Deformed product `tau_q(tau_q^{-1}(u) tau_q^{-1}(v))`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_q_mul(q: f64, u: f64, v: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        let (u, v) = (check(p.element(u))?, check(p.element(v))?);
        write(out, check(p.q_mul(u, v))?.value())
    })
}

/// Deformed distance `tau_q(d)` for `d >= 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_deformed_distance(q: f64, d: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        write(out, check(deformed_distance(p, d))?)
    })
}

/// Tsallis entropy of `len` probabilities.
///
/// # Safety
/// `probs` must point to `len` readable values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_tsallis_entropy(q: f64, probs: *const f64, len: usize, out: *mut f64) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        // SAFETY: forwarded from the caller.
        let probs = unsafe { slice(probs, len, "probabilities") }?;
        let dist = check(DiscreteDistribution::new(probs.to_vec()))?;
        write(out, check(tsallis_discrete(p, &dist))?)
    })
}

/// q-exponential `[1 + (q - 1) beta0 E]^{-1/(q-1)}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_q_exponential(q: f64, beta0: f64, energy: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        let s = check(SuperstatParams::new(q, beta0, energy))?;
        write(out, check(q_exponential(&s))?)
    })
}

/// Closed-form distance under `dx^2 + e^{-2tx} |dy|^2` between two points of
/// dimension `dim`, base coordinate first.
///
/// # Safety
/// `a` and `b` must point to `dim` readable values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_exponential_distance(
    t: f64,
    a: *const f64,
    b: *const f64,
    dim: usize,
    out: *mut f64,
) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let (a, b) = unsafe { (slice(a, dim, "a")?, slice(b, dim, "b")?) };
        if dim < 2 {
            return Err(fail(TgStatus::Shape, format!("points need dimension >= 2, got {dim}")));
        }
        write(out, exponential_distance(t, a, b))
    })
}

/// Metric `dx^2 + e^{-2tx} |dy|^2` with an `n`-dimensional fiber.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_exponential(t: f64, n: usize, out: *mut *mut TgMetric) -> TgStatus {
    guard(|| boxed(out, TgMetric(check(WarpedMetric::exponential(t, n))?)))
}

/// Metric induced by `q`: the exponential metric with `t = ln(2 - q)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_from_q(q: f64, n: usize, out: *mut *mut TgMetric) -> TgStatus {
    guard(|| {
        let p = qparam(q)?;
        boxed(out, TgMetric(check(WarpedMetric::from_q(p, n))?))
    })
}

/// Doubly warped metric with one exponential warp per fiber coordinate.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_double_from_q(q1: f64, q2: f64, out: *mut *mut TgMetric) -> TgStatus {
    guard(|| {
        let (p1, p2) = (qparam(q1)?, qparam(q2)?);
        boxed(out, TgMetric(check(WarpedMetric::double_from_q(p1, p2))?))
    })
}

/// Release a metric. Null is ignored.
///
/// # Safety
/// `m` must be null or a metric from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_free(m: *mut TgMetric) {
    if !m.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Manifold dimension of a metric, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live metric.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_dim(m: *const TgMetric) -> usize {
    // SAFETY: forwarded from the caller.
    unsafe { m.as_ref() }.map_or(0, |m| m.0.dim())
}

/// Analytic sectional curvature of the coordinate plane `(i, j)` at base
/// coordinate `x`.
///
/// # Safety
/// `m` must be a live metric and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_curvature(
    m: *const TgMetric,
    x: f64,
    i: usize,
    j: usize,
    out: *mut f64,
) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let m = unsafe { handle(m, "metric") }?;
        let k = check(m.0.analytic_curvature())?;
        write(out, check(k.at(x, (i, j)))?)
    })
}

/// Finite-difference sectional curvature of the coordinate plane `(i, j)`
/// at the point `at` of dimension `dim`.
///
/// # Safety
/// `m` must be a live metric, `at` point to `dim` readable values and `out`
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_curvature_numeric(
    m: *const TgMetric,
    at: *const f64,
    dim: usize,
    i: usize,
    j: usize,
    step: f64,
    out: *mut f64,
) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let (m, at) = unsafe { (handle(m, "metric")?, slice(at, dim, "point")?) };
        if i >= dim || j >= dim {
            return Err(fail(TgStatus::Domain, format!("plane ({i}, {j}) is out of range for dimension {dim}")));
        }
        let axis = |a: usize| (0..dim).map(|b| if a == b { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let (u, v) = (axis(i), axis(j));
        let point = MetricPoint::new(at.to_vec());
        write(out, check(sectional_curvature_numeric(&m.0, &point, (&u, &v), step))?)
    })
}

/// Geodesic distance by shooting between two points of dimension `dim`.
///
/// # Safety
/// `m` must be a live metric, `a` and `b` point to `dim` readable values and
/// `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_metric_geodesic_distance(
    m: *const TgMetric,
    a: *const f64,
    b: *const f64,
    dim: usize,
    tol: f64,
    out: *mut f64,
) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let (m, a, b) = unsafe { (handle(m, "metric")?, slice(a, dim, "a")?, slice(b, dim, "b")?) };
        let (a, b) = (MetricPoint::new(a.to_vec()), MetricPoint::new(b.to_vec()));
        write(out, check(geodesic_distance_numeric(&m.0, &a, &b, tol))?)
    })
}

/// Build a metric tree from a nul-terminated JSON adjacency list
/// `[[[neighbor, weight], ...], ...]`.
///
/// # Safety
/// `json` must be a valid nul-terminated string and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_tree_from_json(json: *const c_char, out: *mut *mut TgTree) -> TgStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(TgStatus::NullPointer, "tree json is null"));
        }
        // SAFETY: caller guarantees a nul-terminated string.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| fail(TgStatus::Parse, format!("tree json is not utf-8: {e}")))?;
        boxed(out, TgTree(check(TreeSpace::from_json(text))?))
    })
}

/// Release a tree. Null is ignored.
///
/// # Safety
/// `t` must be null or a tree from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tg_tree_free(t: *mut TgTree) {
    if !t.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Distance between two vertices of a tree.
///
/// # Safety
/// `t` must be a live tree and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_tree_vertex_distance(t: *const TgTree, u: usize, v: usize, out: *mut f64) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let t = unsafe { handle(t, "tree") }?;
        let n = t.0.vertex_count();
        if u >= n || v >= n {
            return Err(fail(TgStatus::Domain, format!("vertex out of range for {n} vertices")));
        }
        write(out, t.0.vertex_distance(u, v))
    })
}

/// CAT(k) test of the exponential warped product `dx^2 + e^{-2tx} |dy|^2`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_cat_test_warped(
    t: f64,
    fiber_dim: usize,
    k: f64,
    triangles: usize,
    samples_per_side: usize,
    seed: u64,
    tol: f64,
    out: *mut *mut TgCatReport,
) -> TgStatus {
    guard(|| {
        let space = check(WarpedHyperbolicSpace::new(t, fiber_dim))?;
        let report = check(catk::cat_test(&space, k, triangles, samples_per_side, seed, tol))?;
        boxed(out, TgCatReport(report))
    })
}

/// CAT(k) test of `R^dim` with the `l^p` norm.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_cat_test_lp(
    dim: usize,
    p: f64,
    k: f64,
    triangles: usize,
    samples_per_side: usize,
    seed: u64,
    tol: f64,
    out: *mut *mut TgCatReport,
) -> TgStatus {
    guard(|| {
        let space = check(catk::lp_space(dim, p))?;
        let report = check(catk::cat_test(&space, k, triangles, samples_per_side, seed, tol))?;
        boxed(out, TgCatReport(report))
    })
}

/// CAT(k) test of a metric tree.
///
/// # Safety
/// `tree` must be a live tree and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_cat_test_tree(
    tree: *const TgTree,
    k: f64,
    triangles: usize,
    samples_per_side: usize,
    seed: u64,
    tol: f64,
    out: *mut *mut TgCatReport,
) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let tree = unsafe { handle(tree, "tree") }?;
        let report = check(catk::cat_test(&tree.0, k, triangles, samples_per_side, seed, tol))?;
        boxed(out, TgCatReport(report))
    })
}

/// Release a report. Null is ignored.
///
/// # Safety
/// `r` must be null or a report from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tg_report_free(r: *mut TgCatReport) {
    if !r.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Verdict of a report.
///
/// # Safety
/// `r` must be a live report and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_report_verdict(r: *const TgCatReport, out: *mut TgVerdict) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let r = unsafe { handle(r, "report") }?;
        let v = match r.0.verdict {
            Verdict::Pass => TgVerdict::Pass,
            Verdict::Fail => TgVerdict::Fail,
        };
        write(out, v)
    })
}

/// Largest comparison excess `d_X - d_M` seen by a report.
///
/// # Safety
/// `r` must be a live report and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_report_worst_margin(r: *const TgCatReport, out: *mut f64) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let r = unsafe { handle(r, "report") }?;
        write(out, r.0.worst_margin)
    })
}

/// Report as JSON. Release the string with [`tg_string_free`].
///
/// # Safety
/// `r` must be a live report and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_report_json(r: *const TgCatReport, out: *mut *mut c_char) -> TgStatus {
    guard(|| {
        // SAFETY: forwarded from the caller.
        let r = unsafe { handle(r, "report") }?;
        let text = serde_json::to_string(&r.0).map_err(|e| fail(TgStatus::Io, e.to_string()))?;
        let text = CString::new(text).map_err(|e| fail(TgStatus::Io, e.to_string()))?;
        write(out, text.into_raw())
    })
}
