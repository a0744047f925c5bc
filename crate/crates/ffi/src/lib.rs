//! C ABI over the `meanfield` library.
//!
//! Every fallible function returns an [`MfStatus`]; on failure the message is
//! available from [`mf_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use meanfield::discretization::{triangulate, Mesh};
use meanfield::functional::{disk_energy, energy_estimate, CRITICAL_LAMBDA};
use meanfield::greens::{extrapolation_radius, robin_sup, GreenEvaluator, RobinOptions, RobinReport};
use meanfield::{Domain, DomainKind, Error, Point};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDomain = 3,
    OutsideDomain = 4,
    Numerical = 5,
    Mesh = 6,
    Panic = 7,
}

/// A planar domain.
pub struct MfDomain(Domain);

/// A triangulation of a domain.
pub struct MfMesh(Arc<Mesh>);

/// Result of a Robin-function supremum search.
pub struct MfRobinReport(RobinReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> MfStatus {
    match e {
        Error::InvalidDomain(_) | Error::SelfIntersection { .. } => MfStatus::InvalidDomain,
        Error::OutsideDomain { .. } | Error::Singularity { .. } => MfStatus::OutsideDomain,
        Error::Mesh { .. } | Error::Resolution { .. } => MfStatus::Mesh,
        Error::IllConditioned { .. }
        | Error::Accuracy(_)
        | Error::SingularSystem(_)
        | Error::Diverged { .. }
        | Error::Window { .. } => MfStatus::Numerical,
        _ => MfStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (MfStatus, String)>) -> MfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside meanfield");
            MfStatus::Panic
        }
    }
}

fn lib<T>(r: meanfield::Result<T>) -> Result<T, (MfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MfStatus, String) {
    (MfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MfStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), (MfStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Message of the most recent fallible call on this thread if it failed,
/// otherwise null. The pointer stays valid until the next fallible call.
#[no_mangle]
pub extern "C" fn mf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a domain. `kind` is one of `disk`, `ellipse`, `rectangle`, `square`,
/// `polygon` (flattened vertex list) or `fourier` (radial coefficients).
///
/// # Safety
/// `kind` must be a NUL-terminated string, `params` must point to `n_params`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_domain_new(
    kind: *const c_char,
    params: *const f64,
    n_params: usize,
    center_x: f64,
    center_y: f64,
    rotation: f64,
    out: *mut *mut MfDomain,
) -> MfStatus {
    guard(|| {
        if kind.is_null() {
            return Err(null("kind"));
        }
        let kind =
            CStr::from_ptr(kind).to_str().map_err(|_| (MfStatus::InvalidArgument, "kind is not UTF-8".to_string()))?;
        let params = if n_params == 0 {
            &[][..]
        } else if params.is_null() {
            return Err(null("params"));
        } else {
            std::slice::from_raw_parts(params, n_params)
        };
        let k = lib(DomainKind::from_params(kind, params))?;
        let d = lib(Domain::new(k, Point::new(center_x, center_y), rotation))?;
        write(out, Box::into_raw(Box::new(MfDomain(d))))
    })
}

/// # Safety
/// `domain` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_domain_free(domain: *mut MfDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_domain_area(domain: *const MfDomain, out: *mut f64) -> MfStatus {
    guard(|| write(out, deref(domain, "domain")?.0.area()))
}

/// Copy of `domain` scaled about its center to the given area.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_domain_normalize_area(
    domain: *const MfDomain,
    area: f64,
    out: *mut *mut MfDomain,
) -> MfStatus {
    guard(|| {
        let d = lib(deref(domain, "domain")?.0.normalize_area(area))?;
        write(out, Box::into_raw(Box::new(MfDomain(d))))
    })
}

/// Robin function at an interior point.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_robin(domain: *const MfDomain, x: f64, y: f64, out: *mut f64) -> MfStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        let p = Point::new(x, y);
        let g = lib(GreenEvaluator::for_domain(d, p, RobinOptions::default().charges))?;
        write(out, g.robin(extrapolation_radius(d, p)))
    })
}

/// Supremum of the Robin function with default search options.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_robin_sup(domain: *const MfDomain, out: *mut *mut MfRobinReport) -> MfStatus {
    guard(|| {
        let r = lib(robin_sup(&deref(domain, "domain")?.0, &RobinOptions::default()))?;
        write(out, Box::into_raw(Box::new(MfRobinReport(r))))
    })
}

/// # Safety
/// `report` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mf_robin_report_sup(
    report: *const MfRobinReport,
    gamma_sup: *mut f64,
    argmax_x: *mut f64,
    argmax_y: *mut f64,
) -> MfStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        write(gamma_sup, r.gamma_sup)?;
        write(argmax_x, r.argmax.x)?;
        write(argmax_y, r.argmax.y)
    })
}

/// Nonzero when the residual and charge-doubling gates passed.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_robin_report_gates_passed(report: *const MfRobinReport, out: *mut i32) -> MfStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        write(out, i32::from(r.gates_passed(&RobinOptions::default())))
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_robin_report_free(report: *mut MfRobinReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Quasi-uniform triangulation with maximum edge length `h`.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_triangulate(domain: *const MfDomain, h: f64, out: *mut *mut MfMesh) -> MfStatus {
    guard(|| {
        let m = lib(triangulate(&deref(domain, "domain")?.0, h))?;
        write(out, Box::into_raw(Box::new(MfMesh(Arc::new(m)))))
    })
}

/// # Safety
/// `mesh` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mf_mesh_counts(mesh: *const MfMesh, vertices: *mut usize, triangles: *mut usize) -> MfStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        write(vertices, m.vertex_count())?;
        write(triangles, m.triangle_count())
    })
}

/// Copies interleaved vertex coordinates `x0, y0, x1, y1, ...` into `xy`,
/// which must hold `2 * capacity` doubles.
///
/// # Safety
/// `mesh` must be a live handle and `xy` must point to `2 * capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_mesh_vertices(mesh: *const MfMesh, xy: *mut f64, capacity: usize) -> MfStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        if capacity < m.vertex_count() {
            return Err((MfStatus::InvalidArgument, format!("capacity {capacity} < {} vertices", m.vertex_count())));
        }
        if xy.is_null() {
            return Err(null("xy"));
        }
        let dst = std::slice::from_raw_parts_mut(xy, 2 * m.vertex_count());
        for (d, p) in dst.chunks_exact_mut(2).zip(m.vertices()) {
            d[0] = p.x;
            d[1] = p.y;
        }
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_mesh_free(mesh: *mut MfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Upper bound `-1 - 4 pi sup gamma` for the critical infimum; the domain
/// must have area pi.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_energy_estimate(domain: *const MfDomain, out: *mut f64) -> MfStatus {
    guard(|| {
        let e = lib(energy_estimate(&deref(domain, "domain")?.0))?;
        write(out, e.upper)
    })
}

/// Minimal energy of the unit disk at `0 < lambda < 8 pi`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_disk_energy(lambda: f64, out: *mut f64) -> MfStatus {
    guard(|| {
        if !(lambda > 0.0 && lambda < CRITICAL_LAMBDA) {
            return Err((MfStatus::InvalidArgument, format!("lambda {lambda} must lie in (0, 8 pi)")));
        }
        write(out, disk_energy(lambda))
    })
}
