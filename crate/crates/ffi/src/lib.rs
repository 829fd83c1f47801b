//! C ABI over `pdm-core`.
//!
//! Parameter sets and surfaces are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`PdmStatus`]; on failure
//! [`pdm_last_error_message`] describes the error for the calling thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pdm_core::demand::{demand_moments, PdmParams};
use pdm_core::io;
use pdm_core::solver::{draw_samples, solve, Scenario};
use pdm_core::stats::exact_expected_profit;
use pdm_core::surface::{refine_surface, Domain, Surface};
use pdm_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Internal = 5,
    Panic = 6,
}

/// Parameter set handle.
pub struct PdmParamsHandle(PdmParams);

/// Surface handle.
pub struct PdmSurfaceHandle(Surface);

/// Economic instance; see `pdm_scenario_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdmScenario {
    pub cost: f64,
    pub salvage: f64,
    /// Allowed stock-out probability in (0, 1].
    pub theta: f64,
    pub p_min: i64,
    pub p_max: i64,
    pub v_max: f64,
    pub samples: usize,
    pub seed: u64,
    pub ad_cost_scale: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PdmSolution {
    pub p_star: i64,
    pub v_star: f64,
    pub o_star: f64,
    pub objective: f64,
}

impl From<PdmScenario> for Scenario {
    fn from(s: PdmScenario) -> Self {
        Scenario {
            cost: s.cost,
            salvage: s.salvage,
            theta: s.theta,
            p_min: s.p_min,
            p_max: s.p_max,
            v_max: s.v_max,
            samples: s.samples,
            seed: s.seed,
            ad_cost_scale: s.ad_cost_scale,
        }
    }
}

impl From<Scenario> for PdmScenario {
    fn from(s: Scenario) -> Self {
        PdmScenario {
            cost: s.cost,
            salvage: s.salvage,
            theta: s.theta,
            p_min: s.p_min,
            p_max: s.p_max,
            v_max: s.v_max,
            samples: s.samples,
            seed: s.seed,
            ad_cost_scale: s.ad_cost_scale,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PdmStatus {
    match err.exit_code() {
        3 => PdmStatus::Parse,
        5 => PdmStatus::Internal,
        _ => PdmStatus::Domain,
    }
}

struct Failure(PdmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PdmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PdmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PdmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PdmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(PdmStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn pdm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bundled room air conditioner parameter set. Never null.
#[no_mangle]
pub extern "C" fn pdm_params_default() -> *mut PdmParamsHandle {
    Box::into_raw(Box::new(PdmParamsHandle(PdmParams::bundled())))
}

/// Load a parameter table (CSV) into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdm_params_load(
    path: *const c_char,
    out: *mut *mut PdmParamsHandle,
) -> PdmStatus {
    guard(|| {
        let params = io::load_params(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(PdmParamsHandle(params))), "out")
    })
}

/// # Safety
/// `params` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdm_params_free(params: *mut PdmParamsHandle) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Exact demand mean and standard deviation at price `p` and advertising `v`.
///
/// # Safety
/// Pointers must be valid; `params` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_demand_moments(
    params: *const PdmParamsHandle,
    p: f64,
    v: f64,
    mu: *mut f64,
    sigma: *mut f64,
) -> PdmStatus {
    guard(|| {
        let d = demand_moments(p, v, &deref(params, "params")?.0)?;
        write_out(mu, d.mu, "mu")?;
        write_out(sigma, d.sigma, "sigma")
    })
}

/// Refine a surface over `[p_min, p_max] x [0, v_max]` within `bits` code bits.
///
/// # Safety
/// Pointers must be valid; `params` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_build(
    params: *const PdmParamsHandle,
    p_min: f64,
    p_max: f64,
    v_max: f64,
    bits: u32,
    out: *mut *mut PdmSurfaceHandle,
) -> PdmStatus {
    guard(|| {
        let domain = Domain {
            p_min,
            p_max,
            v_max,
        };
        let surface = refine_surface(&deref(params, "params")?.0, domain, bits)?;
        write_out(
            out,
            Box::into_raw(Box::new(PdmSurfaceHandle(surface))),
            "out",
        )
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_load(
    path: *const c_char,
    out: *mut *mut PdmSurfaceHandle,
) -> PdmStatus {
    guard(|| {
        let surface = io::load_surface(path_arg(path)?)?;
        write_out(
            out,
            Box::into_raw(Box::new(PdmSurfaceHandle(surface))),
            "out",
        )
    })
}

/// # Safety
/// `surface` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_save(
    surface: *const PdmSurfaceHandle,
    path: *const c_char,
) -> PdmStatus {
    guard(|| {
        let s = deref(surface, "surface")?;
        io::save_surface(&s.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of triangles, or 0 for a null handle.
///
/// # Safety
/// `surface` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_triangle_count(surface: *const PdmSurfaceHandle) -> usize {
    surface.as_ref().map_or(0, |s| s.0.triangles.len())
}

/// Interpolated mean and standard deviation at `(p, v)`.
///
/// # Safety
/// Pointers must be valid; `surface` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_eval(
    surface: *const PdmSurfaceHandle,
    p: f64,
    v: f64,
    mu: *mut f64,
    sigma: *mut f64,
) -> PdmStatus {
    guard(|| {
        let (m, s) = deref(surface, "surface")?.0.eval(p, v)?;
        write_out(mu, m, "mu")?;
        write_out(sigma, s, "sigma")
    })
}

/// # Safety
/// `surface` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdm_surface_free(surface: *mut PdmSurfaceHandle) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Default bounds and sample settings with salvage at a tenth of `cost`.
#[no_mangle]
pub extern "C" fn pdm_scenario_default(cost: f64, theta: f64) -> PdmScenario {
    Scenario::new(cost, theta).into()
}

/// Solve the sample-average planning problem on `surface`.
///
/// # Safety
/// Pointers must be valid; `surface` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_solve(
    surface: *const PdmSurfaceHandle,
    scenario: *const PdmScenario,
    out: *mut PdmSolution,
) -> PdmStatus {
    guard(|| {
        let surface = &deref(surface, "surface")?.0;
        let scenario: Scenario = (*deref(scenario, "scenario")?).into();
        let sample = draw_samples(scenario.samples, scenario.seed)?;
        let r = solve(surface, &scenario, &sample)?;
        write_out(
            out,
            PdmSolution {
                p_star: r.p_star,
                v_star: r.v_star,
                o_star: r.o_star,
                objective: r.objective,
            },
            "out",
        )
    })
}

/// Expected profit of a decision when demand is normal with the exact moments
/// of `params`.
///
/// # Safety
/// Pointers must be valid; `params` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pdm_expected_profit(
    params: *const PdmParamsHandle,
    scenario: *const PdmScenario,
    p: f64,
    v: f64,
    o: f64,
    out: *mut f64,
) -> PdmStatus {
    guard(|| {
        let params = &deref(params, "params")?.0;
        let scenario: Scenario = (*deref(scenario, "scenario")?).into();
        let d = demand_moments(p, v, params)?;
        write_out(
            out,
            exact_expected_profit(p, v, o, d.mu, d.sigma, &scenario)?,
            "out",
        )
    })
}
