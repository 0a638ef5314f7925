//! C ABI for the channel-flow laboratory: opaque simulation handles, error
//! codes with a thread-local message, and flat-buffer accessors.
//!
//! Every function is safe to call from any single thread per handle; handles
//! must not be shared across threads without external synchronization. All
//! array arguments are row-major with the horizontal index outermost,
//! matching the snapshot layout.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stratlab::lemmas::{fit_power_law, Trajectory};
use stratlab::rearrange::vertical_rearrangement;
use stratlab::scenarios;
use stratlab::transport::{RunConfig, SimState};
use stratlab::{diagnostics, Grid, ScalarField};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    UnknownPreset = 3,
    NumericalError = 4,
    Internal = 5,
}

/// Opaque simulation handle.
pub struct StratSim {
    state: SimState,
    config: RunConfig,
}

/// One row of diagnostics, mirrored as a plain C struct.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StratDiagnostics {
    pub t: f64,
    pub e_p: f64,
    pub e: f64,
    pub k: f64,
    pub u2_l2sq: f64,
    pub u_l2sq: f64,
    pub theta_h: [f64; 5],
    pub gradpsi_hk: f64,
    pub d2e_integrand: f64,
    pub mass: f64,
    pub linf: f64,
    pub bc_drift: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn classify(e: &stratlab::Error) -> StratStatus {
    match e {
        stratlab::Error::UnknownPreset(_) => StratStatus::UnknownPreset,
        stratlab::Error::NonFinite { .. } | stratlab::Error::SingularMode { .. } => {
            StratStatus::NumericalError
        }
        _ => StratStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> StratStatus) -> StratStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            StratStatus::Internal
        }
    }
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stratlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message into `buf` (truncated to `cap` bytes,
/// always NUL-terminated when `cap > 0`). Returns the full message length
/// in bytes, excluding the terminator.
#[no_mangle]
pub unsafe extern "C" fn stratlab_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let borrow = slot.borrow();
        let Some(msg) = borrow.as_ref() else {
            if !buf.is_null() && cap > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Build a simulation from a named preset (see `stratlab presets`).
/// On success `*out` owns the handle; free it with `stratlab_sim_free`.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_from_preset(
    name: *const c_char,
    out: *mut *mut StratSim,
) -> StratStatus {
    guarded(|| {
        if name.is_null() || out.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            set_error("preset name is not valid UTF-8");
            return StratStatus::InvalidArgument;
        };
        match scenarios::build(name, &[]) {
            Ok((preset, state)) => {
                let sim = Box::new(StratSim { state, config: preset.config });
                *out = Box::into_raw(sim);
                StratStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                classify(&e)
            }
        }
    })
}

/// Release a handle; a null pointer is a no-op.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_free(sim: *mut StratSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Grid dimensions of the simulation.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_grid(
    sim: *const StratSim,
    n1: *mut usize,
    n2: *mut usize,
) -> StratStatus {
    guarded(|| {
        if sim.is_null() || n1.is_null() || n2.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let grid = (*sim).state.grid();
        *n1 = grid.n1();
        *n2 = grid.n2();
        StratStatus::Ok
    })
}

/// Current simulation time; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_time(sim: *const StratSim) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    (*sim).state.t
}

/// Advance to `t_target` with CFL-limited steps.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_advance(sim: *mut StratSim, t_target: f64) -> StratStatus {
    guarded(|| {
        if sim.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let sim = &mut *sim;
        if !t_target.is_finite() || t_target < sim.state.t {
            set_error(format!("cannot advance backwards to {t_target}"));
            return StratStatus::InvalidArgument;
        }
        while sim.state.t < t_target - 1e-12 * sim.config.sample_dt {
            let dt = sim
                .state
                .adaptive_dt(sim.config.cfl, sim.config.sample_dt)
                .min(t_target - sim.state.t);
            if let Err(e) = sim.state.step(dt) {
                set_error(e.to_string());
                return classify(&e);
            }
            if sim.state.theta.linf() > sim.config.max_linf {
                set_error("amplitude guard tripped");
                return StratStatus::NumericalError;
            }
        }
        sim.state.t = t_target;
        StratStatus::Ok
    })
}

/// Copy theta into `buf` (length `len` = n1 * n2, row-major, i outermost).
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_theta(
    sim: *const StratSim,
    buf: *mut f64,
    len: usize,
) -> StratStatus {
    guarded(|| {
        if sim.is_null() || buf.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let values = (*sim).state.theta.values();
        if len != values.len() {
            set_error(format!("buffer length {len} != {}", values.len()));
            return StratStatus::InvalidArgument;
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        StratStatus::Ok
    })
}

/// Compute the full diagnostics record for the current state.
#[no_mangle]
pub unsafe extern "C" fn stratlab_sim_diagnostics(
    sim: *const StratSim,
    out: *mut StratDiagnostics,
) -> StratStatus {
    guarded(|| {
        if sim.is_null() || out.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        match diagnostics::record(&(*sim).state) {
            Ok(r) => {
                *out = StratDiagnostics {
                    t: r.t,
                    e_p: r.e_p,
                    e: r.e,
                    k: r.k,
                    u2_l2sq: r.u2_l2sq,
                    u_l2sq: r.u_l2sq,
                    theta_h: r.theta_hk,
                    gradpsi_hk: r.gradpsi_hk,
                    d2e_integrand: r.d2e_integrand,
                    mass: r.mass,
                    linf: r.linf,
                    bc_drift: r.bc_drift,
                };
                StratStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                classify(&e)
            }
        }
    })
}

/// Vertical decreasing rearrangement of a row-major field sampled on the
/// standard channel grid; writes the n2 profile values into `out`.
#[no_mangle]
pub unsafe extern "C" fn stratlab_rearrange(
    values: *const f64,
    n1: usize,
    n2: usize,
    out: *mut f64,
) -> StratStatus {
    guarded(|| {
        if values.is_null() || out.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let grid = match Grid::new(n1, n2, 2) {
            Ok(g) => g,
            Err(e) => {
                set_error(e.to_string());
                return StratStatus::InvalidArgument;
            }
        };
        let slice = std::slice::from_raw_parts(values, n1 * n2);
        let field = match ScalarField::from_values(grid, slice.to_vec()) {
            Ok(f) => f,
            Err(e) => {
                set_error(e.to_string());
                return StratStatus::InvalidArgument;
            }
        };
        let profile = vertical_rearrangement(&field);
        ptr::copy_nonoverlapping(profile.values().as_ptr(), out, n2);
        StratStatus::Ok
    })
}

/// Least-squares power-law fit of (times, values) over [t_min, t_max].
#[no_mangle]
pub unsafe extern "C" fn stratlab_fit_power_law(
    times: *const f64,
    values: *const f64,
    len: usize,
    t_min: f64,
    t_max: f64,
    exponent: *mut f64,
    r2: *mut f64,
) -> StratStatus {
    guarded(|| {
        if times.is_null() || values.is_null() || exponent.is_null() || r2.is_null() {
            set_error("null argument");
            return StratStatus::NullArgument;
        }
        let t = std::slice::from_raw_parts(times, len).to_vec();
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let tr = match Trajectory::new(t, v) {
            Ok(tr) => tr,
            Err(e) => {
                set_error(e.to_string());
                return StratStatus::InvalidArgument;
            }
        };
        match fit_power_law(&tr, t_min, t_max) {
            Ok(fit) => {
                *exponent = fit.exponent;
                *r2 = fit.r2;
                StratStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                StratStatus::InvalidArgument
            }
        }
    })
}
