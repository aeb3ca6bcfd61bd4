//! C interface to the `mhd0` simulator.
//!
//! Every function returns an [`Mhd0Status`]. On failure a description is
//! kept per thread and can be read with [`mhd0_last_error_message`].
//! Simulations are opaque handles created by
//! [`mhd0_sim_new_from_config`] and released with [`mhd0_sim_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mhd0::diagnostics::DiagnosticsRecord;
use mhd0::io::{run, write_snapshot, RunConfig, Simulation};
use mhd0::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mhd0Status {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    BlowUp = 3,
    Io = 4,
    InvalidUtf8 = 5,
    BufferTooSmall = 6,
    InvalidArgument = 7,
    Internal = 8,
}

/// Field selector for [`mhd0_sim_copy_field`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mhd0Field {
    Rho = 0,
    U1 = 1,
    U2 = 2,
    U3 = 3,
    H1 = 4,
    H2 = 5,
    H3 = 6,
}

/// Opaque simulation handle.
pub struct Mhd0Simulation {
    inner: Simulation,
}

/// One diagnostics row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mhd0Diagnostics {
    pub t: f64,
    pub energy_potential: f64,
    pub energy_kinetic: f64,
    pub energy_magnetic: f64,
    pub dissipation: f64,
    pub dissipation_integral: f64,
    pub energy_residual: f64,
    pub norm_h2_rho: f64,
    pub norm_h2_u: f64,
    pub norm_h2_b: f64,
    pub norm_l2_rho_t: f64,
    pub norm_l2_u_t: f64,
    pub norm_l2_b_t: f64,
    pub a_functional: f64,
    pub res_momdecomp: f64,
    pub res_poissonflux: f64,
    pub res_wv: f64,
    pub div_h_l2: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub lyapunov_wv: f64,
}

impl From<DiagnosticsRecord> for Mhd0Diagnostics {
    fn from(r: DiagnosticsRecord) -> Self {
        Self {
            t: r.t,
            energy_potential: r.energy_potential,
            energy_kinetic: r.energy_kinetic,
            energy_magnetic: r.energy_magnetic,
            dissipation: r.dissipation,
            dissipation_integral: r.dissipation_integral,
            energy_residual: r.energy_residual,
            norm_h2_rho: r.norm_h2_rho,
            norm_h2_u: r.norm_h2_u,
            norm_h2_b: r.norm_h2_b,
            norm_l2_rho_t: r.norm_l2_rho_t,
            norm_l2_u_t: r.norm_l2_u_t,
            norm_l2_b_t: r.norm_l2_b_t,
            a_functional: r.a_functional,
            res_momdecomp: r.res_momdecomp,
            res_poissonflux: r.res_poissonflux,
            res_wv: r.res_wv,
            div_h_l2: r.div_h_l2,
            rho_min: r.rho_min,
            rho_max: r.rho_max,
            lyapunov_wv: r.lyapunov_wv,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(Mhd0Status, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidGrid(_) => {
                Mhd0Status::Config
            }
            e if e.is_blow_up() => Mhd0Status::BlowUp,
            Error::Io(_) | Error::HeaderMismatch(_) => Mhd0Status::Io,
            Error::GridMismatch(_) => Mhd0Status::InvalidArgument,
            _ => Mhd0Status::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: Mhd0Status, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

/// Runs `f`, records any error or panic, and returns the status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Mhd0Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            Mhd0Status::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Mhd0Status::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(Mhd0Status::NullPointer, &format!("`{name}` is null"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        Failure(
            Mhd0Status::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn sim_mut<'a>(sim: *mut Mhd0Simulation) -> Result<&'a mut Simulation, Failure> {
    if sim.is_null() {
        return fail(Mhd0Status::NullPointer, "simulation handle is null");
    }
    // SAFETY: non-null handles come from `mhd0_sim_new_from_config`.
    Ok(unsafe { &mut (*sim).inner })
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn mhd0_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a simulation from configuration text in `key = value` form.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_new_from_config(
    config_text: *const c_char,
    out: *mut *mut Mhd0Simulation,
) -> Mhd0Status {
    guard(|| {
        if out.is_null() {
            return fail(Mhd0Status::NullPointer, "`out` is null");
        }
        // SAFETY: forwarded caller contract.
        let text = unsafe { str_arg(config_text, "config_text") }?;
        let inner = Simulation::new(RunConfig::parse(text)?)?;
        // SAFETY: `out` checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(Mhd0Simulation { inner })) };
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_free(sim: *mut Mhd0Simulation) {
    if !sim.is_null() {
        // SAFETY: handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advances by `dt`. A non-positive `dt` takes the step the configuration
/// prescribes (fixed or CFL); at `t_end` that is a no-op.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_step(sim: *mut Mhd0Simulation, dt: f64) -> Mhd0Status {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let sim = unsafe { sim_mut(sim) }?;
        if dt.is_nan() {
            return fail(Mhd0Status::InvalidArgument, "dt is NaN");
        }
        let dt = if dt > 0.0 { dt } else { sim.next_dt() };
        if dt > 0.0 {
            sim.step(dt)?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_time(sim: *const Mhd0Simulation, out: *mut f64) -> Mhd0Status {
    guard(|| {
        if sim.is_null() || out.is_null() {
            return fail(Mhd0Status::NullPointer, "null argument");
        }
        // SAFETY: both checked non-null.
        unsafe { *out = (*sim).inner.time() };
        Ok(())
    })
}

/// Grid points per axis; field buffers hold `n³` values.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_grid_size(
    sim: *const Mhd0Simulation,
    out: *mut usize,
) -> Mhd0Status {
    guard(|| {
        if sim.is_null() || out.is_null() {
            return fail(Mhd0Status::NullPointer, "null argument");
        }
        // SAFETY: both checked non-null.
        unsafe { *out = (*sim).inner.state().grid().n() };
        Ok(())
    })
}

/// Computes diagnostics at the current state. This also advances the
/// running A functional, so call it at increasing times.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_diagnostics(
    sim: *mut Mhd0Simulation,
    out: *mut Mhd0Diagnostics,
) -> Mhd0Status {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let sim = unsafe { sim_mut(sim) }?;
        if out.is_null() {
            return fail(Mhd0Status::NullPointer, "`out` is null");
        }
        let record = sim.record()?;
        // SAFETY: checked non-null.
        unsafe { *out = record.into() };
        Ok(())
    })
}

/// Copies one field, row-major, into `buf` of length `len >= n³`.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_copy_field(
    sim: *const Mhd0Simulation,
    field: Mhd0Field,
    buf: *mut f64,
    len: usize,
) -> Mhd0Status {
    guard(|| {
        if sim.is_null() || buf.is_null() {
            return fail(Mhd0Status::NullPointer, "null argument");
        }
        // SAFETY: checked non-null.
        let state = unsafe { (*sim).inner.state() };
        let values = match field {
            Mhd0Field::Rho => state.rho.values(),
            Mhd0Field::U1 => state.u.component(0).values(),
            Mhd0Field::U2 => state.u.component(1).values(),
            Mhd0Field::U3 => state.u.component(2).values(),
            Mhd0Field::H1 => state.h.component(0).values(),
            Mhd0Field::H2 => state.h.component(1).values(),
            Mhd0Field::H3 => state.h.component(2).values(),
        };
        if len < values.len() {
            return fail(
                Mhd0Status::BufferTooSmall,
                &format!("buffer holds {len} values, field has {}", values.len()),
            );
        }
        // SAFETY: `buf` is valid for `len >= values.len()` writes.
        unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mhd0_sim_write_snapshot(
    sim: *const Mhd0Simulation,
    path: *const c_char,
) -> Mhd0Status {
    guard(|| {
        if sim.is_null() {
            return fail(Mhd0Status::NullPointer, "simulation handle is null");
        }
        // SAFETY: forwarded caller contract.
        let path = unsafe { str_arg(path, "path") }?;
        // SAFETY: checked non-null.
        write_snapshot(unsafe { (*sim).inner.state() }, path)?;
        Ok(())
    })
}

/// Runs a configuration file to completion, as the `mhd0 run` command
/// does. `output_dir` may be null to keep the configured directory.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `output_dir` null or one.
#[no_mangle]
pub unsafe extern "C" fn mhd0_run(
    config_path: *const c_char,
    output_dir: *const c_char,
) -> Mhd0Status {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let path = unsafe { str_arg(config_path, "config_path") }?;
        let mut cfg = RunConfig::from_file(path)?;
        if !output_dir.is_null() {
            // SAFETY: non-null, forwarded caller contract.
            cfg.output = PathBuf::from(unsafe { str_arg(output_dir, "output_dir") }?);
        }
        run(&cfg)?;
        Ok(())
    })
}
