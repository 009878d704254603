//! C interface to the QUB design library.
//!
//! Models and grids are opaque handles created by this library and released
//! with their `_free` functions. Every fallible call returns a [`QubStatus`];
//! on failure the message is kept per thread and read with
//! [`qub_last_error_message`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qubdoe::doe::{self, DesignConstraints, DoeCell, DoeGrid};
use qubdoe::error_budget::ErrorModel;
use qubdoe::network_model::ThermalCircuit;
use qubdoe::qub::{QubProtocol, QubSystem};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Numerical = 4,
    OutOfRange = 5,
    Io = 6,
    Panic = 7,
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer passed as {0}")]
    Null(&'static str),
    #[error("{0} is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    OutOfRange(String),
    #[error(transparent)]
    Core(#[from] qubdoe::Error),
}

impl FfiError {
    fn status(&self) -> QubStatus {
        match self {
            FfiError::Null(_) => QubStatus::NullPointer,
            FfiError::Utf8(_) => QubStatus::InvalidUtf8,
            FfiError::OutOfRange(_) => QubStatus::OutOfRange,
            FfiError::Core(qubdoe::Error::Io(_)) => QubStatus::Io,
            FfiError::Core(e) if e.is_numerical() => QubStatus::Numerical,
            FfiError::Core(_) => QubStatus::InvalidInput,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> QubStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QubStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QubStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], FfiError> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Building model ready for simulation.
pub struct QubModel {
    system: QubSystem,
    boundary: BTreeMap<String, f64>,
}

/// Result of a design sweep.
pub struct QubGrid {
    grid: DoeGrid,
}

/// Experiment settings. Temperatures in °C, powers in W, times in s.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QubProtocolParams {
    pub t_outdoor: f64,
    pub p0: f64,
    pub p_heat: f64,
    pub p_cool: f64,
    pub t_qub: f64,
    pub window_fraction: f64,
    pub sample_dt: f64,
}

/// Estimate from one simulated experiment. `c` is NaN when no consistent
/// capacity exists.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QubEstimateResult {
    pub h_qub: f64,
    pub c_star: f64,
    pub c: f64,
    pub alpha_h: f64,
    pub alpha_c: f64,
    pub r2_h: f64,
    pub r2_c: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QubCell {
    pub p_heat: f64,
    pub t_qub: f64,
    pub h_qub: f64,
    pub eps_qub_pct: f64,
    pub eps_hm: f64,
    pub eps_h_pct: f64,
    pub theta_max: f64,
    /// 1 when the experiment could be evaluated, 0 otherwise.
    pub valid: i32,
}

impl From<&DoeCell> for QubCell {
    fn from(c: &DoeCell) -> Self {
        Self {
            p_heat: c.p_heat,
            t_qub: c.t_qub,
            h_qub: c.h_qub,
            eps_qub_pct: c.eps_qub_pct,
            eps_hm: c.eps_hm,
            eps_h_pct: c.eps_h_pct,
            theta_max: c.theta_max,
            valid: c.valid as i32,
        }
    }
}

impl QubModel {
    fn protocol(&self, p: &QubProtocolParams) -> QubProtocol {
        QubProtocol {
            t_outdoor: p.t_outdoor,
            p0: p.p0,
            p_heat: p.p_heat,
            p_cool: p.p_cool,
            t_qub: p.t_qub,
            window_fraction: p.window_fraction,
            sample_dt: p.sample_dt,
            boundary_temperatures: self.boundary.clone(),
        }
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qub_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qub_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fills `params` with the default protocol: 0 °C outside, no base power,
/// 1 kW for 3 h, fit over the last third of each phase, 60 s samples.
///
/// # Safety
/// `params` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qub_protocol_default(params: *mut QubProtocolParams) -> QubStatus {
    guard(|| {
        let d = QubProtocol::default();
        *out(params, "params")? = QubProtocolParams {
            t_outdoor: d.t_outdoor,
            p0: d.p0,
            p_heat: d.p_heat,
            p_cool: d.p_cool,
            t_qub: d.t_qub,
            window_fraction: d.window_fraction,
            sample_dt: d.sample_dt,
        };
        Ok(())
    })
}

/// Parses a circuit document and builds its model.
///
/// # Safety
/// `json` must be a NUL-terminated string and `model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qub_model_from_json(json: *const c_char, model: *mut *mut QubModel) -> QubStatus {
    guard(|| {
        let slot = out(model, "model")?;
        *slot = ptr::null_mut();
        let circuit = ThermalCircuit::from_json(text(json, "json")?)?;
        let system = QubSystem::from_circuit(&circuit)?;
        *slot = Box::into_raw(Box::new(QubModel {
            system,
            boundary: BTreeMap::new(),
        }));
        Ok(())
    })
}

/// Loads one of the bundled models: "bungalow", "house" or "ladder".
///
/// # Safety
/// `name` must be a NUL-terminated string and `model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qub_model_bundled(name: *const c_char, model: *mut *mut QubModel) -> QubStatus {
    guard(|| {
        let slot = out(model, "model")?;
        *slot = ptr::null_mut();
        let name = text(name, "name")?;
        let circuit = qubdoe::models::load(name)
            .ok_or_else(|| FfiError::OutOfRange(format!("no bundled model named {name:?}")))??;
        let system = QubSystem::from_circuit(&circuit)?;
        *slot = Box::into_raw(Box::new(QubModel {
            system,
            boundary: BTreeMap::new(),
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qub_model_free(model: *mut QubModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Holds the temperature source `name` at `value` in later calls instead of
/// the outdoor temperature.
///
/// # Safety
/// `model` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qub_model_set_boundary(model: *mut QubModel, name: *const c_char, value: f64) -> QubStatus {
    guard(|| {
        let m = out(model, "model")?;
        let name = text(name, "name")?;
        if !value.is_finite() {
            return Err(FfiError::OutOfRange(format!("{name} = {value} is not finite")));
        }
        m.boundary.insert(name.to_string(), value);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qub_model_n_states(model: *const QubModel, n: *mut usize) -> QubStatus {
    guard(|| {
        *out(n, "n")? = deref(model, "model")?.system.model().n_states();
        Ok(())
    })
}

/// Exact heat transfer coefficient from the static gain, W/K.
///
/// # Safety
/// `model` must be a live handle and `h` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qub_model_reference_h(model: *const QubModel, h: *mut f64) -> QubStatus {
    guard(|| {
        *out(h, "h")? = deref(model, "model")?.system.reference_h()?;
        Ok(())
    })
}

/// Power that holds the indoor temperature reached under `p0`, W.
///
/// # Safety
/// `model`, `protocol` and `power` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qub_model_maintenance_power(
    model: *const QubModel,
    protocol: *const QubProtocolParams,
    power: *mut f64,
) -> QubStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let p = m.protocol(deref(protocol, "protocol")?);
        *out(power, "power")? = m.system.maintenance_power(&p)?;
        Ok(())
    })
}

/// Simulates one experiment and estimates H and C from its trace.
///
/// # Safety
/// `model`, `protocol` and `result` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qub_model_estimate(
    model: *const QubModel,
    protocol: *const QubProtocolParams,
    result: *mut QubEstimateResult,
) -> QubStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let p = m.protocol(deref(protocol, "protocol")?);
        p.validate()?;
        let e = m.system.estimate(&p)?;
        *out(result, "result")? = QubEstimateResult {
            h_qub: e.h_qub,
            c_star: e.c_star,
            c: e.c.unwrap_or(f64::NAN),
            alpha_h: e.alpha_h,
            alpha_c: e.alpha_c,
            r2_h: e.r2_h,
            r2_c: e.r2_c,
        };
        Ok(())
    })
}

/// Evaluates every pair of heating power and duration. `protocol` supplies
/// the other settings. A NaN `eps_alpha` takes the slope error from the fit.
/// `threads` caps the worker count, 0 for all cores.
///
/// # Safety
/// `ph` and `t` must point to `n_ph` and `n_t` doubles; `model`, `protocol`
/// and `grid` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qub_model_sweep(
    model: *const QubModel,
    protocol: *const QubProtocolParams,
    ph: *const f64,
    n_ph: usize,
    t: *const f64,
    n_t: usize,
    eps_dt: f64,
    eps_p_rel: f64,
    eps_alpha: f64,
    threads: usize,
    grid: *mut *mut QubGrid,
) -> QubStatus {
    guard(|| {
        let slot = out(grid, "grid")?;
        *slot = ptr::null_mut();
        let m = deref(model, "model")?;
        let template = m.protocol(deref(protocol, "protocol")?);
        let (ph, t) = (slice(ph, n_ph, "ph")?, slice(t, n_t, "t")?);
        let errors = ErrorModel {
            eps_dt,
            eps_p_rel,
            eps_alpha: (!eps_alpha.is_nan()).then_some(eps_alpha),
        };
        errors.validate()?;
        let h_ref = m.system.reference_h()?;
        let g = doe::sweep(&m.system, &template, ph, t, &errors, h_ref, threads)?;
        *slot = Box::into_raw(Box::new(QubGrid { grid: g }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qub_grid_free(grid: *mut QubGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qub_grid_dims(grid: *const QubGrid, n_t: *mut usize, n_ph: *mut usize) -> QubStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.grid;
        *out(n_t, "n_t")? = g.t_values.len();
        *out(n_ph, "n_ph")? = g.ph_values.len();
        Ok(())
    })
}

/// Cell at duration index `i_t` and power index `i_ph`.
///
/// # Safety
/// `grid` and `cell` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qub_grid_cell(grid: *const QubGrid, i_t: usize, i_ph: usize, cell: *mut QubCell) -> QubStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.grid;
        if i_t >= g.t_values.len() || i_ph >= g.ph_values.len() {
            return Err(FfiError::OutOfRange(format!(
                "cell ({i_t}, {i_ph}) outside a {}x{} grid",
                g.t_values.len(),
                g.ph_values.len()
            )));
        }
        *out(cell, "cell")? = g.cell(i_t, i_ph).into();
        Ok(())
    })
}

/// Writes the grid as CSV, replacing `path` atomically.
///
/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qub_grid_export(grid: *const QubGrid, path: *const c_char) -> QubStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.grid;
        g.export(Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// Smallest-error valid cell within the limits. Pass infinity for no limit.
///
/// # Safety
/// `grid` and `cell` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qub_grid_optimum(
    grid: *const QubGrid,
    max_power: f64,
    max_indoor_temperature: f64,
    max_total_duration: f64,
    cell: *mut QubCell,
) -> QubStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.grid;
        let limits = DesignConstraints {
            max_power,
            max_indoor_temperature,
            max_total_duration,
        };
        limits.validate()?;
        *out(cell, "cell")? = (&doe::select_optimum(g, &limits)?).into();
        Ok(())
    })
}
