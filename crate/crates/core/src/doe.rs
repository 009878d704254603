//! Sweeps of heating power and phase duration, and selection of the design
//! with the smallest expected error.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::error_budget::{ErrorBudget, ErrorModel};
use crate::qub::{QubProtocol, QubSystem};

pub const GRID_HEADER: &str = "ph_W,t_qub_s,H_qub_W_per_K,eps_qub_pct,eps_Hm_W_per_K,eps_H_pct,theta_max_C,valid";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// `n` points from `start` to `end` inclusive.
pub fn axis(start: f64, end: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if n == 0 {
        return bad("axis needs at least one point".into());
    }
    if !(start.is_finite() && end.is_finite()) {
        return bad("axis bounds must be finite".into());
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    if !(end > start) {
        return bad(format!("axis end {end} must exceed start {start}"));
    }
    let last = (n - 1) as f64;
    let values: Vec<f64> = match spacing {
        Spacing::Linear => (0..n).map(|k| start + (end - start) * k as f64 / last).collect(),
        Spacing::Log => {
            if !(start > 0.0) {
                return bad(format!("log axis needs a positive start, got {start}"));
            }
            let (a, b) = (start.ln(), end.ln());
            (0..n).map(|k| (a + (b - a) * k as f64 / last).exp()).collect()
        }
    };
    let mut values = values;
    values[0] = start;
    values[n - 1] = end;
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return bad("axis is not strictly increasing".into());
    }
    Ok(values)
}

/// Default axes: heating power log-spaced over `[P_m, 4 P_m]` with `P_m` the
/// maintenance power, duration linear over `[1 h, 12 h]`, 40 points each.
pub fn default_axes(maintenance_power: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(maintenance_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "maintenance power is {maintenance_power} W; give the power range explicitly"
        )));
    }
    Ok((
        axis(maintenance_power, 4.0 * maintenance_power, 40, Spacing::Log)?,
        axis(3600.0, 12.0 * 3600.0, 40, Spacing::Linear)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoeCell {
    pub p_heat: f64,
    pub t_qub: f64,
    pub h_qub: f64,
    pub eps_qub_pct: f64,
    pub eps_hm: f64,
    pub eps_h_pct: f64,
    /// Peak indoor temperature, °C.
    pub theta_max: f64,
    pub valid: bool,
}

impl DoeCell {
    fn invalid(p_heat: f64, t_qub: f64) -> Self {
        Self {
            p_heat,
            t_qub,
            h_qub: f64::NAN,
            eps_qub_pct: f64::NAN,
            eps_hm: f64::NAN,
            eps_h_pct: f64::NAN,
            theta_max: f64::NAN,
            valid: false,
        }
    }
}

/// Cells in duration-major order: cell `(i_t, i_p)` is at `i_t * n_p + i_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoeGrid {
    pub ph_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub cells: Vec<DoeCell>,
}

impl DoeGrid {
    pub fn cell(&self, i_t: usize, i_p: usize) -> &DoeCell {
        &self.cells[i_t * self.ph_values.len() + i_p]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * (self.cells.len() + 1));
        out.push_str(GRID_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                c.p_heat,
                c.t_qub,
                c.h_qub,
                c.eps_qub_pct,
                c.eps_hm,
                c.eps_h_pct,
                c.theta_max,
                u8::from(c.valid)
            );
        }
        out
    }

    /// Writes the CSV atomically: the file appears complete or not at all.
    pub fn export(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn evaluate_cell(
    system: &QubSystem,
    template: &QubProtocol,
    errors: &ErrorModel,
    h_ref: f64,
    p_heat: f64,
    t_qub: f64,
) -> DoeCell {
    let protocol = QubProtocol {
        p_heat,
        t_qub,
        sample_dt: template.sample_dt.min(t_qub / 20.0),
        ..template.clone()
    };
    let run = || -> Result<DoeCell> {
        let trace = system.simulate(&protocol)?;
        let estimate = crate::qub::estimate_from_trace(&trace, protocol.window_fraction)?;
        let budget = ErrorBudget::new(&estimate, h_ref, &errors.resolve(&estimate)?)?;
        let cell = DoeCell {
            p_heat,
            t_qub,
            h_qub: estimate.h_qub,
            eps_qub_pct: budget.eps_qub_pct,
            eps_hm: budget.eps_hm,
            eps_h_pct: budget.eps_h_pct,
            theta_max: protocol.t_outdoor + trace.max_delta_t(),
            valid: true,
        };
        let finite = [
            cell.h_qub,
            cell.eps_qub_pct,
            cell.eps_hm,
            cell.eps_h_pct,
            cell.theta_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        Ok(if finite { cell } else { DoeCell::invalid(p_heat, t_qub) })
    };
    run().unwrap_or_else(|_| DoeCell::invalid(p_heat, t_qub))
}

/// Evaluates every `(P_h, t_qub)` cell; cells that cannot be estimated are
/// marked invalid. `threads = 0` lets the pool choose.
pub fn sweep(
    system: &QubSystem,
    template: &QubProtocol,
    ph_axis: &[f64],
    t_axis: &[f64],
    errors: &ErrorModel,
    h_ref: f64,
    threads: usize,
) -> Result<DoeGrid> {
    for (name, ax) in [("power", ph_axis), ("duration", t_axis)] {
        if ax.is_empty() || ax.windows(2).any(|w| !(w[1] > w[0])) || ax.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} axis must be non-empty, finite and strictly increasing"
            )));
        }
    }
    if !(h_ref > 0.0 && h_ref.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reference H must be positive, got {h_ref}"
        )));
    }
    errors.validate()?;
    let coords: Vec<(f64, f64)> = t_axis
        .iter()
        .flat_map(|&t| ph_axis.iter().map(move |&p| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let cells = pool.install(|| {
        coords
            .par_iter()
            .map(|&(p, t)| evaluate_cell(system, template, errors, h_ref, p, t))
            .collect()
    });
    Ok(DoeGrid {
        ph_values: ph_axis.to_vec(),
        t_values: t_axis.to_vec(),
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignConstraints {
    pub max_power: f64,
    pub max_indoor_temperature: f64,
    /// Heating plus cooling duration, s.
    pub max_total_duration: f64,
}

impl Default for DesignConstraints {
    fn default() -> Self {
        Self {
            max_power: f64::INFINITY,
            max_indoor_temperature: f64::INFINITY,
            max_total_duration: f64::INFINITY,
        }
    }
}

impl DesignConstraints {
    pub fn validate(&self) -> Result<()> {
        let v = [self.max_power, self.max_indoor_temperature, self.max_total_duration];
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "constraints must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Admissible cell with the smallest `|eps_H_pct|`; ties go to the shorter,
/// then the less powerful experiment.
pub fn select_optimum(grid: &DoeGrid, constraints: &DesignConstraints) -> Result<DoeCell> {
    constraints.validate()?;
    let valid: Vec<&DoeCell> = grid.cells.iter().filter(|c| c.valid).collect();
    if valid.is_empty() {
        return Err(Error::Infeasible("no valid cell in the grid".into()));
    }
    let power: Vec<&DoeCell> = valid
        .into_iter()
        .filter(|c| c.p_heat <= constraints.max_power)
        .collect();
    if power.is_empty() {
        return Err(Error::Infeasible(format!(
            "max power {} W is below every valid heating power",
            constraints.max_power
        )));
    }
    let temp: Vec<&DoeCell> = power
        .into_iter()
        .filter(|c| c.theta_max <= constraints.max_indoor_temperature)
        .collect();
    if temp.is_empty() {
        return Err(Error::Infeasible(format!(
            "max indoor temperature {} °C is exceeded by every admissible power",
            constraints.max_indoor_temperature
        )));
    }
    let admissible: Vec<&DoeCell> = temp
        .into_iter()
        .filter(|c| 2.0 * c.t_qub <= constraints.max_total_duration)
        .collect();
    admissible
        .into_iter()
        .min_by(|a, b| {
            a.eps_h_pct
                .abs()
                .total_cmp(&b.eps_h_pct.abs())
                .then(a.t_qub.total_cmp(&b.t_qub))
                .then(a.p_heat.total_cmp(&b.p_heat))
        })
        .copied()
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "max duration {} s is shorter than every admissible experiment",
                constraints.max_total_duration
            ))
        })
}
