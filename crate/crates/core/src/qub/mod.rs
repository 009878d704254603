//! The two-pulse QUB experiment: simulation on a state-space model and
//! estimation of the heat transfer coefficient from the two slopes.
//!
//! A test starts from the steady state under the pre-test power `P0`, heats
//! with `P_h` for `t_qub`, then lets the building cool with `P_c` for another
//! `t_qub`. A line is fitted over the tail of each phase and the slopes and
//! temperature differences of the two lines give `H_QUB`.
//!
//! The trace estimator uses the fitted temperature difference at the start of
//! each window rather than at the phase origin. Both windows sit at the same
//! offsets from their phase origins, so `H_QUB` is exact on a first-order
//! response whatever the window, and fast modes that have settled before the
//! window do not bias it.

mod formulas;
mod trace;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

pub use formulas::{analytic_slopes, estimate_c, estimate_h, first_order_response, recover_c};
pub use trace::{fit_slope, Phase, QubTrace, SlopeFit, TRACE_HEADER};

use crate::conductance::{static_gains, zone_power_input};
use crate::error::{Error, Result};
use crate::modal::{initial_state, Propagator};
use crate::network_model::{to_state_space, InputKind, StateSpaceModel, ThermalCircuit};

/// Output name used for the mass-weighted mean temperature of several zones.
pub const MEAN_INDOOR: &str = "mean_indoor";

#[derive(Clone, Debug, PartialEq)]
pub struct QubProtocol {
    /// Outdoor temperature, °C.
    pub t_outdoor: f64,
    /// Power before the test, W.
    pub p0: f64,
    pub p_heat: f64,
    pub p_cool: f64,
    /// Duration of each phase, s.
    pub t_qub: f64,
    /// Fraction of each phase, at its end, used for the slope fit.
    pub window_fraction: f64,
    pub sample_dt: f64,
    /// Temperature sources held at a value other than `t_outdoor`.
    pub boundary_temperatures: BTreeMap<String, f64>,
}

impl Default for QubProtocol {
    fn default() -> Self {
        Self {
            t_outdoor: 0.0,
            p0: 0.0,
            p_heat: 1000.0,
            p_cool: 0.0,
            t_qub: 3.0 * 3600.0,
            window_fraction: 1.0 / 3.0,
            sample_dt: 60.0,
            boundary_temperatures: BTreeMap::new(),
        }
    }
}

impl QubProtocol {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let finite = [
            self.t_outdoor,
            self.p0,
            self.p_heat,
            self.p_cool,
            self.t_qub,
            self.sample_dt,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("protocol values must be finite".into());
        }
        if !(self.t_qub > 0.0) {
            return bad(format!("t_qub must be positive, got {}", self.t_qub));
        }
        if !(self.p_cool >= 0.0 && self.p_heat > self.p_cool) {
            return bad(format!(
                "need P_h > P_c >= 0, got P_h = {}, P_c = {}",
                self.p_heat, self.p_cool
            ));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return bad(format!(
                "window fraction must be in (0, 1], got {}",
                self.window_fraction
            ));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= self.t_qub / 20.0 * (1.0 + 1e-12)) {
            return bad(format!(
                "sample_dt must be in (0, t_qub/20] = (0, {}], got {}",
                self.t_qub / 20.0,
                self.sample_dt
            ));
        }
        Ok(())
    }

    /// Sample offsets from a phase origin: multiples of `sample_dt`, then `t_qub`.
    pub fn phase_offsets(&self) -> Vec<f64> {
        let mut offsets: Vec<f64> = (0..)
            .map(|k| k as f64 * self.sample_dt)
            .take_while(|&s| s < self.t_qub - 1e-9 * self.sample_dt)
            .collect();
        offsets.push(self.t_qub);
        offsets
    }
}

/// Result of the QUB estimation on one record.
#[derive(Clone, Debug, PartialEq)]
pub struct QubEstimate {
    pub h_qub: f64,
    /// Capacity from the two lines without correction for where they were taken.
    pub c_star: f64,
    /// Capacity corrected for the fit windows; `None` when no consistent value exists.
    pub c: Option<f64>,
    /// `C / H_QUB`.
    pub tau: Option<f64>,
    pub alpha_h: f64,
    pub alpha_c: f64,
    /// Fitted temperature differences at the window starts.
    pub dt0_h: f64,
    pub dt0_c: f64,
    /// Window starts measured from the phase origins.
    pub t0_h: f64,
    pub t0_c: f64,
    pub r2_h: f64,
    pub r2_c: f64,
    pub stderr_h: f64,
    pub stderr_c: f64,
    pub p_heat: f64,
    pub p_cool: f64,
}

/// Estimates `H_QUB` and `C` from a recorded or simulated trace.
pub fn estimate_from_trace(trace: &QubTrace, window_fraction: f64) -> Result<QubEstimate> {
    let heat = fit_slope(trace, Phase::Heating, window_fraction)?;
    let cool = fit_slope(trace, Phase::Cooling, window_fraction)?;
    let (p_h, p_c) = (trace.heating_power(), trace.cooling_power());
    let h_qub = estimate_h(heat.alpha, cool.alpha, heat.dt0, cool.dt0, p_h, p_c)?;
    let c_star = estimate_c(heat.alpha, cool.alpha, heat.dt0, cool.dt0, p_h, p_c)?;

    let range = trace.phase_range(Phase::Heating);
    let origin = trace.times[range.start];
    let k0 = trace::window_start(&trace.times, range.clone(), window_fraction);
    let offsets: Vec<f64> = trace.times[k0..range.end].iter().map(|t| t - origin).collect();
    let tau = if h_qub > 0.0 && c_star > 0.0 {
        window_time_constant(&offsets, c_star / h_qub)
    } else {
        None
    };

    Ok(QubEstimate {
        h_qub,
        c_star,
        c: tau.map(|t| t * h_qub),
        tau,
        alpha_h: heat.alpha,
        alpha_c: cool.alpha,
        dt0_h: heat.dt0,
        dt0_c: cool.dt0,
        t0_h: heat.offset,
        t0_c: cool.offset,
        r2_h: heat.r2,
        r2_c: cool.r2,
        stderr_h: heat.slope_stderr,
        stderr_c: cool.slope_stderr,
        p_heat: p_h,
        p_cool: p_c,
    })
}

/// Time constant `τ` whose exponential `e^{−s/τ}`, fitted by a line over the
/// window offsets `s`, has `−intercept/slope = ratio`.
///
/// For a first-order response the trace estimator gives `C*/H = ratio`, so
/// this is the analogue of the tangent relation `C* = e^{−t0/τ} C` for
/// regression lines and reduces to `τ = C*/H` for a tangent.
fn window_time_constant(offsets: &[f64], ratio: f64) -> Option<f64> {
    let f = |tau: f64| -> Option<(f64, f64)> {
        let y: Vec<f64> = offsets.iter().map(|s| (-s / tau).exp()).collect();
        let dy: Vec<f64> = offsets.iter().zip(&y).map(|(s, e)| s / (tau * tau) * e).collect();
        let (s1, v1, _, _) = trace::least_squares(offsets, &y).ok()?;
        let (ds1, dv1, _, _) = trace::least_squares(offsets, &dy).ok()?;
        let value = -v1 / s1 - ratio;
        let deriv = -(dv1 * s1 - v1 * ds1) / (s1 * s1);
        (value.is_finite() && deriv.is_finite()).then_some((value, deriv))
    };
    let (mut lo, mut hi) = (ratio, ratio);
    for _ in 0..200 {
        match f(lo) {
            Some((v, _)) if v > 0.0 => lo *= 0.5,
            Some(_) => break,
            None => return None,
        }
    }
    for _ in 0..200 {
        match f(hi) {
            Some((v, _)) if v < 0.0 => hi *= 2.0,
            Some(_) => break,
            None => return None,
        }
    }
    crate::roots::bracketed_newton(|t| f(t).unwrap_or((f64::NAN, f64::NAN)), lo, hi, 1e-12 * ratio)
        .ok()
        .filter(|t| t.is_finite() && *t > 0.0)
}

/// A state-space model with one designated indoor temperature output and a
/// split of the total heating power among its power inputs.
#[derive(Clone, Debug)]
pub struct QubSystem {
    model: StateSpaceModel,
    propagator: Propagator,
    /// Input vector for 1 W of total heating power.
    power: DVector<f64>,
}

impl QubSystem {
    /// Uses output `output` of `model` and puts all power on `power_input`.
    pub fn new(model: &StateSpaceModel, output: &str, power_input: &str) -> Result<Self> {
        let i = model
            .output_index(output)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown output {output:?}")))?;
        let j = model
            .input_index(power_input)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown input {power_input:?}")))?;
        if model.input_kind(j) != InputKind::Flow {
            return Err(Error::InvalidArgument(format!(
                "input {power_input:?} is not a power input"
            )));
        }
        let single = model.with_outputs(
            model.c().rows(i, 1).into_owned(),
            model.d().rows(i, 1).into_owned(),
            vec![output.to_string()],
        )?;
        let mut power = DVector::zeros(model.n_inputs());
        power[j] = 1.0;
        Self::with_power_split(single, power)
    }

    /// Single-output model and explicit input vector per watt of heating.
    pub fn with_power_split(model: StateSpaceModel, power: DVector<f64>) -> Result<Self> {
        if model.n_outputs() != 1 || power.len() != model.n_inputs() {
            return Err(Error::InvalidArgument(
                "QUB system needs one output and a power vector over all inputs".into(),
            ));
        }
        let propagator = Propagator::new(&model)?;
        Ok(Self {
            model,
            propagator,
            power,
        })
    }

    /// Indoor temperature is the zone air node, or the mass-weighted mean of
    /// the zone air nodes; power is shared among zones in proportion to air
    /// mass. Without zones the circuit must have a single flow source, whose
    /// node is then the indoor node.
    pub fn from_circuit(circuit: &ThermalCircuit) -> Result<Self> {
        if circuit.zones.is_empty() {
            return match circuit.flow_sources.as_slice() {
                [source] => {
                    let model = to_state_space(circuit, &[source.node.as_str()])?;
                    Self::new(&model, &source.node, &source.source_name)
                }
                _ => Err(Error::InvalidArgument(
                    "circuit without zones needs exactly one flow source".into(),
                )),
            };
        }
        let air: Vec<&str> = circuit.zones.iter().map(|z| z.air_node.as_str()).collect();
        let model = to_state_space(circuit, &air)?;
        let total: f64 = circuit.zones.iter().map(|z| z.mass()).sum();
        let mut c = DMatrix::zeros(1, model.n_states());
        let mut d = DMatrix::zeros(1, model.n_inputs());
        let mut power = DVector::zeros(model.n_inputs());
        for (i, zone) in circuit.zones.iter().enumerate() {
            let w = zone.mass() / total;
            c += model.c().rows(i, 1) * w;
            d += model.d().rows(i, 1) * w;
            power[zone_power_input(&model, zone)?] += w;
        }
        let name = if air.len() == 1 {
            air[0].to_string()
        } else {
            MEAN_INDOOR.to_string()
        };
        Self::with_power_split(model.with_outputs(c, d, vec![name])?, power)
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn power_split(&self) -> &DVector<f64> {
        &self.power
    }

    /// `1 / (static gain of 1 W of total heating power)`.
    pub fn reference_h(&self) -> Result<f64> {
        let gain = (static_gains(&self.model)? * &self.power)[0];
        if !(gain.abs() > f64::MIN_POSITIVE) {
            return Err(Error::Degenerate("indoor temperature does not respond to power".into()));
        }
        Ok(1.0 / gain)
    }

    /// Inputs with every temperature source at `t_outdoor` (or its override)
    /// and `power` watts of heating.
    pub fn input_vector(&self, protocol: &QubProtocol, power: f64) -> Result<DVector<f64>> {
        for name in protocol.boundary_temperatures.keys() {
            match self.model.input_index(name) {
                Some(j) if self.model.input_kind(j) == InputKind::Temperature => {}
                _ => return Err(Error::InvalidArgument(format!("unknown temperature source {name:?}"))),
            }
        }
        let mut u = &self.power * power;
        for (j, input) in self.model.inputs().iter().enumerate() {
            if input.kind == InputKind::Temperature {
                u[j] = *protocol
                    .boundary_temperatures
                    .get(&input.name)
                    .unwrap_or(&protocol.t_outdoor);
            }
        }
        Ok(u)
    }

    /// Indoor-outdoor difference in the steady state under `P0`.
    pub fn initial_delta_t(&self, protocol: &QubProtocol) -> Result<f64> {
        let u = self.input_vector(protocol, protocol.p0)?;
        Ok(self.model.steady_output(&u)?[0] - protocol.t_outdoor)
    }

    /// Power that holds the initial indoor temperature, `H (θ0 − T_o)`.
    pub fn maintenance_power(&self, protocol: &QubProtocol) -> Result<f64> {
        Ok(self.reference_h()? * self.initial_delta_t(protocol)?)
    }

    pub fn simulate(&self, protocol: &QubProtocol) -> Result<QubTrace> {
        protocol.validate()?;
        let u0 = self.input_vector(protocol, protocol.p0)?;
        let uh = self.input_vector(protocol, protocol.p_heat)?;
        let uc = self.input_vector(protocol, protocol.p_cool)?;
        let x0 = initial_state(&self.model, &u0)?;
        let heating = self.propagator.trajectory(&x0, &uh);
        let x1 = heating.state_at(protocol.t_qub);
        let cooling = self.propagator.trajectory(&x1, &uc);

        let offsets = protocol.phase_offsets();
        let n = 2 * offsets.len() - 1;
        let (mut times, mut delta_t) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut power, mut phase) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for &s in &offsets {
            times.push(s);
            delta_t.push(heating.output_at(s)[0] - protocol.t_outdoor);
            power.push(protocol.p_heat);
            phase.push(Phase::Heating);
        }
        for &s in &offsets[1..] {
            times.push(protocol.t_qub + s);
            delta_t.push(cooling.output_at(s)[0] - protocol.t_outdoor);
            power.push(protocol.p_cool);
            phase.push(Phase::Cooling);
        }
        QubTrace::new(times, delta_t, power, phase)
    }

    pub fn estimate(&self, protocol: &QubProtocol) -> Result<QubEstimate> {
        estimate_from_trace(&self.simulate(protocol)?, protocol.window_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn first_order() -> QubSystem {
        let c = ThermalCircuit::from_json(
            r#"{
            "nodes": [{"id": "air", "capacity": 1e6}],
            "branches": [{"id": "g", "from": "REF", "to": "air", "conductance": 100, "temperature_source": "T_o"}],
            "flow_sources": [{"node": "air", "source_name": "P"}]
        }"#,
        )
        .unwrap();
        QubSystem::from_circuit(&c).unwrap()
    }

    fn protocol() -> QubProtocol {
        QubProtocol {
            p_heat: 1000.0,
            t_qub: 1e4,
            sample_dt: 100.0,
            ..QubProtocol::default()
        }
    }

    #[test]
    fn first_order_trace_end_points() {
        let tr = first_order().simulate(&protocol()).unwrap();
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(tr.delta_t[0], 0.0);
        let s = tr.switch_index();
        assert_eq!(tr.times[s], 1e4);
        assert_relative_eq!(tr.delta_t[s], 6.321205588285577, max_relative = 1e-12);
        assert_eq!(*tr.times.last().unwrap(), 2e4);
        assert_relative_eq!(
            *tr.delta_t.last().unwrap(),
            6.321205588285577 * (-1.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn hold_at_p0_is_flat() {
        let p = QubProtocol {
            p0: 1000.0,
            ..protocol()
        };
        let tr = first_order().simulate(&p).unwrap();
        for k in tr.phase_range(Phase::Heating) {
            assert_relative_eq!(tr.delta_t[k], 10.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn first_order_estimate_is_exact() {
        let sys = first_order();
        for &w in &[0.1, 1.0 / 3.0, 1.0] {
            let est = sys
                .estimate(&QubProtocol {
                    window_fraction: w,
                    ..protocol()
                })
                .unwrap();
            assert_relative_eq!(est.h_qub, 100.0, max_relative = 1e-9);
            assert_relative_eq!(est.c.unwrap(), 1e6, max_relative = 1e-6);
        }
        assert_relative_eq!(sys.reference_h().unwrap(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn offsets_end_at_t_qub() {
        let p = QubProtocol {
            t_qub: 1000.0,
            sample_dt: 30.0,
            ..QubProtocol::default()
        };
        let s = p.phase_offsets();
        assert_eq!(s[0], 0.0);
        assert_eq!(*s.last().unwrap(), 1000.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn protocol_validation() {
        assert!(QubProtocol::default().validate().is_ok());
        let bad = [
            QubProtocol {
                t_qub: 0.0,
                ..QubProtocol::default()
            },
            QubProtocol {
                p_cool: 2000.0,
                ..QubProtocol::default()
            },
            QubProtocol {
                window_fraction: 0.0,
                ..QubProtocol::default()
            },
            QubProtocol {
                sample_dt: 1000.0,
                ..QubProtocol::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn unknown_boundary_override_is_rejected() {
        let mut p = protocol();
        p.boundary_temperatures.insert("T_x".into(), 3.0);
        assert!(first_order().simulate(&p).is_err());
    }
}
