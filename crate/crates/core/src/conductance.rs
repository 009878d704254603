//! Reference heat transfer coefficients derived from steady-state gains.
//!
//! The reference against which a QUB estimate is judged is the reciprocal of
//! the static gain of the heating power on the indoor temperature. For several
//! zones the indoor temperature is the mass-weighted mean of the zone air
//! temperatures.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::network_model::{InputKind, StateSpaceModel, Zone};

/// Static gain matrix `K = -C A⁻¹ B + D`; column `j` is the steady response to `u_j = 1`.
pub fn static_gains(model: &StateSpaceModel) -> Result<DMatrix<f64>> {
    let x = model.solve_a(model.b())?;
    Ok(-(model.c() * x) + model.d())
}

/// Per-output sum of the gains of the temperature inputs. Equals one for a
/// well-formed thermal model.
pub fn temperature_gain_sums(model: &StateSpaceModel, gains: &DMatrix<f64>) -> Vec<f64> {
    (0..gains.nrows())
        .map(|i| {
            (0..gains.ncols())
                .filter(|&j| model.input_kind(j) == InputKind::Temperature)
                .map(|j| gains[(i, j)])
                .sum()
        })
        .collect()
}

/// `H = 1/K_P`, with `K_P` the static gain of a power input on one output.
pub fn reference_h_single(model: &StateSpaceModel, power_input: &str, output: &str) -> Result<f64> {
    let j = model
        .input_index(power_input)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown input {power_input:?}")))?;
    if model.input_kind(j) != InputKind::Flow {
        return Err(Error::InvalidArgument(format!(
            "input {power_input:?} is a temperature source, not a power input"
        )));
    }
    let i = model
        .output_index(output)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown output {output:?}")))?;
    let gain = static_gains(model)?[(i, j)];
    if !(gain.abs() > f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(format!(
            "output {output:?} does not respond to {power_input:?} in steady state"
        )));
    }
    Ok(1.0 / gain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Zone air mass.
    Mass,
    /// Zone floor area.
    Area,
}

/// Weighted mean of zone temperatures keyed by zone id.
pub fn mean_zone_temperature(
    zones: &[Zone],
    temperatures: &BTreeMap<String, f64>,
    weighting: Weighting,
) -> Result<f64> {
    if zones.is_empty() {
        return Err(Error::InvalidArgument("no zones".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for zone in zones {
        let theta = temperatures
            .get(&zone.id)
            .ok_or_else(|| Error::InvalidArgument(format!("no temperature for zone {:?}", zone.id)))?;
        let w = match weighting {
            Weighting::Mass => zone.mass(),
            Weighting::Area => zone.floor_area,
        };
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "zone {:?} has a non-positive weight",
                zone.id
            )));
        }
        num += w * theta;
        den += w;
    }
    Ok(num / den)
}

/// Index of the flow input that heats `zone`: its declared heater, or the
/// flow source on its air node.
pub(crate) fn zone_power_input(model: &StateSpaceModel, zone: &Zone) -> Result<usize> {
    let mut inputs = model.inputs().iter();
    match &zone.heater {
        Some(name) => inputs
            .position(|i| i.kind == InputKind::Flow && &i.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("heater {name:?} of zone {:?} is not an input", zone.id))),
        None => inputs
            .position(|i| i.kind == InputKind::Flow && i.node.as_deref() == Some(zone.air_node.as_str()))
            .ok_or_else(|| Error::InvalidArgument(format!("zone {:?} has no power input on its air node", zone.id))),
    }
}

pub(crate) fn zone_output(model: &StateSpaceModel, zone: &Zone) -> Result<usize> {
    model
        .output_index(&zone.air_node)
        .ok_or_else(|| Error::InvalidArgument(format!("air node of zone {:?} is not a model output", zone.id)))
}

/// Steady zone temperatures with every temperature source at `t_outdoor`
/// and the given zone powers (W, keyed by zone id).
pub fn steady_zone_temperatures(
    model: &StateSpaceModel,
    powers: &BTreeMap<String, f64>,
    t_outdoor: f64,
    zones: &[Zone],
) -> Result<BTreeMap<String, f64>> {
    let mut u = DVector::zeros(model.n_inputs());
    for (j, input) in model.inputs().iter().enumerate() {
        if input.kind == InputKind::Temperature {
            u[j] = t_outdoor;
        }
    }
    for (id, &p) in powers {
        let zone = zones
            .iter()
            .find(|z| &z.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown zone {id:?}")))?;
        u[zone_power_input(model, zone)?] += p;
    }
    let y = model.steady_output(&u)?;
    zones
        .iter()
        .map(|zone| Ok((zone.id.clone(), y[zone_output(model, zone)?])))
        .collect()
}

/// `H = ΣP_i / (θ̄ − T_o)` with `θ̄` the mass-weighted mean of the steady zone temperatures.
pub fn overall_h_multizone(
    model: &StateSpaceModel,
    powers: &BTreeMap<String, f64>,
    t_outdoor: f64,
    zones: &[Zone],
) -> Result<f64> {
    let theta = steady_zone_temperatures(model, powers, t_outdoor, zones)?;
    let mean = mean_zone_temperature(zones, &theta, Weighting::Mass)?;
    let total: f64 = powers.values().sum();
    let dt = mean - t_outdoor;
    if dt.abs() <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Degenerate(
            "mean indoor temperature equals the outdoor temperature; H is undefined".into(),
        ));
    }
    Ok(total / dt)
}

/// Equivalent nodal conductance matrix between zone air nodes: the inverse of
/// the static gains from zone powers to zone temperatures.
pub fn zone_conductance_matrix(model: &StateSpaceModel, zones: &[Zone]) -> Result<DMatrix<f64>> {
    let gains = static_gains(model)?;
    let rows = zones
        .iter()
        .map(|z| zone_output(model, z))
        .collect::<Result<Vec<_>>>()?;
    let cols = zones
        .iter()
        .map(|z| zone_power_input(model, z))
        .collect::<Result<Vec<_>>>()?;
    let resistance = gains.select_rows(&rows).select_columns(&cols);
    resistance
        .try_inverse()
        .ok_or_else(|| Error::Singular("zone resistance matrix is singular".into()))
}

/// Two-zone conductance from the nodal matrix with `T_o` as zero reference:
/// `H = [1 1] K θ / θ̄`, with `θ̄` mass-weighted.
pub fn h_from_k(k: &Matrix2<f64>, masses: (f64, f64), temperatures: (f64, f64)) -> Result<f64> {
    let (m1, m2) = masses;
    let (t1, t2) = temperatures;
    if !(m1 >= 0.0 && m2 >= 0.0 && m1 + m2 > 0.0) {
        return Err(Error::InvalidArgument(
            "masses must be non-negative with a positive sum".into(),
        ));
    }
    let mean = (m1 * t1 + m2 * t2) / (m1 + m2);
    if mean == 0.0 {
        return Err(Error::Degenerate("zero mean temperature".into()));
    }
    // Column sums of K; K is not symmetric in general, so K21 and K12 differ.
    let flow = (k[(0, 0)] + k[(1, 0)]) * t1 + (k[(0, 1)] + k[(1, 1)]) * t2;
    Ok(flow / mean)
}

/// Element-wise multizone conductance, `H = (Σ UA_i θ_i) (Σ m_i) / (Σ m_i θ_i)`,
/// with temperatures measured from `T_o`. Diagnostic only.
pub fn elementwise_h(element_ua: &[f64], temperatures: &[f64], masses: &[f64]) -> Result<f64> {
    let n = element_ua.len();
    if n == 0 || temperatures.len() != n || masses.len() != n {
        return Err(Error::InvalidArgument(
            "element conductances, temperatures and masses must have the same non-zero length".into(),
        ));
    }
    let flow: f64 = element_ua.iter().zip(temperatures).map(|(g, t)| g * t).sum();
    let mass: f64 = masses.iter().sum();
    let weighted: f64 = masses.iter().zip(temperatures).map(|(m, t)| m * t).sum();
    if weighted == 0.0 {
        return Err(Error::Degenerate("mass-weighted temperature is zero".into()));
    }
    Ok(flow * mass / weighted)
}

fn trapezoid(series: &[(f64, f64)]) -> f64 {
    series
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Degree-hour conductance `∫P dt / ∫(θ_i − T_o) dt` by trapezoidal quadrature.
///
/// Both series must share timestamps. Repeated timestamps are allowed and
/// encode a step in the power.
pub fn degree_day_h(power: &[(f64, f64)], temp_diff: &[(f64, f64)]) -> Result<f64> {
    if power.len() != temp_diff.len() || power.len() < 2 {
        return Err(Error::InvalidArgument(
            "power and temperature series need the same length of at least two".into(),
        ));
    }
    for (k, (p, d)) in power.iter().zip(temp_diff).enumerate() {
        if p.0 != d.0 {
            return Err(Error::InvalidArgument(format!("timestamps differ at sample {k}")));
        }
        if k > 0 && p.0 < power[k - 1].0 {
            return Err(Error::InvalidArgument(format!("timestamps decrease at sample {k}")));
        }
    }
    let energy = trapezoid(power);
    let degree_seconds = trapezoid(temp_diff);
    if degree_seconds == 0.0 {
        return Err(Error::Degenerate("temperature-difference integral is zero".into()));
    }
    Ok(energy / degree_seconds)
}

/// Areal heat transfer coefficient `H' = H / A`.
pub fn areal_h(h: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidArgument(format!("area must be positive, got {area}")));
    }
    Ok(h / area)
}

/// Gains, reference conductance and partition-of-unity check for one model.
#[derive(Clone, Debug)]
pub struct ConductanceReport {
    pub h: f64,
    pub r: f64,
    pub areal_h: Option<f64>,
    pub static_gains: DMatrix<f64>,
    pub temperature_gain_sums: Vec<f64>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
}

impl ConductanceReport {
    pub fn new(model: &StateSpaceModel, power_input: &str, output: &str, area: Option<f64>) -> Result<Self> {
        let static_gains = static_gains(model)?;
        let h = reference_h_single(model, power_input, output)?;
        Ok(Self {
            h,
            r: 1.0 / h,
            areal_h: area.map(|a| areal_h(h, a)).transpose()?,
            temperature_gain_sums: temperature_gain_sums(model, &static_gains),
            static_gains,
            input_names: model.input_names().map(str::to_string).collect(),
            output_names: model.output_names().to_vec(),
        })
    }

    /// Gain matrix followed by the scalar metrics, as two CSV tables
    /// separated by a blank line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("output");
        for name in &self.input_names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",sum_temperature_gains\n");
        for (i, name) in self.output_names.iter().enumerate() {
            out.push_str(name);
            for j in 0..self.input_names.len() {
                out.push_str(&format!(",{:?}", self.static_gains[(i, j)]));
            }
            out.push_str(&format!(",{:?}\n", self.temperature_gain_sums[i]));
        }
        out.push_str("\nmetric,value\n");
        out.push_str(&format!("H_W_per_K,{:?}\n", self.h));
        out.push_str(&format!("R_K_per_W,{:?}\n", self.r));
        if let Some(a) = self.areal_h {
            out.push_str(&format!("H_areal_W_per_m2K,{a:?}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network_model::{to_state_space, ThermalCircuit};
    use approx::assert_relative_eq;

    fn zone(id: &str, node: &str, area: f64, mass: f64) -> Zone {
        Zone {
            id: id.into(),
            air_node: node.into(),
            floor_area: area,
            air_mass: Some(mass),
            volume: None,
            heater: None,
        }
    }

    fn first_order_model() -> StateSpaceModel {
        let c = ThermalCircuit::from_json(
            r#"{
            "nodes": [{"id": "air", "capacity": 1e6}],
            "branches": [{"id": "g", "from": "REF", "to": "air", "conductance": 100, "temperature_source": "T_o"}],
            "flow_sources": [{"node": "air", "source_name": "P"}]
        }"#,
        )
        .unwrap();
        to_state_space(&c, &["air"]).unwrap()
    }

    #[test]
    fn first_order_gains() {
        let m = first_order_model();
        let k = static_gains(&m).unwrap();
        assert_relative_eq!(k[(0, 0)], 1.0, max_relative = 1e-14);
        assert_relative_eq!(k[(0, 1)], 0.01, max_relative = 1e-14);
        assert_relative_eq!(reference_h_single(&m, "P", "air").unwrap(), 100.0, max_relative = 1e-13);
        assert!(reference_h_single(&m, "T_o", "air").is_err());
    }

    #[test]
    fn divider_gains_are_halves() {
        let c = ThermalCircuit::from_json(
            r#"{
            "nodes": [{"id": "mid", "capacity": 1e4}],
            "branches": [
                {"id": "g1", "from": "REF", "to": "mid", "conductance": 3, "temperature_source": "T_o"},
                {"id": "g2", "from": "REF", "to": "mid", "conductance": 3, "temperature_source": "T_g"}
            ]
        }"#,
        )
        .unwrap();
        let m = to_state_space(&c, &["mid"]).unwrap();
        let k = static_gains(&m).unwrap();
        assert_relative_eq!(k[(0, 0)], 0.5, max_relative = 1e-14);
        assert_relative_eq!(k[(0, 1)], 0.5, max_relative = 1e-14);
        assert_relative_eq!(temperature_gain_sums(&m, &k)[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn series_with_capacitive_middle() {
        let c = ThermalCircuit::from_json(
            r#"{
            "nodes": [{"id": "wall", "capacity": 5e5}, {"id": "air", "capacity": 1e5}],
            "branches": [
                {"id": "g1", "from": "REF", "to": "wall", "conductance": 200, "temperature_source": "T_o"},
                {"id": "g2", "from": "wall", "to": "air", "conductance": 200}
            ],
            "flow_sources": [{"node": "air", "source_name": "P"}]
        }"#,
        )
        .unwrap();
        let m = to_state_space(&c, &["air"]).unwrap();
        assert_relative_eq!(reference_h_single(&m, "P", "air").unwrap(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn mean_temperatures() {
        let zones = [zone("a", "na", 10.0, 1.0), zone("b", "nb", 30.0, 1.0)];
        let t = BTreeMap::from([("a".to_string(), 20.0), ("b".to_string(), 24.0)]);
        assert_relative_eq!(mean_zone_temperature(&zones, &t, Weighting::Area).unwrap(), 23.0);
        assert_relative_eq!(mean_zone_temperature(&zones, &t, Weighting::Mass).unwrap(), 22.0);
        assert_relative_eq!(mean_zone_temperature(&zones[..1], &t, Weighting::Area).unwrap(), 20.0);
        let missing = BTreeMap::from([("a".to_string(), 20.0)]);
        assert!(mean_zone_temperature(&zones, &missing, Weighting::Mass).is_err());
    }

    #[test]
    fn h_from_k_cases() {
        let k = Matrix2::new(30.0, -5.0, -5.0, 20.0);
        assert_relative_eq!(
            h_from_k(&k, (1.0, 1.0), (2.0, 2.0)).unwrap(),
            40.0,
            max_relative = 1e-14
        );
        // m2 → 0 with θ2 = 0
        assert_relative_eq!(
            h_from_k(&k, (3.0, 0.0), (1.5, 0.0)).unwrap(),
            25.0,
            max_relative = 1e-14
        );
        assert!(h_from_k(&k, (1.0, 1.0), (1.0, -1.0)).is_err());
    }

    #[test]
    fn elementwise_cases() {
        assert_relative_eq!(elementwise_h(&[10.0, 20.0], &[3.0, 3.0], &[1.0, 5.0]).unwrap(), 30.0);
        assert_relative_eq!(elementwise_h(&[7.0], &[2.0], &[4.0]).unwrap(), 7.0);
        assert!(elementwise_h(&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn degree_day_cases() {
        let p: Vec<_> = (0..11).map(|k| (k as f64 * 10.0, 1000.0)).collect();
        let d: Vec<_> = (0..11).map(|k| (k as f64 * 10.0, 10.0)).collect();
        assert_relative_eq!(degree_day_h(&p, &d).unwrap(), 100.0);
        let zero: Vec<_> = p.iter().map(|&(t, _)| (t, 0.0)).collect();
        assert_eq!(degree_day_h(&zero, &d).unwrap(), 0.0);
        assert!(degree_day_h(&p, &zero).is_err());
    }

    #[test]
    fn areal() {
        assert_eq!(areal_h(100.0, 50.0).unwrap(), 2.0);
        assert_eq!(areal_h(7.0, 1.0).unwrap(), 7.0);
        assert!(areal_h(1.0, 0.0).is_err());
    }
}
