//! Reference implementations shared by the integration tests. They read the
//! JSON documents directly and stamp the full nodal equations without going
//! through the library's assembly or reduction.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qubdoe::error_budget::MeasurementErrors;
use qubdoe::modal::step_response;
use qubdoe::qub::{QubProtocol, QubSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

/// Branch ends (None for the reference), conductance, temperature source.
type Stamp = (Option<usize>, Option<usize>, f64, Option<String>);

pub const HOUR: f64 = 3600.0;

pub fn bundled() -> Vec<(&'static str, &'static str)> {
    qubdoe::models::bundled().to_vec()
}

/// A connected random circuit: a tree over the nodes, a few extra branches,
/// `T_o` on node 0, optionally `T_g` on the last node, one heater.
pub fn random_circuit() -> impl Strategy<Value = String> {
    (1usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 1e3f64..1e7], n),
            prop::collection::vec((0usize..64, 0.5f64..500.0), n),
            prop::collection::vec((0usize..64, 0usize..64, 0.5f64..500.0), 0..4),
            any::<bool>(),
            0usize..n,
        )
            .prop_map(move |(mut caps, tree, extra, ground, heater)| {
                caps[0] = caps[0].max(1e5);
                let id = |i: usize| format!("n{i}");
                let mut branches = vec![json!({"id": "o", "from": "REF", "to": id(0), "conductance": 40.0, "temperature_source": "T_o"})];
                for (i, (parent, g)) in tree.iter().enumerate().skip(1) {
                    branches.push(json!({"id": format!("t{i}"), "from": id(parent % i), "to": id(i), "conductance": g}));
                }
                for (k, (a, b, g)) in extra.iter().enumerate() {
                    let (a, b) = (a % n, b % n);
                    if a != b {
                        branches.push(json!({"id": format!("x{k}"), "from": id(a), "to": id(b), "conductance": g}));
                    }
                }
                if ground {
                    branches.push(json!({"id": "gr", "from": "REF", "to": id(n - 1), "conductance": 25.0, "temperature_source": "T_g"}));
                }
                let nodes: Vec<_> = caps.iter().enumerate().map(|(i, c)| json!({"id": id(i), "capacity": c})).collect();
                json!({
                    "nodes": nodes,
                    "branches": branches,
                    "flow_sources": [{"node": id(heater), "source_name": "P"}],
                })
                .to_string()
            })
    })
}

/// Full nodal description `diag(c) θ' = −K θ + S u`, with `u` indexed by source name.
pub struct Nodal {
    pub ids: Vec<String>,
    pub capacity: Vec<f64>,
    pub k: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub sources: Vec<String>,
    /// Output weights over nodes for the indoor temperature.
    pub indoor: Vec<f64>,
    /// Heating split over sources for one watt in total.
    pub heating: BTreeMap<String, f64>,
    pub flows: Vec<String>,
}

impl Nodal {
    pub fn parse(text: &str) -> Self {
        let doc: Value = serde_json::from_str(text).unwrap();
        let nodes = doc["nodes"].as_array().unwrap();
        let ids: Vec<String> = nodes.iter().map(|n| n["id"].as_str().unwrap().to_string()).collect();
        let capacity: Vec<f64> = nodes.iter().map(|n| n["capacity"].as_f64().unwrap()).collect();
        let index = |id: &str| ids.iter().position(|x| x == id);
        let n = ids.len();

        let mut sources: Vec<String> = Vec::new();
        let mut stamps: Vec<Stamp> = Vec::new();
        for b in doc["branches"].as_array().unwrap() {
            let src = b.get("temperature_source").and_then(Value::as_str).map(str::to_string);
            if let Some(s) = &src {
                if !sources.contains(s) {
                    sources.push(s.clone());
                }
            }
            stamps.push((
                index(b["from"].as_str().unwrap()),
                index(b["to"].as_str().unwrap()),
                b["conductance"].as_f64().unwrap(),
                src,
            ));
        }
        let flows: Vec<(String, usize)> = doc
            .get("flow_sources")
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .map(|f| {
                        (
                            f["source_name"].as_str().unwrap().to_string(),
                            index(f["node"].as_str().unwrap()).unwrap(),
                        )
                    })
                    .collect()
            })
            .unwrap_or_default();
        sources.extend(flows.iter().map(|(name, _)| name.clone()));

        let mut k = DMatrix::zeros(n, n);
        let mut s = DMatrix::zeros(n, sources.len());
        for (from, to, g, src) in &stamps {
            if let Some(a) = from {
                k[(*a, *a)] += g;
            }
            if let Some(b) = to {
                k[(*b, *b)] += g;
            }
            if let (Some(a), Some(b)) = (from, to) {
                k[(*a, *b)] -= g;
                k[(*b, *a)] -= g;
            }
            if let Some(name) = src {
                let j = sources.iter().position(|x| x == name).unwrap();
                // the source raises the potential from `from` towards `to`
                if let Some(b) = to {
                    s[(*b, j)] += g;
                }
                if let Some(a) = from {
                    s[(*a, j)] -= g;
                }
            }
        }
        for (name, node) in &flows {
            let j = sources.iter().position(|x| x == name).unwrap();
            s[(*node, j)] += 1.0;
        }

        let mut indoor = vec![0.0; n];
        let mut heating = BTreeMap::new();
        match doc.get("zones").and_then(Value::as_array) {
            Some(zones) if !zones.is_empty() => {
                let mass = |z: &Value| {
                    z.get("air_mass")
                        .and_then(Value::as_f64)
                        .unwrap_or_else(|| 1.2 * z["volume"].as_f64().unwrap())
                };
                let total: f64 = zones.iter().map(mass).sum();
                for z in zones {
                    let w = mass(z) / total;
                    let air = z["air_node"].as_str().unwrap();
                    indoor[index(air).unwrap()] += w;
                    let heater = match z.get("heater").and_then(Value::as_str) {
                        Some(h) => h.to_string(),
                        None => flows.iter().find(|(_, node)| ids[*node] == air).unwrap().0.clone(),
                    };
                    *heating.entry(heater).or_insert(0.0) += w;
                }
            }
            _ => {
                assert_eq!(flows.len(), 1);
                indoor[flows[0].1] = 1.0;
                heating.insert(flows[0].0.clone(), 1.0);
            }
        }
        let flows = flows.into_iter().map(|(name, _)| name).collect();
        Self {
            ids,
            capacity,
            k,
            s,
            sources,
            indoor,
            heating,
            flows,
        }
    }

    pub fn input(&self, values: &BTreeMap<String, f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.sources.len(),
            self.sources.iter().map(|s| *values.get(s).unwrap_or(&0.0)),
        )
    }

    /// All temperature sources at `t_out` and `power` watts split over the heaters.
    pub fn qub_input(&self, t_out: f64, power: f64) -> DVector<f64> {
        let mut values = BTreeMap::new();
        for name in &self.sources {
            let v = match self.heating.get(name) {
                Some(w) => w * power,
                None if self.is_flow(name) => 0.0,
                None => t_out,
            };
            values.insert(name.clone(), v);
        }
        self.input(&values)
    }

    pub fn is_flow(&self, name: &str) -> bool {
        self.flows.iter().any(|f| f == name)
    }

    pub fn steady(&self, u: &DVector<f64>) -> DVector<f64> {
        self.k.clone().lu().solve(&(&self.s * u)).unwrap()
    }

    pub fn indoor_of(&self, theta: &DVector<f64>) -> f64 {
        self.indoor.iter().zip(theta.iter()).map(|(w, t)| w * t).sum()
    }

    /// Implicit Euler on the unreduced circuit from `theta0` under constant
    /// `u`; returns the indoor temperature after each of `steps` steps.
    pub fn implicit_euler(&self, theta0: &DVector<f64>, u: &DVector<f64>, dt: f64, steps: usize) -> Vec<f64> {
        let n = self.ids.len();
        let c_dt = DVector::from_iterator(n, self.capacity.iter().map(|c| c / dt));
        let lhs = DMatrix::from_diagonal(&c_dt) + &self.k;
        let inv = lhs.try_inverse().unwrap();
        let step = &inv * DMatrix::from_diagonal(&c_dt);
        let forcing = &inv * (&self.s * u);
        let mut theta = theta0.clone();
        let mut next = DVector::zeros(n);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            next.copy_from(&forcing);
            next.gemv(1.0, &step, &theta, 1.0);
            std::mem::swap(&mut theta, &mut next);
            out.push(self.indoor_of(&theta));
        }
        out
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Central difference with one Richardson step.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1e-300);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Largest deviation between the exact step response of the indoor
/// temperature and implicit Euler on the unreduced circuit at
/// `dt = τ_min/100`, over `min(5 τ_max, 48 h)`, relative to the largest
/// response. Starts at rest and applies 1 kW.
pub fn integrator_deviation(text: &str) -> (f64, usize) {
    let circuit = qubdoe::network_model::ThermalCircuit::from_json(text).unwrap();
    let system = QubSystem::from_circuit(&circuit).unwrap();
    let taus = system.propagator().basis().time_constants();
    let tau_min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau_max = taus.iter().cloned().fold(0.0, f64::max);
    let dt = tau_min / 100.0;
    let steps = ((5.0 * tau_max).min(48.0 * HOUR) / dt).ceil() as usize;

    let protocol = QubProtocol {
        t_outdoor: 0.0,
        ..QubProtocol::default()
    };
    let u = system.input_vector(&protocol, 1000.0).unwrap();
    let x0 = DVector::zeros(system.model().n_states());
    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * dt).collect();
    let exact = step_response(system.model(), &u, &x0, &times).unwrap();

    let oracle = Nodal::parse(text);
    let theta0 = DVector::zeros(oracle.ids.len());
    let ie = oracle.implicit_euler(&theta0, &oracle.qub_input(0.0, 1000.0), dt, steps);
    let scale = exact.iter().fold(0.0f64, |m, y| m.max(y[0].abs()));
    let worst = exact.iter().zip(&ie).fold(0.0f64, |m, (y, z)| m.max((y[0] - z).abs()));
    (worst / scale, steps)
}

/// `[α_h, α_c, P_h, P_c, ΔT_h, ΔT_c]`
pub type Point = [f64; 6];

pub fn h_of(x: &Point) -> f64 {
    let [ah, ac, ph, pc, th, tc] = *x;
    (ph * ac - pc * ah) / (th * ac - tc * ah)
}

/// Sample standard deviation of H under independent Gaussian perturbations.
pub fn monte_carlo_sigma(x: &Point, e: &MeasurementErrors, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sd = [e.eps_alpha, e.eps_alpha, e.eps_p, e.eps_p, e.eps_dt, e.eps_dt];
    let normals: Vec<Normal<f64>> = sd.iter().map(|s| Normal::new(0.0, *s).unwrap()).collect();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut y = *x;
        for (v, n) in y.iter_mut().zip(&normals) {
            *v += n.sample(&mut rng);
        }
        let h = h_of(&y);
        sum += h;
        sum2 += h * h;
    }
    let n = samples as f64;
    ((sum2 - sum * sum / n) / (n - 1.0)).sqrt()
}

/// Heats for the first half of the horizon and lets the building cool for
/// the second, so the stored energy returns to nearly zero.
pub fn degree_day_ratio(text: &str, horizon_factor: f64) -> (f64, f64) {
    let system = QubSystem::from_circuit(&qubdoe::network_model::ThermalCircuit::from_json(text).unwrap()).unwrap();
    let tau_max = system
        .propagator()
        .basis()
        .time_constants()
        .into_iter()
        .fold(0.0, f64::max);
    let horizon = horizon_factor * tau_max;
    let protocol = QubProtocol::default();
    let x0 = DVector::zeros(system.model().n_states());
    let on = system
        .propagator()
        .trajectory(&x0, &system.input_vector(&protocol, 1000.0).unwrap());
    let half = 0.5 * horizon;
    let x1 = on.state_at(half);
    let off = system
        .propagator()
        .trajectory(&x1, &system.input_vector(&protocol, 0.0).unwrap());
    let n = 200_000;
    let dt = half / n as f64;
    let mut power = Vec::with_capacity(2 * n + 2);
    let mut diff = Vec::with_capacity(2 * n + 2);
    for k in 0..=n {
        let t = k as f64 * dt;
        power.push((t, 1000.0));
        diff.push((t, on.output_at(t)[0]));
    }
    for k in 0..=n {
        let t = k as f64 * dt;
        power.push((half + t, 0.0));
        diff.push((half + t, off.output_at(t)[0]));
    }
    (
        qubdoe::conductance::degree_day_h(&power, &diff).unwrap(),
        system.reference_h().unwrap(),
    )
}
