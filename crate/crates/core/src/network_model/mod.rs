//! Thermal circuits and their reduction to state-space form.
//!
//! A circuit is written in the incidence form `0 = -AᵀGAθ + AᵀGb + f`, where
//! `A` is the branch-by-node incidence matrix, `G` the diagonal matrix of branch
//! conductances, `b` the temperature sources on branches and `f` the heat-flow
//! sources on nodes. Nodes with zero capacity carry no state and are removed by
//! a Schur complement on the nodal conductance matrix.

mod circuit;
mod state_space;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

pub use circuit::{Branch, FlowSource, InputKind, InputSpec, Node, ThermalCircuit, Zone, AIR_DENSITY, REF};
pub use state_space::StateSpaceModel;

use crate::error::{Error, Result};

/// Nodal form of a circuit: `C θ' = -K θ + S u` with `K = AᵀGA`, `S u = AᵀGb + f`.
#[derive(Clone, Debug)]
pub struct NodalSystem {
    /// Branch-by-node incidence: -1 where a branch leaves a node, +1 where it enters.
    pub incidence: DMatrix<f64>,
    pub conductances: DVector<f64>,
    /// `AᵀGA`
    pub conductance_matrix: DMatrix<f64>,
    /// Maps the input vector onto nodal heat flows.
    pub source_matrix: DMatrix<f64>,
    pub capacities: DVector<f64>,
    pub inputs: Vec<InputSpec>,
}

impl NodalSystem {
    pub fn assemble(circuit: &ThermalCircuit) -> Self {
        let n = circuit.nodes.len();
        let m = circuit.branches.len();
        let inputs = circuit.inputs();
        let temperature_index: BTreeMap<&str, usize> = inputs
            .iter()
            .enumerate()
            .filter(|(_, i)| i.kind == InputKind::Temperature)
            .map(|(j, i)| (i.name.as_str(), j))
            .collect();

        let mut incidence = DMatrix::zeros(m, n);
        let mut conductances = DVector::zeros(m);
        // Branch temperature sources: b = E_b u.
        let mut branch_sources = DMatrix::zeros(m, inputs.len());
        for (k, branch) in circuit.branches.iter().enumerate() {
            if let Some(from) = circuit.node_index(&branch.from) {
                incidence[(k, from)] = -1.0;
            }
            let to = circuit.node_index(&branch.to).expect("validated circuit");
            incidence[(k, to)] = 1.0;
            conductances[k] = branch.conductance;
            if let Some(name) = &branch.temperature_source {
                branch_sources[(k, temperature_index[name.as_str()])] = 1.0;
            }
        }

        let g = DMatrix::from_diagonal(&conductances);
        let at_g = incidence.transpose() * &g;
        let conductance_matrix = &at_g * &incidence;
        let mut source_matrix = &at_g * &branch_sources;
        let n_temps = temperature_index.len();
        for (j, flow) in circuit.flow_sources.iter().enumerate() {
            let node = circuit.node_index(&flow.node).expect("validated circuit");
            source_matrix[(node, n_temps + j)] += 1.0;
        }

        let capacities = DVector::from_iterator(n, circuit.nodes.iter().map(|node| node.capacity));
        Self {
            incidence,
            conductances,
            conductance_matrix,
            source_matrix,
            capacities,
            inputs,
        }
    }
}

/// Steady-state node temperatures for constant sources, solving `AᵀGAθ = AᵀGb + f`.
pub fn steady_state(circuit: &ThermalCircuit, source_values: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let system = NodalSystem::assemble(circuit);
    let mut u = DVector::zeros(system.inputs.len());
    for (j, input) in system.inputs.iter().enumerate() {
        u[j] = *source_values
            .get(&input.name)
            .ok_or_else(|| Error::InvalidArgument(format!("no value given for source {:?}", input.name)))?;
    }
    if let Some(extra) = source_values
        .keys()
        .find(|k| !system.inputs.iter().any(|i| &i.name == *k))
    {
        return Err(Error::InvalidArgument(format!("unknown source {extra:?}")));
    }

    let unreached = circuit.unreachable_from_ref();
    if !unreached.is_empty() {
        return Err(Error::Singular(format!(
            "disconnected from {REF}: {}",
            unreached.join(", ")
        )));
    }
    let rhs = &system.source_matrix * u;
    let theta = system
        .conductance_matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("nodal conductance matrix is singular".into()))?;
    Ok(circuit
        .nodes
        .iter()
        .zip(theta.iter())
        .map(|(node, &t)| (node.id.clone(), t))
        .collect())
}

/// Reduces a circuit to a state-space model whose states are the capacitive
/// nodes and whose outputs are the temperatures of `outputs`.
pub fn to_state_space(circuit: &ThermalCircuit, outputs: &[&str]) -> Result<StateSpaceModel> {
    let system = NodalSystem::assemble(circuit);
    let n = circuit.nodes.len();
    let nu = system.inputs.len();
    let states: Vec<usize> = (0..n).filter(|&i| system.capacities[i] > 0.0).collect();
    let algebraic: Vec<usize> = (0..n).filter(|&i| system.capacities[i] == 0.0).collect();
    if states.is_empty() {
        return Err(Error::InvalidArgument("circuit has no capacitive node".into()));
    }
    let output_nodes = outputs
        .iter()
        .map(|id| {
            circuit
                .node_index(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown output node {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = &system.conductance_matrix;
    let s = &system.source_matrix;
    let kcc = k.select_rows(&states).select_columns(&states);
    let sc = s.select_rows(&states);
    let ns = states.len();

    // θz = Kzz⁻¹ (S_z u − K_zc θc) = −Z θc + W u
    let (z_map, w_map) = if algebraic.is_empty() {
        (DMatrix::zeros(0, ns), DMatrix::zeros(0, nu))
    } else {
        let kzz = k.select_rows(&algebraic).select_columns(&algebraic);
        let kzc = k.select_rows(&algebraic).select_columns(&states);
        let sz = s.select_rows(&algebraic);
        let lu = kzz.lu();
        let singular = || {
            let names: Vec<&str> = algebraic.iter().map(|&i| circuit.nodes[i].id.as_str()).collect();
            Error::Singular(format!(
                "zero-capacity nodes cannot be eliminated (no conductive path): {}",
                names.join(", ")
            ))
        };
        let z_map = lu.solve(&kzc).ok_or_else(singular)?;
        let w_map = lu.solve(&sz).ok_or_else(singular)?;
        (z_map, w_map)
    };

    let (k_red, s_red) = if algebraic.is_empty() {
        (kcc, sc)
    } else {
        let kcz = k.select_rows(&states).select_columns(&algebraic);
        (kcc - &kcz * &z_map, sc - &kcz * &w_map)
    };

    let inv_cap = DMatrix::from_diagonal(&DVector::from_iterator(
        ns,
        states.iter().map(|&i| 1.0 / system.capacities[i]),
    ));
    let a = -(&inv_cap * k_red);
    let b = &inv_cap * s_red;

    let ny = output_nodes.len();
    let mut c = DMatrix::zeros(ny, ns);
    let mut d = DMatrix::zeros(ny, nu);
    for (row, &node) in output_nodes.iter().enumerate() {
        if let Some(col) = states.iter().position(|&i| i == node) {
            c[(row, col)] = 1.0;
        } else {
            let r = algebraic.iter().position(|&i| i == node).expect("node is algebraic");
            c.row_mut(row).copy_from(&(-z_map.row(r)));
            d.row_mut(row).copy_from(&w_map.row(r));
        }
    }

    StateSpaceModel::new(
        a,
        b,
        c,
        d,
        states.iter().map(|&i| circuit.nodes[i].id.clone()).collect(),
        system.inputs,
        outputs.iter().map(|s| s.to_string()).collect(),
    )
}
