use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the zero-potential datum node. Branches may start from it.
pub const REF: &str = "REF";

/// Air density used to derive zone air mass from volume, kg/m³.
pub const AIR_DENSITY: f64 = 1.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    /// Heat capacity, J/K. Zero-capacity nodes are eliminated algebraically.
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: String,
    /// Upstream node id, or [`REF`].
    pub from: String,
    pub to: String,
    /// W/K
    pub conductance: f64,
    /// Temperature source in series with the conductance, oriented from `from` to `to`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSource {
    pub node: String,
    pub source_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub id: String,
    pub air_node: String,
    /// m²
    pub floor_area: f64,
    /// kg. Filled from `volume` at [`AIR_DENSITY`] when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_mass: Option<f64>,
    /// m³
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    /// Flow source that heats the zone. Defaults to the flow source on the air node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heater: Option<String>,
}

impl Zone {
    /// Air mass in kg. Always present on a validated circuit.
    pub fn mass(&self) -> f64 {
        self.air_mass
            .or_else(|| self.volume.map(|v| AIR_DENSITY * v))
            .unwrap_or(f64::NAN)
    }
}

/// Whether an input of the state-space model is a temperature or a heat-flow source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Temperature,
    Flow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub name: String,
    pub kind: InputKind,
    /// Node a flow source injects into; `None` for temperature sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
}

impl InputSpec {
    pub fn temperature(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: InputKind::Temperature,
            node: None,
        }
    }

    pub fn flow(name: impl Into<String>, node: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: InputKind::Flow,
            node: Some(node.into()),
        }
    }
}

/// RC thermal circuit of a building: capacities on nodes, conductances on
/// branches, temperature sources on branches and heat-flow sources on nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalCircuit {
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub flow_sources: Vec<FlowSource>,
    #[serde(default)]
    pub zones: Vec<Zone>,
}

impl ThermalCircuit {
    /// Parses and validates a building description document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut circuit: ThermalCircuit = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        for zone in &mut circuit.zones {
            if zone.air_mass.is_none() {
                zone.air_mass = zone.volume.map(|v| AIR_DENSITY * v);
            }
        }
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn to_json(&self) -> String {
        // Serialization of plain structs with finite floats cannot fail.
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Temperature source names in order of first appearance on a branch.
    pub fn temperature_sources(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.branches
            .iter()
            .filter_map(|b| b.temperature_source.as_ref())
            .filter(|name| seen.insert(name.as_str()))
            .cloned()
            .collect()
    }

    /// Model inputs: temperature sources first, then flow sources, each in declaration order.
    pub fn inputs(&self) -> Vec<InputSpec> {
        let temps = self.temperature_sources().into_iter().map(InputSpec::temperature);
        let flows = self
            .flow_sources
            .iter()
            .map(|f| InputSpec::flow(f.source_name.clone(), f.node.clone()));
        temps.chain(flows).collect()
    }

    /// The first flow source attached to `node`, if any.
    pub fn flow_source_at(&self, node: &str) -> Option<&FlowSource> {
        self.flow_sources.iter().find(|f| f.node == node)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("nodes", "circuit has no nodes"));
        }
        let mut ids = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let path = format!("nodes[{i}]");
            if node.id == REF {
                return Err(Error::invalid(path, format!("node id {REF:?} is reserved")));
            }
            if ids.insert(node.id.as_str(), i).is_some() {
                return Err(Error::invalid(path, format!("duplicate node id {:?}", node.id)));
            }
            if !(node.capacity.is_finite() && node.capacity >= 0.0) {
                return Err(Error::invalid(
                    format!("{path}.capacity"),
                    format!("capacity must be finite and non-negative, got {}", node.capacity),
                ));
            }
        }

        let mut branch_ids = BTreeSet::new();
        for (k, branch) in self.branches.iter().enumerate() {
            let path = format!("branches[{k}]");
            if !branch_ids.insert(branch.id.as_str()) {
                return Err(Error::invalid(path, format!("duplicate branch id {:?}", branch.id)));
            }
            if branch.from != REF && !ids.contains_key(branch.from.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.from"),
                    format!("unknown node {:?}", branch.from),
                ));
            }
            if !ids.contains_key(branch.to.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.to"),
                    format!("unknown node {:?}", branch.to),
                ));
            }
            if branch.from == branch.to {
                return Err(Error::invalid(path, "branch connects a node to itself"));
            }
            if !(branch.conductance.is_finite() && branch.conductance > 0.0) {
                return Err(Error::invalid(
                    format!("{path}.conductance"),
                    format!("conductance must be strictly positive, got {}", branch.conductance),
                ));
            }
        }

        let temperature_names: BTreeSet<String> = self.temperature_sources().into_iter().collect();
        let mut flow_names = BTreeSet::new();
        for (j, source) in self.flow_sources.iter().enumerate() {
            let path = format!("flow_sources[{j}]");
            if !ids.contains_key(source.node.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.node"),
                    format!("unknown node {:?}", source.node),
                ));
            }
            if temperature_names.contains(&source.source_name) {
                return Err(Error::invalid(
                    format!("{path}.source_name"),
                    format!("{:?} is already a temperature source", source.source_name),
                ));
            }
            if !flow_names.insert(source.source_name.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.source_name"),
                    format!("duplicate flow source {:?}", source.source_name),
                ));
            }
        }

        let mut zone_ids = BTreeSet::new();
        let mut air_nodes = BTreeSet::new();
        for (z, zone) in self.zones.iter().enumerate() {
            let path = format!("zones[{z}]");
            if !zone_ids.insert(zone.id.as_str()) {
                return Err(Error::invalid(path, format!("duplicate zone id {:?}", zone.id)));
            }
            let Some(&node) = ids.get(zone.air_node.as_str()) else {
                return Err(Error::invalid(
                    format!("{path}.air_node"),
                    format!("unknown node {:?}", zone.air_node),
                ));
            };
            if !air_nodes.insert(zone.air_node.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.air_node"),
                    format!("node {:?} is the air node of another zone", zone.air_node),
                ));
            }
            if self.nodes[node].capacity <= 0.0 {
                return Err(Error::invalid(
                    format!("{path}.air_node"),
                    format!("zone air node {:?} must have positive capacity", zone.air_node),
                ));
            }
            if !(zone.floor_area.is_finite() && zone.floor_area > 0.0) {
                return Err(Error::invalid(
                    format!("{path}.floor_area"),
                    "floor area must be strictly positive",
                ));
            }
            let mass = zone.mass();
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::invalid(
                    format!("{path}.air_mass"),
                    "zone needs a strictly positive air_mass or volume",
                ));
            }
            if let Some(heater) = &zone.heater {
                if !flow_names.contains(heater.as_str()) {
                    return Err(Error::invalid(
                        format!("{path}.heater"),
                        format!("unknown flow source {heater:?}"),
                    ));
                }
            }
        }

        if !self.branches.iter().any(|b| b.from == REF) {
            return Err(Error::invalid("branches", format!("no branch touches {REF}")));
        }
        let unreached = self.unreachable_from_ref();
        if !unreached.is_empty() {
            return Err(Error::invalid(
                "branches",
                format!("nodes without a conductive path to {REF}: {}", unreached.join(", ")),
            ));
        }
        Ok(())
    }

    /// Node ids that have no conductive path to the reference node.
    pub fn unreachable_from_ref(&self) -> Vec<String> {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let n = self.nodes.len();
        // REF gets index n.
        let at = |id: &str| if id == REF { Some(n) } else { index.get(id).copied() };
        let mut adjacency = vec![Vec::new(); n + 1];
        for b in &self.branches {
            if let (Some(f), Some(t)) = (at(&b.from), at(&b.to)) {
                adjacency[f].push(t);
                adjacency[t].push(f);
            }
        }
        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([n]);
        seen[n] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        self.nodes
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| !s)
            .map(|(node, _)| node.id.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST_ORDER: &str = r#"{
        "nodes": [{"id": "air", "capacity": 1e6}],
        "branches": [{"id": "g", "from": "REF", "to": "air", "conductance": 100, "temperature_source": "T_o"}],
        "flow_sources": [{"node": "air", "source_name": "P"}],
        "zones": [{"id": "z", "air_node": "air", "floor_area": 10, "volume": 25}]
    }"#;

    #[test]
    fn parses_minimal_circuit() {
        let c = ThermalCircuit::from_json(FIRST_ORDER).unwrap();
        assert_eq!(c.nodes.len(), 1);
        assert_eq!(c.branches.len(), 1);
        assert_eq!(c.zones[0].air_mass, Some(30.0));
        let names: Vec<_> = c.inputs().into_iter().map(|i| i.name).collect();
        assert_eq!(names, ["T_o", "P"]);
    }

    #[test]
    fn dangling_reference_is_named() {
        let text = FIRST_ORDER.replace(r#""to": "air""#, r#""to": "x9""#);
        let err = ThermalCircuit::from_json(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x9"), "{msg}");
        assert!(msg.contains("branches[0].to"), "{msg}");
    }

    #[test]
    fn schema_errors_carry_path() {
        let text = FIRST_ORDER.replace(r#""conductance": 100"#, r#""conductance": "big""#);
        let err = ThermalCircuit::from_json(&text).unwrap_err();
        match err {
            Error::Schema { path, .. } => assert_eq!(path, "branches[0].conductance"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_values() {
        let dup = FIRST_ORDER.replace(
            r#"[{"id": "air", "capacity": 1e6}]"#,
            r#"[{"id": "air", "capacity": 1e6}, {"id": "air", "capacity": 1}]"#,
        );
        assert!(ThermalCircuit::from_json(&dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate node"));

        let neg = FIRST_ORDER.replace(r#""conductance": 100"#, r#""conductance": 0"#);
        assert!(ThermalCircuit::from_json(&neg).is_err());

        let clash = FIRST_ORDER.replace(r#""source_name": "P""#, r#""source_name": "T_o""#);
        assert!(ThermalCircuit::from_json(&clash)
            .unwrap_err()
            .to_string()
            .contains("already"));
    }

    #[test]
    fn detects_floating_component() {
        let text = r#"{
            "nodes": [{"id": "a", "capacity": 1}, {"id": "b", "capacity": 1}, {"id": "c", "capacity": 1}],
            "branches": [
                {"id": "g0", "from": "REF", "to": "a", "conductance": 1},
                {"id": "g1", "from": "b", "to": "c", "conductance": 1}
            ]
        }"#;
        let msg = ThermalCircuit::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("b, c"), "{msg}");
    }

    #[test]
    fn zone_without_mass_is_rejected() {
        let text = FIRST_ORDER.replace(r#", "volume": 25"#, "");
        assert!(ThermalCircuit::from_json(&text).is_err());
    }
}
