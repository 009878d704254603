//! Building descriptions shipped with the crate.
//!
//! The material data are representative values, not measurements of real
//! buildings. `models/generate.py` regenerates the files.

use crate::error::Result;
use crate::network_model::ThermalCircuit;

/// Single-zone steel-panel bungalow, 13.5 m² floor.
pub const BUNGALOW: &str = include_str!("../models/bungalow.json");
/// Two-zone masonry house with a ground boundary `T_g`.
pub const HOUSE: &str = include_str!("../models/house.json");
/// Five-node ladder between `T_o` and `T_g`, heated in the middle.
pub const LADDER: &str = include_str!("../models/ladder.json");

/// `(name, document)` for every bundled model.
pub fn bundled() -> [(&'static str, &'static str); 3] {
    [("bungalow", BUNGALOW), ("house", HOUSE), ("ladder", LADDER)]
}

/// Parses a bundled model by name.
pub fn load(name: &str) -> Option<Result<ThermalCircuit>> {
    bundled()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ThermalCircuit::from_json(text))
}
