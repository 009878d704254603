//! Design of experiments for QUB (Quick U-Building) tests.
//!
//! The pipeline goes from an RC thermal circuit of a building to a linear
//! state-space model, simulates the two-pulse QUB protocol on it, estimates the
//! heat transfer coefficient from the heating and cooling slopes, and sweeps
//! heating power and duration to find the experiment with the smallest
//! expected error.
//!
//! ```no_run
//! use qubdoe::network_model::ThermalCircuit;
//! use qubdoe::qub::{QubProtocol, QubSystem};
//!
//! let text = std::fs::read_to_string("bungalow.json").unwrap();
//! let circuit = ThermalCircuit::from_json(&text).unwrap();
//! let system = QubSystem::from_circuit(&circuit).unwrap();
//! let protocol = QubProtocol { p0: 900.0, p_heat: 2000.0, ..QubProtocol::default() };
//! let estimate = system.estimate(&protocol).unwrap();
//! println!("H_QUB = {:.1} W/K", estimate.h_qub);
//! ```

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conductance;
pub mod doe;
pub mod error;
pub mod error_budget;
pub mod modal;
pub mod models;
pub mod network_model;
pub mod qub;
mod roots;

pub use error::{Error, Result};
