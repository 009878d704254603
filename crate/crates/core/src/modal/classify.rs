use std::fmt;

use super::ModalDecomposition;
use crate::error::{Error, Result};

/// Groups of exponential modes at the time scale of a QUB experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeClass {
    /// Fast, significant amplitude: acts as a step at the experiment time scale.
    A,
    /// Settles within the phase, negligible amplitude.
    B,
    /// Medium, significant amplitude: shapes the exponential the slopes are taken on.
    C,
    /// Medium, negligible amplitude.
    D,
    /// Slow compared with the experiment, any amplitude.
    E,
}

impl fmt::Display for ModeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            ModeClass::A => "a",
            ModeClass::B => "b",
            ModeClass::C => "c",
            ModeClass::D => "d",
            ModeClass::E => "e",
        };
        f.write_str(c)
    }
}

/// Thresholds of the mode classes. A mode is considered settled after
/// `settling_factor · τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeThresholds {
    /// Fraction of the largest |amplitude| below which a mode is insignificant.
    pub amplitude_cutoff: f64,
    pub settling_factor: f64,
    /// Fast modes settle within `fast_fraction · t_qub`.
    pub fast_fraction: f64,
    /// Slow modes need more than `slow_multiple · t_qub` to settle.
    pub slow_multiple: f64,
}

impl Default for ModeThresholds {
    fn default() -> Self {
        Self {
            amplitude_cutoff: 0.01,
            settling_factor: 4.0,
            fast_fraction: 0.2,
            slow_multiple: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifiedMode {
    pub mode: usize,
    pub tau: f64,
    pub amplitude: f64,
    pub class: ModeClass,
}

impl ModeThresholds {
    pub fn class_of(&self, tau: f64, relative_amplitude: f64, t_qub: f64) -> ModeClass {
        let settle = self.settling_factor * tau;
        let significant = relative_amplitude >= self.amplitude_cutoff;
        if settle > self.slow_multiple * t_qub {
            ModeClass::E
        } else if significant {
            if settle <= self.fast_fraction * t_qub {
                ModeClass::A
            } else {
                ModeClass::C
            }
        } else if settle <= t_qub {
            ModeClass::B
        } else {
            ModeClass::D
        }
    }

    /// Labels every mode of `output` using the total coefficient of its exponential.
    pub fn classify(&self, decomp: &ModalDecomposition, output: usize, t_qub: f64) -> Result<Vec<ClassifiedMode>> {
        if !(t_qub > 0.0 && t_qub.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_qub must be positive, got {t_qub}")));
        }
        if output >= decomp.output_names.len() {
            return Err(Error::InvalidArgument(format!("no output {output}")));
        }
        let amplitudes: Vec<f64> = (0..decomp.n_modes()).map(|i| decomp.amplitude(output, i)).collect();
        let max = amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        Ok(decomp
            .time_constants
            .iter()
            .zip(&amplitudes)
            .enumerate()
            .map(|(mode, (&tau, &amplitude))| {
                let rel = if max > 0.0 { amplitude.abs() / max } else { 0.0 };
                ClassifiedMode {
                    mode,
                    tau,
                    amplitude,
                    class: self.class_of(tau, rel, t_qub),
                }
            })
            .collect())
    }
}

/// Classifies the modes of the first output with the default thresholds.
pub fn classify_modes(decomp: &ModalDecomposition, t_qub: f64) -> Result<Vec<ClassifiedMode>> {
    ModeThresholds::default().classify(decomp, 0, t_qub)
}
