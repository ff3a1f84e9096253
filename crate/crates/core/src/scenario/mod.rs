//! Scenario descriptions: a circuit with its integration settings, probes,
//! and analysis directives, read from the netlist language or built from a
//! named preset.

mod parse;
mod presets;
mod print;

pub use parse::parse;
pub use presets::{
    load_preset, preset_names, preset_recipe, BridgeRecipe, DualRecipe, LoadSpec, Recipe, PRESETS,
};
pub use print::print;

use crate::analysis::MismatchModel;
use crate::circuit::Circuit;
use crate::mna::{IntegrationSettings, ProbeSpec};

/// Netlist text and where it came from (file path or preset name).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSource {
    pub text: String,
    pub origin: String,
}

impl ScenarioSource {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Self {
        ScenarioSource {
            text: text.into(),
            origin: origin.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Transient,
    /// Frequency sweep of every control signal.
    Sweep { frequencies: Vec<f64> },
    MonteCarlo(MismatchModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub circuit: Circuit,
    pub settings: IntegrationSettings,
    pub probes: Vec<ProbeSpec>,
    pub analyses: Vec<Analysis>,
}

impl Scenario {
    pub fn sweep_frequencies(&self) -> Option<&[f64]> {
        self.analyses.iter().find_map(|a| match a {
            Analysis::Sweep { frequencies } => Some(frequencies.as_slice()),
            _ => None,
        })
    }

    pub fn mismatch_model(&self) -> Option<&MismatchModel> {
        self.analyses.iter().find_map(|a| match a {
            Analysis::MonteCarlo(m) => Some(m),
            _ => None,
        })
    }
}
