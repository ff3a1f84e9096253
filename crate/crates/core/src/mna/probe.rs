use crate::circuit::{Circuit, NodeId};
use crate::error::{Error, Result};

use super::StepView;

/// A quantity recorded during a transient run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeSpec {
    /// Node voltage to ground.
    Node(String),
    /// Voltage of the first node relative to the second.
    Pair(String, String),
    /// Branch current of a component, positive into its first terminal.
    Current(String),
}

impl ProbeSpec {
    /// CSV column name: `V_<node>`, `V_<a>_<b>`, or `I_<component>`.
    pub fn column_name(&self) -> String {
        match self {
            ProbeSpec::Node(n) => format!("V_{n}"),
            ProbeSpec::Pair(a, b) => format!("V_{a}_{b}"),
            ProbeSpec::Current(c) => format!("I_{c}"),
        }
    }

    pub(crate) fn resolve(&self, circuit: &Circuit) -> Result<ResolvedProbe> {
        let node = |label: &str| {
            circuit
                .find_node(label)
                .ok_or_else(|| Error::InvalidParameter(format!("probe references undeclared node '{label}'")))
        };
        Ok(match self {
            ProbeSpec::Node(n) => ResolvedProbe::Node(node(n)?),
            ProbeSpec::Pair(a, b) => ResolvedProbe::Pair(node(a)?, node(b)?),
            ProbeSpec::Current(c) => ResolvedProbe::Current(circuit.component_index(c).ok_or_else(|| {
                Error::InvalidParameter(format!("probe references unknown component '{c}'"))
            })?),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum ResolvedProbe {
    Node(NodeId),
    Pair(NodeId, NodeId),
    Current(usize),
}

impl ResolvedProbe {
    pub fn sample(&self, view: &StepView<'_>) -> f64 {
        match *self {
            ResolvedProbe::Node(n) => view.node_voltage(n),
            ResolvedProbe::Pair(a, b) => view.node_voltage(a) - view.node_voltage(b),
            ResolvedProbe::Current(i) => view.component_current(i),
        }
    }
}
