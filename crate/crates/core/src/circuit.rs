//! Netlist data model: nodes, components, and control signals.

use std::collections::BTreeMap;

use crate::devices::{ControlSignal, DriverSpec};
use crate::error::{Error, Result};

/// Index into a circuit's node table. Node 0 is ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);

    pub fn is_ground(self) -> bool {
        self.0 == 0
    }
}

/// Label given to node 0. `GND` is accepted as a synonym when resolving.
pub const GROUND_LABEL: &str = "0";

/// Linear capacitance loss with voltage, clamped at the rated voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derating {
    /// Fractional capacitance loss per volt.
    pub per_volt: f64,
    pub rated_voltage: f64,
}

/// Time program of an ideal voltage source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSignal {
    Dc { level: f64 },
    /// Zero up to and including `at`, `level` afterwards.
    Step { level: f64, at: f64 },
    /// Zero up to `at`, then rising at `slew` V/s until `level` is reached.
    Ramp { level: f64, slew: f64, at: f64 },
}

impl SourceSignal {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            SourceSignal::Dc { level } => level,
            SourceSignal::Step { level, at } => {
                if t > at {
                    level
                } else {
                    0.0
                }
            }
            SourceSignal::Ramp { level, slew, at } => {
                if t <= at {
                    0.0
                } else {
                    let v = slew * (t - at);
                    if level >= 0.0 {
                        v.min(level)
                    } else {
                        (-v).max(level)
                    }
                }
            }
        }
    }

    /// Time of a jump discontinuity, if the program has one.
    pub fn discontinuity(&self) -> Option<f64> {
        match *self {
            SourceSignal::Step { at, .. } => Some(at),
            _ => None,
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            SourceSignal::Dc { level }
            | SourceSignal::Step { level, .. }
            | SourceSignal::Ramp { level, .. } => level,
        }
    }
}

/// How a switch is commanded: a named control signal, optionally inverted,
/// passed through a gate driver with turn-on/turn-off latency.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchDrive {
    pub control: String,
    pub inverted: bool,
    pub driver: DriverSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    Resistor {
        resistance: f64,
    },
    Capacitor {
        capacitance: f64,
        derating: Option<Derating>,
    },
    IdealSource {
        signal: SourceSignal,
    },
    /// Ideal source behind an internal resistance, with a capacitance across
    /// the output terminals.
    ConverterSource {
        open_circuit_voltage: f64,
        internal_resistance: f64,
        parallel_capacitance: f64,
    },
    Switch {
        on_resistance: f64,
        off_resistance: f64,
        drive: SwitchDrive,
    },
    /// Measurement loading: input resistance parallel with input capacitance.
    Probe {
        input_resistance: f64,
        input_capacitance: f64,
    },
}

impl ComponentKind {
    pub fn is_dc_path(&self) -> bool {
        !matches!(self, ComponentKind::Capacitor { .. })
    }

    /// Capacitance held as integration state, if any.
    pub fn stored_capacitance(&self) -> Option<f64> {
        match *self {
            ComponentKind::Capacitor { capacitance, .. } => Some(capacitance),
            ComponentKind::ConverterSource {
                parallel_capacitance,
                ..
            } => Some(parallel_capacitance),
            ComponentKind::Probe {
                input_capacitance, ..
            } => Some(input_capacitance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
    pub pos: NodeId,
    pub neg: NodeId,
}

/// A flat netlist. Node labels are indexed by `NodeId`; index 0 is ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    labels: Vec<String>,
    components: Vec<Component>,
    controls: BTreeMap<String, ControlSignal>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub fn new() -> Self {
        Circuit {
            labels: vec![GROUND_LABEL.to_string()],
            components: Vec::new(),
            controls: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Look up a node by label without creating it.
    pub fn find_node(&self, label: &str) -> Option<NodeId> {
        if is_ground_label(label) {
            return Some(NodeId::GROUND);
        }
        self.labels.iter().position(|l| l == label).map(NodeId)
    }

    /// Look up a node by label, creating it if needed.
    pub fn node(&mut self, label: &str) -> NodeId {
        if let Some(id) = self.find_node(label) {
            return id;
        }
        self.labels.push(label.to_string());
        NodeId(self.labels.len() - 1)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Component] {
        &mut self.components
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn add(&mut self, name: &str, pos: NodeId, neg: NodeId, kind: ComponentKind) -> Result<()> {
        if self.component(name).is_some() {
            return Err(Error::InvalidCircuit(format!("duplicate component name '{name}'")));
        }
        if pos.0 >= self.labels.len() || neg.0 >= self.labels.len() {
            return Err(Error::InvalidCircuit(format!(
                "component '{name}' references an undeclared node"
            )));
        }
        self.components.push(Component {
            name: name.to_string(),
            kind,
            pos,
            neg,
        });
        Ok(())
    }

    /// Convenience wrapper resolving node labels.
    pub fn add_between(&mut self, name: &str, pos: &str, neg: &str, kind: ComponentKind) -> Result<()> {
        let p = self.node(pos);
        let n = self.node(neg);
        self.add(name, p, n, kind)
    }

    pub fn controls(&self) -> &BTreeMap<String, ControlSignal> {
        &self.controls
    }

    pub fn set_control(&mut self, name: &str, signal: ControlSignal) {
        self.controls.insert(name.to_string(), signal);
    }

    pub fn control_mut(&mut self, name: &str) -> Option<&mut ControlSignal> {
        self.controls.get_mut(name)
    }

    pub fn controls_mut(&mut self) -> impl Iterator<Item = (&String, &mut ControlSignal)> {
        self.controls.iter_mut()
    }

    /// Renumber nodes in order of first appearance among component
    /// terminals (positive before negative). Nodes no component touches are
    /// dropped. Parsing a printed netlist produces exactly this order.
    pub fn canonicalize(&mut self) {
        let mut map = vec![usize::MAX; self.labels.len()];
        map[0] = 0;
        let mut labels = vec![self.labels[0].clone()];
        for c in &self.components {
            for n in [c.pos, c.neg] {
                if map[n.0] == usize::MAX {
                    map[n.0] = labels.len();
                    labels.push(self.labels[n.0].clone());
                }
            }
        }
        for c in &mut self.components {
            c.pos = NodeId(map[c.pos.0]);
            c.neg = NodeId(map[c.neg.0]);
        }
        self.labels = labels;
    }

    /// Check parameter ranges, control references, and DC connectivity.
    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            validate_component(c)?;
            if let ComponentKind::Switch { drive, .. } = &c.kind {
                if !self.controls.contains_key(&drive.control) {
                    return Err(Error::InvalidCircuit(format!(
                        "switch '{}' references undefined control '{}'",
                        c.name, drive.control
                    )));
                }
            }
            if c.pos == c.neg {
                return Err(Error::InvalidCircuit(format!(
                    "component '{}' has both terminals on node '{}'",
                    c.name,
                    self.label(c.pos)
                )));
            }
        }
        for (name, ctrl) in &self.controls {
            ctrl.validate().map_err(|e| Error::InvalidCircuit(format!("control '{name}': {e}")))?;
        }
        if let Some(node) = self.floating_node() {
            return Err(Error::FloatingNode {
                node: self.label(node).to_string(),
            });
        }
        Ok(())
    }

    /// First node without a DC path to ground, if any.
    pub fn floating_node(&self) -> Option<NodeId> {
        let mut parent: Vec<usize> = (0..self.labels.len()).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for c in self.components.iter().filter(|c| c.kind.is_dc_path()) {
            let a = root(&mut parent, c.pos.0);
            let b = root(&mut parent, c.neg.0);
            if a != b {
                parent[a] = b;
            }
        }
        let g = root(&mut parent, 0);
        (1..self.labels.len())
            .find(|&i| root(&mut parent, i) != g)
            .map(NodeId)
    }
}

pub fn is_ground_label(label: &str) -> bool {
    label == GROUND_LABEL || label == "GND"
}

fn positive(name: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidCircuit(format!("{name}: {what} must be positive and finite, got {v}")))
    }
}

pub(crate) fn validate_component(c: &Component) -> Result<()> {
    let n = c.name.as_str();
    match &c.kind {
        ComponentKind::Resistor { resistance } => positive(n, "resistance", *resistance),
        ComponentKind::Capacitor {
            capacitance,
            derating,
        } => {
            positive(n, "capacitance", *capacitance)?;
            if let Some(d) = derating {
                if !(d.per_volt.is_finite() && d.per_volt >= 0.0) {
                    return Err(Error::InvalidCircuit(format!("{n}: derating must be non-negative")));
                }
                positive(n, "rated voltage", d.rated_voltage)?;
                if d.per_volt * d.rated_voltage >= 1.0 {
                    return Err(Error::InvalidCircuit(format!(
                        "{n}: derating reaches zero capacitance below the rated voltage"
                    )));
                }
            }
            Ok(())
        }
        ComponentKind::IdealSource { signal } => {
            let ok = match *signal {
                SourceSignal::Dc { level } => level.is_finite(),
                SourceSignal::Step { level, at } => level.is_finite() && at.is_finite(),
                SourceSignal::Ramp { level, slew, at } => {
                    level.is_finite() && at.is_finite() && slew.is_finite() && slew > 0.0
                }
            };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidCircuit(format!("{n}: invalid source program")))
            }
        }
        ComponentKind::ConverterSource {
            open_circuit_voltage,
            internal_resistance,
            parallel_capacitance,
        } => {
            positive(n, "open-circuit voltage", *open_circuit_voltage)?;
            positive(n, "internal resistance", *internal_resistance)?;
            positive(n, "parallel capacitance", *parallel_capacitance)
        }
        ComponentKind::Switch {
            on_resistance,
            off_resistance,
            drive,
        } => {
            positive(n, "on-resistance", *on_resistance)?;
            positive(n, "off-resistance", *off_resistance)?;
            if on_resistance >= off_resistance {
                return Err(Error::InvalidCircuit(format!(
                    "{n}: on-resistance must be below off-resistance"
                )));
            }
            drive
                .driver
                .validate()
                .map_err(|e| Error::InvalidCircuit(format!("{n}: {e}")))
        }
        ComponentKind::Probe {
            input_resistance,
            input_capacitance,
        } => {
            positive(n, "input resistance", *input_resistance)?;
            positive(n, "input capacitance", *input_capacitance)
        }
    }
}
