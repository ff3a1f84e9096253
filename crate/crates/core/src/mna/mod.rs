//! Modified nodal analysis: assembly, DC operating point, and fixed-step
//! transient integration with trapezoidal companion models.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per ideal voltage source. The converter source is stamped as its Norton
//! equivalent and needs no extra unknown. After every switching event (and at
//! t = 0) the configured number of backward-Euler steps replaces the
//! trapezoidal rule, which would otherwise ring on stiff nodes.

mod checksum;
mod lu;
mod probe;

use std::collections::BTreeMap;

pub use checksum::stamp_checksum;
pub use probe::ProbeSpec;

use crate::circuit::{Circuit, ComponentKind, Derating, NodeId};
use crate::devices::{derate, driver_schedule, SwitchSchedule};
use crate::error::{Error, Result};
use crate::waveform::Waveform;
use lu::Lu;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub step: f64,
    pub stop: f64,
    /// Backward-Euler steps taken after each switching event.
    pub damping_steps: usize,
}

impl IntegrationSettings {
    pub fn new(step: f64, stop: f64) -> Self {
        IntegrationSettings {
            step,
            stop,
            damping_steps: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if !(self.stop.is_finite() && self.stop >= self.step) {
            return Err(Error::InvalidParameter(format!(
                "stop time {} must be at least one step ({})",
                self.stop, self.step
            )));
        }
        Ok(())
    }

    /// Number of integration steps; the grid ends at `steps() * step`.
    pub fn steps(&self) -> usize {
        (self.stop / self.step).round() as usize
    }
}

/// Switch-state timelines keyed by switch name.
pub type SwitchTimelines = BTreeMap<String, SwitchSchedule>;

/// Derive each switch's timeline from its control signal and driver.
pub fn derive_timelines(circuit: &Circuit, stop: f64) -> Result<SwitchTimelines> {
    let mut out = SwitchTimelines::new();
    for c in circuit.components() {
        if let ComponentKind::Switch { drive, .. } = &c.kind {
            let ctrl = circuit.controls().get(&drive.control).ok_or_else(|| {
                Error::InvalidCircuit(format!("undefined control '{}'", drive.control))
            })?;
            let schedule = driver_schedule(ctrl, &drive.driver, stop, drive.inverted)
                .map_err(|e| Error::Schedule(format!("switch '{}': {e}", c.name)))?;
            out.insert(c.name.clone(), schedule);
        }
    }
    Ok(out)
}

/// Starting point of a transient run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// DC solution with the t = 0 switch states and source values.
    OperatingPoint,
    /// Given voltages for capacitive elements (by component name); others
    /// start discharged.
    CapacitorVoltages(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Dc,
    Trapezoidal,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, Default)]
struct CapState {
    v: f64,
    i: f64,
    geq: f64,
    hist: f64,
}

/// Index bookkeeping shared by assembly and result views.
struct Layout {
    nodes: usize,
    dim: usize,
    source_row: Vec<Option<usize>>,
    cap_slot: Vec<Option<usize>>,
    switch_slot: Vec<Option<usize>>,
    switch_names: Vec<String>,
    cap_count: usize,
    has_derating: bool,
}

impl Layout {
    fn new(circuit: &Circuit) -> Self {
        let nodes = circuit.node_count() - 1;
        let mut source_row = Vec::new();
        let mut cap_slot = Vec::new();
        let mut switch_slot = Vec::new();
        let mut switch_names = Vec::new();
        let (mut ns, mut nc) = (0, 0);
        let mut has_derating = false;
        for c in circuit.components() {
            source_row.push(match c.kind {
                ComponentKind::IdealSource { .. } => {
                    ns += 1;
                    Some(nodes + ns - 1)
                }
                _ => None,
            });
            cap_slot.push(c.kind.stored_capacitance().map(|_| {
                nc += 1;
                nc - 1
            }));
            switch_slot.push(match c.kind {
                ComponentKind::Switch { .. } => {
                    switch_names.push(c.name.clone());
                    Some(switch_names.len() - 1)
                }
                _ => None,
            });
            if let ComponentKind::Capacitor { derating: Some(_), .. } = c.kind {
                has_derating = true;
            }
        }
        Layout {
            nodes,
            dim: nodes + ns,
            source_row,
            cap_slot,
            switch_slot,
            switch_names,
            cap_count: nc,
            has_derating,
        }
    }

    fn row(&self, n: NodeId) -> Option<usize> {
        (!n.is_ground()).then(|| n.0 - 1)
    }

    fn unknown_name(&self, circuit: &Circuit, index: usize) -> String {
        if index < self.nodes {
            circuit.label(NodeId(index + 1)).to_string()
        } else {
            let k = index - self.nodes;
            let comp = self
                .source_row
                .iter()
                .enumerate()
                .filter_map(|(ci, r)| r.map(|_| ci))
                .nth(k)
                .expect("source row");
            format!("I({})", circuit.components()[comp].name)
        }
    }
}

fn stamp_g(m: &mut [f64], dim: usize, a: Option<usize>, b: Option<usize>, g: f64) {
    if let Some(a) = a {
        m[a * dim + a] += g;
    }
    if let Some(b) = b {
        m[b * dim + b] += g;
    }
    if let (Some(a), Some(b)) = (a, b) {
        m[a * dim + b] -= g;
        m[b * dim + a] -= g;
    }
}

fn inject(rhs: &mut [f64], a: Option<usize>, b: Option<usize>, i: f64) {
    if let Some(a) = a {
        rhs[a] += i;
    }
    if let Some(b) = b {
        rhs[b] -= i;
    }
}

fn effective_capacitance(kind: &ComponentKind, v: f64) -> Option<f64> {
    match kind {
        ComponentKind::Capacitor {
            capacitance,
            derating: Some(d),
        } => Some(derate(*capacitance, Derating { ..*d }, v)),
        other => other.stored_capacitance(),
    }
}

struct Engine<'c> {
    circuit: &'c Circuit,
    layout: Layout,
    switch_on: Vec<bool>,
    caps: Vec<CapState>,
    x: Vec<f64>,
    rhs: Vec<f64>,
    work: Vec<f64>,
}

impl<'c> Engine<'c> {
    fn new(circuit: &'c Circuit) -> Self {
        let layout = Layout::new(circuit);
        let dim = layout.dim;
        Engine {
            circuit,
            switch_on: vec![false; layout.switch_names.len()],
            caps: vec![CapState::default(); layout.cap_count],
            x: vec![0.0; dim],
            rhs: vec![0.0; dim],
            work: Vec::with_capacity(dim),
            layout,
        }
    }

    fn voltage(&self, n: NodeId) -> f64 {
        self.layout.row(n).map_or(0.0, |r| self.x[r])
    }

    /// Build and factor the system matrix; also sets each capacitor's
    /// companion conductance for this step.
    fn factor(&mut self, mode: Mode, h: f64) -> Result<Lu> {
        let dim = self.layout.dim;
        let mut m = vec![0.0; dim * dim];
        for (ci, c) in self.circuit.components().iter().enumerate() {
            let (a, b) = (self.layout.row(c.pos), self.layout.row(c.neg));
            match &c.kind {
                ComponentKind::Resistor { resistance } => stamp_g(&mut m, dim, a, b, 1.0 / resistance),
                ComponentKind::Switch {
                    on_resistance,
                    off_resistance,
                    ..
                } => {
                    let on = self.switch_on[self.layout.switch_slot[ci].expect("switch slot")];
                    let r = if on { on_resistance } else { off_resistance };
                    stamp_g(&mut m, dim, a, b, 1.0 / r);
                }
                ComponentKind::ConverterSource {
                    internal_resistance, ..
                } => stamp_g(&mut m, dim, a, b, 1.0 / internal_resistance),
                ComponentKind::Probe { input_resistance, .. } => {
                    stamp_g(&mut m, dim, a, b, 1.0 / input_resistance)
                }
                ComponentKind::IdealSource { .. } => {
                    let k = self.layout.source_row[ci].expect("source row");
                    if let Some(a) = a {
                        m[a * dim + k] -= 1.0;
                        m[k * dim + a] += 1.0;
                    }
                    if let Some(b) = b {
                        m[b * dim + k] += 1.0;
                        m[k * dim + b] -= 1.0;
                    }
                }
                ComponentKind::Capacitor { .. } => {}
            }
            if let Some(slot) = self.layout.cap_slot[ci] {
                let state = &mut self.caps[slot];
                let cap = effective_capacitance(&c.kind, state.v).expect("capacitive element");
                state.geq = match mode {
                    Mode::Dc => 0.0,
                    Mode::Trapezoidal => 2.0 * cap / h,
                    Mode::BackwardEuler => cap / h,
                };
                if state.geq > 0.0 {
                    stamp_g(&mut m, dim, a, b, state.geq);
                }
            }
        }
        Lu::factor(dim, m).map_err(|s| Error::Singular {
            unknown: self.layout.unknown_name(self.circuit, s.0),
        })
    }

    /// Solve for the node voltages at time `t` given the factored matrix.
    fn solve(&mut self, lu: &Lu, mode: Mode, t: f64) -> Result<()> {
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        for (ci, c) in self.circuit.components().iter().enumerate() {
            let (a, b) = (self.layout.row(c.pos), self.layout.row(c.neg));
            match &c.kind {
                ComponentKind::IdealSource { signal } => {
                    let k = self.layout.source_row[ci].expect("source row");
                    self.rhs[k] = signal.value(t);
                }
                ComponentKind::ConverterSource {
                    open_circuit_voltage,
                    internal_resistance,
                    ..
                } => inject(&mut self.rhs, a, b, open_circuit_voltage / internal_resistance),
                _ => {}
            }
            if let Some(slot) = self.layout.cap_slot[ci] {
                let s = &mut self.caps[slot];
                s.hist = match mode {
                    Mode::Dc => 0.0,
                    Mode::Trapezoidal => s.geq * s.v + s.i,
                    Mode::BackwardEuler => s.geq * s.v,
                };
                inject(&mut self.rhs, a, b, s.hist);
            }
        }
        self.x.copy_from_slice(&self.rhs);
        lu.solve(&mut self.x, &mut self.work);
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        Ok(())
    }

    /// Advance capacitor states to the freshly solved voltages.
    fn commit_caps(&mut self) {
        for (ci, c) in self.circuit.components().iter().enumerate() {
            if let Some(slot) = self.layout.cap_slot[ci] {
                let v = self.voltage(c.pos) - self.voltage(c.neg);
                let s = &mut self.caps[slot];
                s.i = s.geq * v - s.hist;
                s.v = v;
            }
        }
    }

    /// Residual `b - G x` of the network without its capacitive parts.
    fn static_residual(&self, t: f64) -> Vec<f64> {
        let mut r = vec![0.0; self.layout.dim];
        for (ci, c) in self.circuit.components().iter().enumerate() {
            let (a, b) = (self.layout.row(c.pos), self.layout.row(c.neg));
            let v = self.voltage(c.pos) - self.voltage(c.neg);
            let i = match &c.kind {
                ComponentKind::Resistor { resistance } => v / resistance,
                ComponentKind::Switch {
                    on_resistance,
                    off_resistance,
                    ..
                } => {
                    let on = self.switch_on[self.layout.switch_slot[ci].expect("switch slot")];
                    v / if on { on_resistance } else { off_resistance }
                }
                ComponentKind::ConverterSource {
                    open_circuit_voltage,
                    internal_resistance,
                    ..
                } => (v - open_circuit_voltage) / internal_resistance,
                ComponentKind::Probe { input_resistance, .. } => v / input_resistance,
                ComponentKind::IdealSource { signal } => {
                    let k = self.layout.source_row[ci].expect("source row");
                    r[k] = signal.value(t) - v;
                    -self.x[k]
                }
                ComponentKind::Capacitor { .. } => 0.0,
            };
            inject(&mut r, a, b, -i);
        }
        r
    }

    /// One backward-Euler step with the factored matrix `lu`, solved for the
    /// increment from the committed state and refined, since stiff
    /// capacitor loops leave a visible residual after a single solve.
    fn settle_currents(&mut self, lu: &Lu, t: f64) -> Result<()> {
        // Source currents are not state; drop the impulse they carried.
        for k in self.layout.nodes..self.layout.dim {
            self.x[k] = 0.0;
        }
        let x0 = self.x.clone();
        let mut dx = vec![0.0; self.layout.dim];
        for _ in 0..3 {
            let mut r = self.static_residual(t);
            for (ci, c) in self.circuit.components().iter().enumerate() {
                if let Some(slot) = self.layout.cap_slot[ci] {
                    let (a, b) = (self.layout.row(c.pos), self.layout.row(c.neg));
                    let dv = a.map_or(0.0, |k| dx[k]) - b.map_or(0.0, |k| dx[k]);
                    inject(&mut r, a, b, -self.caps[slot].geq * dv);
                }
            }
            lu.solve(&mut r, &mut self.work);
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { time: t });
            }
            for (k, d) in dx.iter_mut().enumerate() {
                *d += r[k];
                self.x[k] = x0[k] + *d;
            }
        }
        for (ci, c) in self.circuit.components().iter().enumerate() {
            if let Some(slot) = self.layout.cap_slot[ci] {
                let (a, b) = (self.layout.row(c.pos), self.layout.row(c.neg));
                let dv = a.map_or(0.0, |k| dx[k]) - b.map_or(0.0, |k| dx[k]);
                let v = self.voltage(c.pos) - self.voltage(c.neg);
                let s = &mut self.caps[slot];
                s.i = s.geq * dv;
                s.v = v;
            }
        }
        Ok(())
    }

    fn view(&self, index: usize, time: f64) -> StepView<'_> {
        StepView {
            index,
            time,
            engine: self,
        }
    }
}

/// Solution at one grid point, handed to transient observers.
pub struct StepView<'a> {
    pub index: usize,
    pub time: f64,
    engine: &'a Engine<'a>,
}

impl StepView<'_> {
    pub fn node_voltage(&self, n: NodeId) -> f64 {
        self.engine.voltage(n)
    }

    /// Voltage from positive to negative terminal of component `idx`.
    pub fn branch_voltage(&self, idx: usize) -> f64 {
        let c = &self.engine.circuit.components()[idx];
        self.engine.voltage(c.pos) - self.engine.voltage(c.neg)
    }

    /// Current entering the positive terminal of component `idx` and leaving
    /// by the negative one (passive sign convention). A source delivering
    /// power therefore reports a negative current.
    pub fn component_current(&self, idx: usize) -> f64 {
        let e = self.engine;
        let c = &e.circuit.components()[idx];
        let v = self.branch_voltage(idx);
        let cap_i = e.layout.cap_slot[idx].map_or(0.0, |s| e.caps[s].i);
        match &c.kind {
            ComponentKind::Resistor { resistance } => v / resistance,
            ComponentKind::Switch {
                on_resistance,
                off_resistance,
                ..
            } => {
                let on = e.switch_on[e.layout.switch_slot[idx].expect("switch slot")];
                v / if on { on_resistance } else { off_resistance }
            }
            ComponentKind::Capacitor { .. } => cap_i,
            ComponentKind::ConverterSource {
                open_circuit_voltage,
                internal_resistance,
                ..
            } => (v - open_circuit_voltage) / internal_resistance + cap_i,
            ComponentKind::Probe { input_resistance, .. } => v / input_resistance + cap_i,
            ComponentKind::IdealSource { .. } => -e.x[e.layout.source_row[idx].expect("source row")],
        }
    }

    pub fn switch_state(&self, name: &str) -> Option<bool> {
        let l = &self.engine.layout;
        l.switch_names.iter().position(|n| n == name).map(|i| self.engine.switch_on[i])
    }

    /// Energy held in all capacitive elements, `½ Σ C v²`.
    pub fn stored_energy(&self) -> f64 {
        let e = self.engine;
        e.circuit
            .components()
            .iter()
            .enumerate()
            .filter_map(|(ci, c)| {
                let s = e.caps[e.layout.cap_slot[ci]?];
                let cap = effective_capacitance(&c.kind, s.v)?;
                Some(0.5 * cap * s.v * s.v)
            })
            .sum()
    }

    pub fn circuit(&self) -> &Circuit {
        self.engine.circuit
    }
}

/// Node voltages of a DC solution.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVoltages {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl NodeVoltages {
    pub fn get(&self, label: &str) -> Option<f64> {
        let label = if crate::circuit::is_ground_label(label) { "0" } else { label };
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }

    pub fn at(&self, n: NodeId) -> f64 {
        self.values[n.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Resistive-network solution with capacitors open and the given switch
/// states. Every switch must be listed.
pub fn dc_operating_point(circuit: &Circuit, switch_states: &BTreeMap<String, bool>) -> Result<NodeVoltages> {
    circuit.validate()?;
    let mut engine = Engine::new(circuit);
    for (i, name) in engine.layout.switch_names.iter().enumerate() {
        engine.switch_on[i] = *switch_states
            .get(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no state given for switch '{name}'")))?;
    }
    let lu = engine.factor(Mode::Dc, 1.0)?;
    engine.solve(&lu, Mode::Dc, 0.0)?;
    let mut values = vec![0.0];
    values.extend_from_slice(&engine.x[..engine.layout.nodes]);
    Ok(NodeVoltages {
        labels: circuit.labels().to_vec(),
        values,
    })
}

/// Integrate the circuit over `settings`, calling `observer` at t = 0 and
/// after every step.
pub fn run_transient_observed<F>(
    circuit: &Circuit,
    settings: &IntegrationSettings,
    timelines: &SwitchTimelines,
    initial: &InitialState,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(&StepView<'_>),
{
    circuit.validate()?;
    settings.validate()?;
    let h = settings.step;
    let steps = settings.steps();
    let mut engine = Engine::new(circuit);

    // (grid index, switch slot, state), applied before the step leaving that index.
    let mut events: Vec<(usize, usize, bool)> = Vec::new();
    for (slot, name) in engine.layout.switch_names.clone().iter().enumerate() {
        let sched = timelines
            .get(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no timeline for switch '{name}'")))?;
        engine.switch_on[slot] = sched.initial;
        for e in &sched.events {
            let k = (e.time / h).round();
            if e.time < 0.0 || !e.time.is_finite() {
                return Err(Error::Schedule(format!("switch '{name}': event time {} is invalid", e.time)));
            }
            if (k as usize) < steps {
                events.push((k as usize, slot, e.on));
            }
        }
    }
    events.sort_by_key(|e| e.0);
    let mut discontinuities: Vec<usize> = circuit
        .components()
        .iter()
        .filter_map(|c| match &c.kind {
            ComponentKind::IdealSource { signal } => signal.discontinuity(),
            _ => None,
        })
        .filter(|at| *at >= 0.0)
        .map(|at| (at / h + 1e-9).floor() as usize)
        .collect();
    discontinuities.sort_unstable();

    let mut next_event = 0;
    while next_event < events.len() && events[next_event].0 == 0 {
        let (_, slot, on) = events[next_event];
        engine.switch_on[slot] = on;
        next_event += 1;
    }

    match initial {
        InitialState::OperatingPoint => {
            let lu = engine.factor(Mode::Dc, h)?;
            engine.solve(&lu, Mode::Dc, 0.0)?;
            for (ci, c) in circuit.components().iter().enumerate() {
                if let Some(slot) = engine.layout.cap_slot[ci] {
                    let v = engine.voltage(c.pos) - engine.voltage(c.neg);
                    engine.caps[slot] = CapState { v, ..CapState::default() };
                }
            }
        }
        InitialState::CapacitorVoltages(given) => {
            for name in given.keys() {
                let ok = circuit
                    .component_index(name)
                    .is_some_and(|ci| engine.layout.cap_slot[ci].is_some());
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "initial voltage given for '{name}', which stores no charge"
                    )));
                }
            }
            for (ci, c) in circuit.components().iter().enumerate() {
                if let Some(slot) = engine.layout.cap_slot[ci] {
                    let v = given.get(&c.name).copied().unwrap_or(0.0);
                    engine.caps[slot] = CapState { v, ..CapState::default() };
                }
            }
            // Node voltages consistent with the stored charges: a very short
            // backward-Euler step. Inconsistent charges redistribute during
            // it, so a second one gives the t = 0+ currents. That one is
            // solved for the increment, since `geq * v - hist` would cancel.
            let eps = h * 1e-9;
            let lu = engine.factor(Mode::BackwardEuler, eps)?;
            engine.solve(&lu, Mode::BackwardEuler, 0.0)?;
            engine.commit_caps();
            // Resistive nodes jump with the charges; settling again from
            // there keeps the capacitor increments well resolved.
            engine.settle_currents(&lu, 0.0)?;
            engine.settle_currents(&lu, 0.0)?;
        }
    }
    observer(&engine.view(0, 0.0));

    let mut damping_left = settings.damping_steps;
    let mut key: Option<(Mode, Vec<bool>)> = None;
    let mut lu: Option<Lu> = None;
    let mut next_disc = discontinuities.iter().position(|&d| d > 0).unwrap_or(discontinuities.len());
    for n in 0..steps {
        if n > 0 {
            let mut changed = false;
            while next_event < events.len() && events[next_event].0 == n {
                let (_, slot, on) = events[next_event];
                changed |= engine.switch_on[slot] != on;
                engine.switch_on[slot] = on;
                next_event += 1;
            }
            while next_disc < discontinuities.len() && discontinuities[next_disc] == n {
                changed = true;
                next_disc += 1;
            }
            if changed {
                damping_left = settings.damping_steps;
            }
        }
        let mode = if damping_left > 0 {
            damping_left -= 1;
            Mode::BackwardEuler
        } else {
            Mode::Trapezoidal
        };
        let stale = match &key {
            Some((m, s)) => *m != mode || *s != engine.switch_on,
            None => true,
        };
        if stale || engine.layout.has_derating {
            lu = Some(engine.factor(mode, h)?);
            key = Some((mode, engine.switch_on.clone()));
        }
        let t = (n + 1) as f64 * h;
        engine.solve(lu.as_ref().expect("factored"), mode, t)?;
        engine.commit_caps();
        observer(&engine.view(n + 1, t));
    }
    Ok(())
}

/// Integrate and record the requested probes.
pub fn run_transient(
    circuit: &Circuit,
    settings: &IntegrationSettings,
    timelines: &SwitchTimelines,
    probes: &[ProbeSpec],
) -> Result<Vec<Waveform>> {
    run_transient_from(circuit, settings, timelines, &InitialState::OperatingPoint, probes)
}

pub fn run_transient_from(
    circuit: &Circuit,
    settings: &IntegrationSettings,
    timelines: &SwitchTimelines,
    initial: &InitialState,
    probes: &[ProbeSpec],
) -> Result<Vec<Waveform>> {
    let resolved = probes
        .iter()
        .map(|p| p.resolve(circuit))
        .collect::<Result<Vec<_>>>()?;
    let n = settings.steps() + 1;
    let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(n); resolved.len()];
    run_transient_observed(circuit, settings, timelines, initial, |view| {
        for (col, p) in data.iter_mut().zip(&resolved) {
            col.push(p.sample(view));
        }
    })?;
    Ok(data
        .into_iter()
        .map(|samples| Waveform {
            start: 0.0,
            step: settings.step,
            samples,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::SourceSignal;
    use crate::devices::{ControlSignal, DriverSpec};

    fn divider(top: f64, bottom: f64) -> Circuit {
        let mut c = Circuit::new();
        c.add_between(
            "V1",
            "A",
            "0",
            ComponentKind::IdealSource {
                signal: SourceSignal::Dc { level: 800.0 },
            },
        )
        .unwrap();
        c.add_between("R1", "A", "M", ComponentKind::Resistor { resistance: top }).unwrap();
        c.add_between("R2", "M", "0", ComponentKind::Resistor { resistance: bottom }).unwrap();
        c
    }

    #[test]
    fn symmetric_divider_midpoint() {
        let v = dc_operating_point(&divider(1e3, 1e3), &BTreeMap::new()).unwrap();
        assert_eq!(v.get("M").unwrap(), 400.0);
        assert_eq!(v.get("0").unwrap(), 0.0);
        assert_eq!(v.at(NodeId::GROUND), 0.0);
    }

    #[test]
    fn off_state_leakage_divider() {
        let v = dc_operating_point(&divider(900e6, 100e6), &BTreeMap::new()).unwrap();
        let m = v.get("M").unwrap();
        assert!(((800.0 - m) - 720.0).abs() < 720.0 * 1e-12);
        assert!((m - 80.0).abs() < 80.0 * 1e-12);
    }

    #[test]
    fn isolated_node_is_named() {
        let mut c = divider(1e3, 1e3);
        c.add_between(
            "C9",
            "M",
            "Q",
            ComponentKind::Capacitor {
                capacitance: 1e-9,
                derating: None,
            },
        )
        .unwrap();
        let err = dc_operating_point(&c, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("'Q'"), "{err}");
    }

    #[test]
    fn missing_switch_state_is_an_error() {
        let mut c = divider(1e3, 1e3);
        c.set_control("g", ControlSignal::square(1.0));
        c.add_between(
            "S1",
            "M",
            "0",
            ComponentKind::Switch {
                on_resistance: 5.0,
                off_resistance: 1e9,
                drive: crate::circuit::SwitchDrive {
                    control: "g".into(),
                    inverted: false,
                    driver: DriverSpec::default(),
                },
            },
        )
        .unwrap();
        assert!(dc_operating_point(&c, &BTreeMap::new()).is_err());
        let on = BTreeMap::from([("S1".to_string(), true)]);
        let v = dc_operating_point(&c, &on).unwrap();
        assert!(v.get("M").unwrap() < 5.0);
    }

    #[test]
    fn deterministic_runs() {
        let mut c = divider(1e3, 1e3);
        c.add_between(
            "C1",
            "M",
            "0",
            ComponentKind::Capacitor {
                capacitance: 1e-6,
                derating: None,
            },
        )
        .unwrap();
        let s = IntegrationSettings::new(1e-6, 1e-3);
        let p = [ProbeSpec::Node("M".into())];
        let a = run_transient(&c, &s, &SwitchTimelines::new(), &p).unwrap();
        let b = run_transient(&c, &s, &SwitchTimelines::new(), &p).unwrap();
        assert_eq!(a, b);
    }
}
