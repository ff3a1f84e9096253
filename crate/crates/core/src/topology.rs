//! Builders for the series-switch half-bridge and its variants.
//!
//! Node labels for one bridge: `A` (supply output), `B...` between high-side
//! devices, `O` (output midpoint), `C...` between low-side devices, and
//! ground as the bottom rail `D`. With two devices per side the
//! intermediate nodes are plain `B` and `C`; taller stacks number them
//! `B1, B2, ...` from the top. Devices are `S1..S2n` from the top, with
//! balancers `R1..` and snubbers `C1..` across them. The high side follows
//! control `g` and the low side its complement.

use crate::circuit::{Circuit, ComponentKind, NodeId, SwitchDrive, GROUND_LABEL};
use crate::devices::{
    expand_bench, BenchSupplyParams, ControlSignal, ConverterParams, DriverSpec, Fragment, SwitchSchedule,
};
use crate::error::{Error, Result};
use crate::mna::{ProbeSpec, SwitchTimelines};

pub const CONTROL_NAME: &str = "g";
pub const CONVERTER_NAME: &str = "Xconv";
pub const SCOPE_PROBE_NAME: &str = "Xprobe";
pub const BENCH_TAG: &str = "gen";
pub const LOAD_TAG: &str = "load";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupplySpec {
    Bench(BenchSupplyParams),
    Converter(ConverterParams),
}

impl SupplySpec {
    /// Probe reading the supply's delivered current, and the sign that turns
    /// it into current flowing out of node `A`.
    pub fn current_probe(&self) -> (ProbeSpec, f64) {
        match self {
            SupplySpec::Bench(_) => (ProbeSpec::Current(format!("R_{BENCH_TAG}")), 1.0),
            SupplySpec::Converter(_) => (ProbeSpec::Current(CONVERTER_NAME.into()), -1.0),
        }
    }

    pub fn nominal_voltage(&self) -> f64 {
        match self {
            SupplySpec::Bench(b) => b.set_voltage,
            SupplySpec::Converter(c) => c.open_circuit_voltage,
        }
    }
}

/// Oscilloscope probe loading: input resistance parallel with capacitance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScopeProbe {
    pub input_resistance: f64,
    pub input_capacitance: f64,
}

impl Default for ScopeProbe {
    fn default() -> Self {
        ScopeProbe {
            input_resistance: 100e6,
            input_capacitance: 5.5e-12,
        }
    }
}

/// Per-device parameters of a stack, listed top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct StackParams {
    pub devices_per_side: usize,
    pub balancing_resistance: Option<f64>,
    pub snubber_capacitance: Option<f64>,
    pub on_resistance: f64,
    pub off_resistance: Vec<f64>,
    /// Added to both driver delays of each device.
    pub driver_offsets: Vec<f64>,
    /// Added to the turn-off delay only.
    pub turn_off_skew: Vec<f64>,
    pub driver: DriverSpec,
}

impl Default for StackParams {
    fn default() -> Self {
        StackParams::uniform(2, 1e9)
    }
}

impl StackParams {
    pub fn uniform(devices_per_side: usize, off_resistance: f64) -> Self {
        let n = 2 * devices_per_side;
        StackParams {
            devices_per_side,
            balancing_resistance: Some(3.6e6),
            snubber_capacitance: None,
            on_resistance: 5.0,
            off_resistance: vec![off_resistance; n],
            driver_offsets: vec![0.0; n],
            turn_off_skew: vec![0.0; n],
            driver: DriverSpec::default(),
        }
    }

    /// Two devices per side with a 9:1 leakage mismatch within each side.
    pub fn uneven() -> Self {
        StackParams {
            off_resistance: vec![900e6, 100e6, 900e6, 100e6],
            ..StackParams::default()
        }
    }

    pub fn device_count(&self) -> usize {
        2 * self.devices_per_side
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices_per_side == 0 {
            return Err(Error::InvalidParameter("a stack needs at least one device per side".into()));
        }
        let n = self.device_count();
        for (what, len) in [
            ("off-resistance", self.off_resistance.len()),
            ("driver offset", self.driver_offsets.len()),
            ("turn-off skew", self.turn_off_skew.len()),
        ] {
            if len != n {
                return Err(Error::InvalidParameter(format!(
                    "{what} list has {len} entries but the stack has {n} devices"
                )));
            }
        }
        Ok(())
    }

    fn device_driver(&self, i: usize) -> DriverSpec {
        DriverSpec {
            turn_on_delay: self.driver.turn_on_delay,
            turn_off_delay: self.driver.turn_off_delay + self.turn_off_skew[i],
            offset: self.driver.offset + self.driver_offsets[i],
        }
    }

    /// Node labels from the supply rail down to ground.
    pub fn rail_labels(&self) -> Vec<String> {
        let n = self.devices_per_side;
        let inner = |p: &str| -> Vec<String> {
            match n {
                1 => vec![],
                2 => vec![p.to_string()],
                _ => (1..n).map(|k| format!("{p}{k}")).collect(),
            }
        };
        let mut out = vec!["A".to_string()];
        out.extend(inner("B"));
        out.push("O".into());
        out.extend(inner("C"));
        out.push(GROUND_LABEL.into());
        out
    }
}

/// One output of a dual-channel circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub control: ControlSignal,
    pub load: Fragment,
}

fn tagged(label: &str, tag: Option<&str>) -> String {
    match tag {
        Some(t) if label != GROUND_LABEL && label != "A" => format!("{label}_{t}"),
        _ => label.to_string(),
    }
}

fn attach_supply(circuit: &mut Circuit, supply: &SupplySpec) -> Result<NodeId> {
    let a = circuit.node("A");
    match supply {
        SupplySpec::Bench(b) => expand_bench(b)?.attach(circuit, a, NodeId::GROUND, BENCH_TAG)?,
        SupplySpec::Converter(c) => {
            c.validate()?;
            circuit.add(CONVERTER_NAME, a, NodeId::GROUND, c.component())?;
        }
    }
    Ok(a)
}

/// Add the stack, its control, and its load. `tag` distinguishes channels.
fn attach_bridge(
    circuit: &mut Circuit,
    stack: &StackParams,
    control: ControlSignal,
    load: &Fragment,
    tag: Option<&str>,
) -> Result<()> {
    stack.validate()?;
    control.validate().map_err(Error::InvalidParameter)?;
    let ctrl_name = tagged(CONTROL_NAME, tag);
    circuit.set_control(&ctrl_name, control);
    let rail = stack.rail_labels();
    let nodes: Vec<NodeId> = rail.iter().map(|l| circuit.node(&tagged(l, tag))).collect();
    for i in 0..stack.device_count() {
        let (p, n) = (nodes[i], nodes[i + 1]);
        let name = |prefix: &str| tagged(&format!("{prefix}{}", i + 1), tag);
        circuit.add(
            &name("S"),
            p,
            n,
            ComponentKind::Switch {
                on_resistance: stack.on_resistance,
                off_resistance: stack.off_resistance[i],
                drive: SwitchDrive {
                    control: ctrl_name.clone(),
                    inverted: i >= stack.devices_per_side,
                    driver: stack.device_driver(i),
                },
            },
        )?;
        if let Some(r) = stack.balancing_resistance {
            circuit.add(&name("R"), p, n, ComponentKind::Resistor { resistance: r })?;
        }
        if let Some(c) = stack.snubber_capacitance {
            circuit.add(
                &name("C"),
                p,
                n,
                ComponentKind::Capacitor {
                    capacitance: c,
                    derating: None,
                },
            )?;
        }
    }
    let out = nodes[stack.devices_per_side];
    let load_tag = tagged(LOAD_TAG, tag);
    load.attach(circuit, out, NodeId::GROUND, &load_tag)
}

/// Single half-bridge between supply node `A` and ground, output at `O`.
pub fn build_half_bridge(
    supply: &SupplySpec,
    stack: &StackParams,
    control: ControlSignal,
    load: &Fragment,
) -> Result<Circuit> {
    let mut c = Circuit::new();
    attach_supply(&mut c, supply)?;
    attach_bridge(&mut c, stack, control, load, None)?;
    c.canonicalize();
    c.validate()?;
    Ok(c)
}

/// Two half-bridges sharing one converter. Channel `k` (1-based) has nodes
/// `B_chk`, `O_chk`, `C_chk`, devices `S1_chk...`, and control `g_chk`.
pub fn build_dual_channel(
    converter: &ConverterParams,
    stack: &StackParams,
    channels: &[ChannelSpec; 2],
) -> Result<Circuit> {
    let mut c = Circuit::new();
    attach_supply(&mut c, &SupplySpec::Converter(*converter))?;
    for (k, ch) in channels.iter().enumerate() {
        let tag = channel_tag(k + 1);
        attach_bridge(&mut c, stack, ch.control, &ch.load, Some(&tag))?;
    }
    c.canonicalize();
    c.validate()?;
    Ok(c)
}

pub fn channel_tag(k: usize) -> String {
    format!("ch{k}")
}

/// Attach an oscilloscope probe from `node` to ground.
pub fn attach_scope_probe(circuit: &mut Circuit, node: &str, probe: &ScopeProbe) -> Result<()> {
    let n = circuit
        .find_node(node)
        .ok_or_else(|| Error::InvalidParameter(format!("no node '{node}' to probe")))?;
    circuit.add(
        SCOPE_PROBE_NAME,
        n,
        NodeId::GROUND,
        ComponentKind::Probe {
            input_resistance: probe.input_resistance,
            input_capacitance: probe.input_capacitance,
        },
    )
}

/// Total time within `[0, stop)` during which some high-side device and some
/// low-side device of the same bridge are on together. Switches are matched
/// by the naming scheme above; non-bridge switches are ignored.
pub fn shoot_through_time(timelines: &SwitchTimelines, stack: &StackParams, tag: Option<&str>, stop: f64) -> f64 {
    let n = stack.devices_per_side;
    let get = |i: usize| timelines.get(&tagged(&format!("S{}", i + 1), tag));
    let high: Vec<&SwitchSchedule> = (0..n).filter_map(get).collect();
    let low: Vec<&SwitchSchedule> = (n..2 * n).filter_map(get).collect();
    if high.is_empty() || low.is_empty() {
        return 0.0;
    }
    let mut times: Vec<f64> = high
        .iter()
        .chain(&low)
        .flat_map(|s| s.events.iter().map(|e| e.time))
        .filter(|t| *t < stop)
        .collect();
    times.push(0.0);
    times.push(stop);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .windows(2)
        .filter(|w| {
            let t = w[0];
            high.iter().any(|s| s.state_at(t)) && low.iter().any(|s| s.state_at(t))
        })
        .map(|w| w[1] - w[0])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::series_rc_load;
    use crate::mna::derive_timelines;

    fn bench(v: f64) -> SupplySpec {
        SupplySpec::Bench(BenchSupplyParams::new(v))
    }

    #[test]
    fn rail_labels_by_height() {
        assert_eq!(StackParams::uniform(1, 1e9).rail_labels(), ["A", "O", "0"]);
        assert_eq!(StackParams::uniform(2, 1e9).rail_labels(), ["A", "B", "O", "C", "0"]);
        assert_eq!(
            StackParams::uniform(3, 1e9).rail_labels(),
            ["A", "B1", "B2", "O", "C1", "C2", "0"]
        );
    }

    #[test]
    fn half_bridge_has_labelled_nodes() {
        let c = build_half_bridge(&bench(800.0), &StackParams::uneven(), ControlSignal::square(1.0), &Fragment::default())
            .unwrap();
        for l in ["A", "B", "O", "C"] {
            assert!(c.find_node(l).is_some(), "{l}");
        }
        assert!(c.component("R4").is_some());
        assert!(c.component("C1").is_none());
    }

    #[test]
    fn mismatched_lists_are_rejected() {
        let mut s = StackParams::default();
        s.off_resistance.pop();
        let err = build_half_bridge(&bench(800.0), &s, ControlSignal::square(1.0), &Fragment::default()).unwrap_err();
        assert!(err.to_string().contains("off-resistance"));
    }

    #[test]
    fn default_drivers_never_shoot_through() {
        let load = series_rc_load(100e3, 10e-9, None).unwrap();
        for f in [1.0, 100.0, 1000.0] {
            let s = StackParams::default();
            let c = build_half_bridge(&bench(1800.0), &s, ControlSignal::square(f), &load).unwrap();
            let stop = 5.0 / f;
            let tl = derive_timelines(&c, stop).unwrap();
            assert_eq!(shoot_through_time(&tl, &s, None, stop), 0.0);
        }
    }

    #[test]
    fn ideal_drivers_with_skew_can_overlap() {
        let mut s = StackParams::default();
        s.driver = DriverSpec::IDEAL;
        s.turn_off_skew = vec![50e-6, 0.0, 0.0, 0.0];
        let c = build_half_bridge(&bench(1800.0), &s, ControlSignal::square(1e3), &Fragment::default()).unwrap();
        let tl = derive_timelines(&c, 3e-3).unwrap();
        let overlap = shoot_through_time(&tl, &s, None, 3e-3);
        assert!(overlap > 0.0);
    }

    #[test]
    fn dual_channel_shares_supply() {
        let load = series_rc_load(100e3, 10e-9, None).unwrap();
        let ch = |phase| ChannelSpec {
            control: ControlSignal::square(100.0).with_phase(phase),
            load: load.clone(),
        };
        let c = build_dual_channel(&ConverterParams::default(), &StackParams::default(), &[ch(0.0), ch(1.0)]).unwrap();
        assert!(c.find_node("O_ch1").is_some() && c.find_node("O_ch2").is_some());
        assert_eq!(c.controls()["g_ch2"].phase, 1.0);
        assert_eq!(c.components().iter().filter(|x| x.name == CONVERTER_NAME).count(), 1);
    }
}
