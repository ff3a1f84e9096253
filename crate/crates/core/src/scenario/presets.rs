//! Named scenarios reproducing the bench and converter experiments, kept as
//! parameter recipes so sweeps and overrides can rebuild them.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::circuit::Derating;
use crate::devices::{
    expand_dea_load, series_rc_load, BenchSupplyParams, ControlSignal, ConverterParams, DeaLoadParams, Fragment,
};
use crate::error::{Error, Result};
use crate::mna::{IntegrationSettings, ProbeSpec};
use crate::topology::{
    attach_scope_probe, build_dual_channel, build_half_bridge, channel_tag, ChannelSpec, ScopeProbe, StackParams,
    SupplySpec, CONVERTER_NAME, LOAD_TAG,
};
use crate::units::{format_value, parse_value};

use super::{Analysis, Scenario};

/// Series resistance used with plain capacitor loads.
pub const MIMIC_SERIES_RESISTANCE: f64 = 100e3;
/// Default linear derating applied by `derated:` load descriptors.
pub const CERAMIC_DERATING: Derating = Derating {
    per_volt: 2e-4,
    rated_voltage: 2000.0,
};

/// Output load, written as a short descriptor: `none`, `dea`, `10n`
/// (with 100 kΩ in series), `10n@50k`, or `derated:10n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSpec {
    None,
    SeriesRc { resistance: f64, capacitance: f64 },
    Derated { resistance: f64, capacitance: f64, derating: Derating },
    Dea(DeaLoadParams),
}

impl LoadSpec {
    pub fn mimic(capacitance: f64) -> Self {
        LoadSpec::SeriesRc {
            resistance: MIMIC_SERIES_RESISTANCE,
            capacitance,
        }
    }

    pub fn parse(desc: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("load '{desc}': {m}"));
        match desc {
            "none" => return Ok(LoadSpec::None),
            "dea" => return Ok(LoadSpec::Dea(DeaLoadParams::default())),
            _ => {}
        }
        let (derated, body) = match desc.strip_prefix("derated:") {
            Some(b) => (true, b),
            None => (false, desc),
        };
        let (c, r) = match body.split_once('@') {
            Some((c, r)) => (c, Some(r)),
            None => (body, None),
        };
        let capacitance = parse_value(c).map_err(bad)?;
        let resistance = match r {
            Some(r) => parse_value(r).map_err(bad)?,
            None => MIMIC_SERIES_RESISTANCE,
        };
        if !(capacitance > 0.0 && resistance > 0.0) {
            return Err(bad("values must be positive".into()));
        }
        Ok(if derated {
            LoadSpec::Derated {
                resistance,
                capacitance,
                derating: CERAMIC_DERATING,
            }
        } else {
            LoadSpec::SeriesRc {
                resistance,
                capacitance,
            }
        })
    }

    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        list.split(',').map(|s| LoadSpec::parse(s.trim())).collect()
    }

    pub fn fragment(&self) -> Result<Fragment> {
        match *self {
            LoadSpec::None => Ok(Fragment::default()),
            LoadSpec::SeriesRc {
                resistance,
                capacitance,
            } => series_rc_load(resistance, capacitance, None),
            LoadSpec::Derated {
                resistance,
                capacitance,
                derating,
            } => series_rc_load(resistance, capacitance, Some(derating)),
            LoadSpec::Dea(p) => expand_dea_load(&p),
        }
    }

    /// Label of the node above the load capacitance, for a load attached
    /// with the given tag.
    pub fn capacitor_node(&self, tag: &str) -> Option<String> {
        match self {
            LoadSpec::None => None,
            _ => Some(format!("{tag}_m")),
        }
    }
}

impl fmt::Display for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rc = |f: &mut fmt::Formatter<'_>, r: f64, c: f64| {
            if r == MIMIC_SERIES_RESISTANCE {
                write!(f, "{}", format_value(c))
            } else {
                write!(f, "{}@{}", format_value(c), format_value(r))
            }
        };
        match *self {
            LoadSpec::None => f.write_str("none"),
            LoadSpec::Dea(p) if p == DeaLoadParams::default() => f.write_str("dea"),
            LoadSpec::Dea(p) => write!(
                f,
                "dea({},{},{})",
                format_value(p.capacitance),
                format_value(p.series_resistance),
                format_value(p.parallel_resistance)
            ),
            LoadSpec::SeriesRc {
                resistance,
                capacitance,
            } => rc(f, resistance, capacitance),
            LoadSpec::Derated {
                resistance,
                capacitance,
                ..
            } => {
                f.write_str("derated:")?;
                rc(f, resistance, capacitance)
            }
        }
    }
}

fn settings(step: f64, stop: f64, damping_steps: usize) -> IntegrationSettings {
    IntegrationSettings {
        step,
        stop,
        damping_steps,
    }
}

fn node_probes(labels: &[&str]) -> Vec<ProbeSpec> {
    labels.iter().map(|l| ProbeSpec::Node(l.to_string())).collect()
}

/// One half-bridge with its supply, stack, load, and run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeRecipe {
    pub supply: SupplySpec,
    pub stack: StackParams,
    pub load: LoadSpec,
    pub control: ControlSignal,
    pub scope_probe: Option<ScopeProbe>,
    pub settings: IntegrationSettings,
    pub probes: Vec<ProbeSpec>,
    pub sweep_frequencies: Vec<f64>,
    pub sweep_loads: Vec<LoadSpec>,
}

impl BridgeRecipe {
    pub fn scenario(&self) -> Result<Scenario> {
        let mut circuit = build_half_bridge(&self.supply, &self.stack, self.control, &self.load.fragment()?)?;
        if let Some(p) = &self.scope_probe {
            attach_scope_probe(&mut circuit, "O", p)?;
        }
        let mut analyses = vec![Analysis::Transient];
        if !self.sweep_frequencies.is_empty() {
            analyses.push(Analysis::Sweep {
                frequencies: self.sweep_frequencies.clone(),
            });
        }
        let s = Scenario {
            circuit,
            settings: self.settings,
            probes: self.probes.clone(),
            analyses,
        };
        s.settings.validate()?;
        Ok(s)
    }

    /// Node above the load capacitance, if the load has one.
    pub fn load_capacitor_node(&self) -> Option<String> {
        self.load.capacitor_node(LOAD_TAG)
    }
}

/// Two half-bridges on one converter; channel 2 lags channel 1 by
/// `phase_difference` radians.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRecipe {
    pub converter: ConverterParams,
    pub stack: StackParams,
    pub load: LoadSpec,
    pub control: ControlSignal,
    pub phase_difference: f64,
    pub settings: IntegrationSettings,
    pub probes: Vec<ProbeSpec>,
}

impl DualRecipe {
    pub fn scenario(&self) -> Result<Scenario> {
        let load = self.load.fragment()?;
        let channels = [
            ChannelSpec {
                control: self.control,
                load: load.clone(),
            },
            ChannelSpec {
                control: self.control.with_phase(self.control.phase + self.phase_difference),
                load,
            },
        ];
        let circuit = build_dual_channel(&self.converter, &self.stack, &channels)?;
        self.settings.validate()?;
        Ok(Scenario {
            circuit,
            settings: self.settings,
            probes: self.probes.clone(),
            analyses: vec![Analysis::Transient],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    Bridge(BridgeRecipe),
    Dual(DualRecipe),
}

/// Unit names an override value may carry after its suffix (`0.5us`).
const UNIT_NAMES: [&str; 6] = ["Hz", "ohm", "s", "V", "F", "A"];

fn parse_override(key: &str, value: &str) -> Result<f64> {
    parse_value(value)
        .or_else(|m| {
            UNIT_NAMES
                .iter()
                .find_map(|u| value.strip_suffix(u).filter(|v| !v.is_empty()))
                .map_or(Err(m.clone()), |v| parse_value(v).map_err(|_| m))
        })
        .map_err(|m| Error::InvalidParameter(format!("--set {key}: {m}")))
}

fn optional_override(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_override(key, value).map(Some)
    }
}

fn unknown_key(key: &str, known: &[&str]) -> Error {
    Error::InvalidParameter(format!("unknown parameter path '{key}'; known paths: {}", known.join(", ")))
}

/// Override paths shared by every scenario.
pub(crate) const COMMON_KEYS: [&str; 6] = ["tran.step", "tran.stop", "tran.damp", "ctrl.f", "ctrl.duty", "ctrl.phase"];

fn set_common(settings: &mut IntegrationSettings, control: &mut ControlSignal, key: &str, value: &str) -> Result<bool> {
    match key {
        "tran.step" => settings.step = parse_override(key, value)?,
        "tran.stop" => settings.stop = parse_override(key, value)?,
        "tran.damp" => {
            settings.damping_steps = value
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("--set {key}: expected an integer, got '{value}'")))?
        }
        "ctrl.f" => control.frequency = parse_override(key, value)?,
        "ctrl.duty" => control.duty = parse_override(key, value)?,
        "ctrl.phase" => control.phase = parse_override(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

const BRIDGE_KEYS: [&str; 16] = [
    "tran.step",
    "tran.stop",
    "tran.damp",
    "ctrl.f",
    "ctrl.duty",
    "ctrl.phase",
    "supply.voltage",
    "supply.rint",
    "supply.cpar",
    "supply.rout",
    "supply.slew",
    "stack.rbal",
    "stack.csnub",
    "stack.ron",
    "stack.roff",
    "load.type",
];

const DUAL_KEYS: [&str; 12] = [
    "tran.step",
    "tran.stop",
    "tran.damp",
    "ctrl.f",
    "ctrl.duty",
    "ctrl.phase",
    "dual.phase",
    "supply.voltage",
    "supply.rint",
    "supply.cpar",
    "stack.rbal",
    "load.type",
];

fn set_stack(stack: &mut StackParams, key: &str, value: &str) -> Result<bool> {
    match key {
        "stack.rbal" => stack.balancing_resistance = optional_override(key, value)?,
        "stack.csnub" => stack.snubber_capacitance = optional_override(key, value)?,
        "stack.ron" => stack.on_resistance = parse_override(key, value)?,
        "stack.roff" => {
            let r = parse_override(key, value)?;
            stack.off_resistance.iter_mut().for_each(|x| *x = r);
        }
        _ => return Ok(false),
    }
    Ok(true)
}

impl Recipe {
    pub fn scenario(&self) -> Result<Scenario> {
        match self {
            Recipe::Bridge(b) => b.scenario(),
            Recipe::Dual(d) => d.scenario(),
        }
    }

    pub fn settings(&self) -> &IntegrationSettings {
        match self {
            Recipe::Bridge(b) => &b.settings,
            Recipe::Dual(d) => &d.settings,
        }
    }

    /// Apply a dotted-path override such as `tran.step=0.5u`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self {
            Recipe::Bridge(b) => {
                if set_common(&mut b.settings, &mut b.control, key, value)? || set_stack(&mut b.stack, key, value)? {
                    return Ok(());
                }
                match (key, &mut b.supply) {
                    ("supply.voltage", SupplySpec::Bench(p)) => p.set_voltage = parse_override(key, value)?,
                    ("supply.rout", SupplySpec::Bench(p)) => p.output_resistance = parse_override(key, value)?,
                    ("supply.slew", SupplySpec::Bench(p)) => p.slew_limit = parse_override(key, value)?,
                    ("supply.voltage", SupplySpec::Converter(p)) => {
                        p.open_circuit_voltage = parse_override(key, value)?
                    }
                    ("supply.rint", SupplySpec::Converter(p)) => p.internal_resistance = parse_override(key, value)?,
                    ("supply.cpar", SupplySpec::Converter(p)) => p.parallel_capacitance = parse_override(key, value)?,
                    ("load.type", _) => b.load = LoadSpec::parse(value)?,
                    ("supply.rout" | "supply.slew" | "supply.rint" | "supply.cpar", _) => {
                        return Err(Error::InvalidParameter(format!(
                            "parameter path '{key}' does not apply to this supply"
                        )))
                    }
                    _ => return Err(unknown_key(key, &BRIDGE_KEYS)),
                }
            }
            Recipe::Dual(d) => {
                if set_common(&mut d.settings, &mut d.control, key, value)? || set_stack(&mut d.stack, key, value)? {
                    return Ok(());
                }
                match key {
                    "dual.phase" => d.phase_difference = parse_override(key, value)?,
                    "supply.voltage" => d.converter.open_circuit_voltage = parse_override(key, value)?,
                    "supply.rint" => d.converter.internal_resistance = parse_override(key, value)?,
                    "supply.cpar" => d.converter.parallel_capacitance = parse_override(key, value)?,
                    "load.type" => d.load = LoadSpec::parse(value)?,
                    _ => return Err(unknown_key(key, &DUAL_KEYS)),
                }
            }
        }
        Ok(())
    }
}

impl Scenario {
    /// Overrides available on any scenario, including parsed netlists:
    /// `tran.*` and `ctrl.*` (the latter applied to every control).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut probe = ControlSignal::square(1.0);
        let is_ctrl = key.starts_with("ctrl.");
        if !set_common(&mut self.settings, &mut probe, key, value)? {
            return Err(unknown_key(key, &COMMON_KEYS));
        }
        if is_ctrl {
            for (_, c) in self.circuit.controls_mut() {
                match key {
                    "ctrl.f" => c.frequency = probe.frequency,
                    "ctrl.duty" => c.duty = probe.duty,
                    _ => c.phase = probe.phase,
                }
            }
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 11] = [
    "fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6b", "fig6c", "fig7", "fig7c", "fig8", "slew",
];

pub fn preset_names() -> Vec<String> {
    PRESETS.iter().map(|s| s.to_string()).collect()
}

fn bench(v: f64) -> SupplySpec {
    SupplySpec::Bench(BenchSupplyParams::new(v))
}

fn converter() -> SupplySpec {
    SupplySpec::Converter(ConverterParams::default())
}

fn balanced(rbal: f64) -> StackParams {
    StackParams {
        balancing_resistance: Some(rbal),
        ..StackParams::default()
    }
}

/// Stack with a turn-off mismatch between the two devices of each side.
fn skewed_stack(snubber: Option<f64>) -> StackParams {
    StackParams {
        snubber_capacitance: snubber,
        turn_off_skew: vec![0.0, 50e-6, 0.0, 50e-6],
        ..StackParams::default()
    }
}

pub fn preset_recipe(name: &str) -> Result<Recipe> {
    let stack_probes = node_probes(&["A", "B", "O", "C"]);
    let bridge = |supply, stack, load, f: f64, step, stop, probes: Vec<ProbeSpec>| BridgeRecipe {
        supply,
        stack,
        load,
        control: ControlSignal::square(f),
        scope_probe: None,
        settings: settings(step, stop, 2),
        probes,
        sweep_frequencies: Vec::new(),
        sweep_loads: Vec::new(),
    };
    let fig6 = |rbal| {
        bridge(
            converter(),
            balanced(rbal),
            LoadSpec::Dea(DeaLoadParams::default()),
            100.0,
            1e-6,
            0.5,
            node_probes(&["A", "O"]),
        )
    };
    let r = match name {
        "fig2" => Recipe::Bridge(bridge(
            bench(800.0),
            StackParams {
                balancing_resistance: None,
                ..StackParams::uneven()
            },
            LoadSpec::None,
            1.0,
            100e-6,
            2.0,
            stack_probes,
        )),
        "fig3" => Recipe::Bridge(bridge(bench(800.0), StackParams::uneven(), LoadSpec::None, 1.0, 100e-6, 2.0, stack_probes)),
        "fig4a" | "fig4b" => {
            let snub = (name == "fig4b").then_some(220e-12);
            Recipe::Bridge(BridgeRecipe {
                scope_probe: Some(ScopeProbe::default()),
                ..bridge(bench(1800.0), skewed_stack(snub), LoadSpec::None, 1e3, 10e-9, 3e-3, stack_probes)
            })
        }
        "fig5" => Recipe::Bridge(bridge(
            bench(1800.0),
            StackParams::default(),
            LoadSpec::mimic(10e-9),
            100.0,
            1e-6,
            30e-3,
            node_probes(&["A", "O"]),
        )),
        "fig6b" => Recipe::Bridge(fig6(3.6e6)),
        "fig6c" => Recipe::Bridge(fig6(1.8e6)),
        "fig7" => {
            let mut probes = node_probes(&["A", "O"]);
            probes.push(ProbeSpec::Current(CONVERTER_NAME.into()));
            Recipe::Bridge(BridgeRecipe {
                sweep_frequencies: vec![2.0, 5.0, 10.0, 30.0, 100.0, 300.0, 1000.0],
                sweep_loads: vec![
                    LoadSpec::mimic(10e-9),
                    LoadSpec::mimic(20e-9),
                    LoadSpec::mimic(50e-9),
                    LoadSpec::Dea(DeaLoadParams::default()),
                ],
                ..bridge(converter(), balanced(1.8e6), LoadSpec::mimic(10e-9), 100.0, 1e-6, 0.1, probes)
            })
        }
        "fig7c" => {
            let tag1 = channel_tag(1);
            let tag2 = channel_tag(2);
            let mut probes = node_probes(&["A", &format!("O_{tag1}"), &format!("O_{tag2}")]);
            probes.push(ProbeSpec::Current(CONVERTER_NAME.into()));
            Recipe::Dual(DualRecipe {
                converter: ConverterParams::default(),
                stack: balanced(1.8e6),
                load: LoadSpec::mimic(10e-9),
                control: ControlSignal::square(100.0),
                phase_difference: FRAC_PI_2,
                settings: settings(1e-6, 0.1, 2),
                probes,
            })
        }
        "fig8" => {
            let m = format!("{LOAD_TAG}_m");
            Recipe::Bridge(BridgeRecipe {
                sweep_frequencies: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0],
                ..bridge(
                    converter(),
                    balanced(1.8e6),
                    LoadSpec::Dea(DeaLoadParams::default()),
                    6.0,
                    10e-6,
                    2.0,
                    node_probes(&["O", &m]),
                )
            })
        }
        "slew" => Recipe::Bridge(BridgeRecipe {
            scope_probe: Some(ScopeProbe::default()),
            ..bridge(bench(1800.0), StackParams::default(), LoadSpec::None, 1e3, 10e-9, 2e-3, node_probes(&["O"]))
        }),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                available: preset_names(),
            })
        }
    };
    Ok(r)
}

pub fn load_preset(name: &str) -> Result<Scenario> {
    preset_recipe(name)?.scenario()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ComponentKind;

    #[test]
    fn load_descriptors_round_trip() {
        for d in ["none", "dea", "10n", "50n", "derated:10n", "10n@50k"] {
            assert_eq!(LoadSpec::parse(d).unwrap().to_string(), d);
        }
        assert!(LoadSpec::parse("10x").is_err());
        assert!(LoadSpec::parse("-10n").is_err());
    }

    #[test]
    fn unknown_preset_lists_names() {
        let e = load_preset("fig9").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("fig9") && msg.contains("fig3") && msg.contains("slew"), "{msg}");
    }

    #[test]
    fn fig3_parameters() {
        let Recipe::Bridge(r) = preset_recipe("fig3").unwrap() else { panic!() };
        assert_eq!(r.supply, bench(800.0));
        assert_eq!(r.control.frequency, 1.0);
        assert_eq!(r.stack.balancing_resistance, Some(3.6e6));
    }

    #[test]
    fn fig6c_uses_converter_and_halved_balancers() {
        let s = load_preset("fig6c").unwrap();
        assert!(s.circuit.component(CONVERTER_NAME).is_some());
        assert_eq!(
            s.circuit.component("R1").unwrap().kind,
            ComponentKind::Resistor { resistance: 1.8e6 }
        );
        assert_eq!(s.circuit.controls()["g"].frequency, 100.0);
    }

    #[test]
    fn overrides() {
        let mut r = preset_recipe("fig5").unwrap();
        r.set("tran.step", "0.5u").unwrap();
        assert_eq!(r.settings().step, 0.5e-6);
        r.set("tran.step", "0.5us").unwrap();
        assert_eq!(r.settings().step, 0.5e-6);
        r.set("ctrl.f", "30Hz").unwrap();
        assert!(r.set("ctrl.f", "30Hzz").is_err());
        assert!(r.set("tran.stpe", "1u").is_err());
        assert!(r.set("supply.rint", "1M").is_err());
        r.set("stack.rbal", "none").unwrap();
        assert!(r.scenario().unwrap().circuit.component("R1").is_none());
    }
}
