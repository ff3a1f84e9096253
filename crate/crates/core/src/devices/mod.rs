//! Behavioral models of the parts around the switch stack: the miniature
//! DC-HVDC converter, the benchtop generator, the actuator load, ceramic
//! capacitor derating, and the gate drivers.

mod driver;

pub use driver::{driver_schedule, ControlSignal, DriverSpec, SwitchEvent, SwitchSchedule};

use crate::circuit::{Circuit, ComponentKind, Derating, NodeId, SourceSignal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterParams {
    pub open_circuit_voltage: f64,
    pub internal_resistance: f64,
    pub parallel_capacitance: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        ConverterParams {
            open_circuit_voltage: 4500.0,
            internal_resistance: 3e6,
            parallel_capacitance: 3e-9,
        }
    }
}

impl ConverterParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("open-circuit voltage", self.open_circuit_voltage)?;
        check_positive("internal resistance", self.internal_resistance)?;
        check_positive("parallel capacitance", self.parallel_capacitance)
    }

    pub fn short_circuit_current(&self) -> f64 {
        self.open_circuit_voltage / self.internal_resistance
    }

    /// The converter as a single compound component.
    pub fn component(&self) -> ComponentKind {
        ComponentKind::ConverterSource {
            open_circuit_voltage: self.open_circuit_voltage,
            internal_resistance: self.internal_resistance,
            parallel_capacitance: self.parallel_capacitance,
        }
    }
}

/// Benchtop high-voltage generator: slew-limited ideal source behind an
/// output resistance. The source ramps up from zero at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSupplyParams {
    pub set_voltage: f64,
    pub output_resistance: f64,
    pub slew_limit: f64,
}

impl BenchSupplyParams {
    pub fn new(set_voltage: f64) -> Self {
        BenchSupplyParams {
            set_voltage,
            output_resistance: 1e3,
            slew_limit: 35e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("set voltage", self.set_voltage)?;
        check_positive("output resistance", self.output_resistance)?;
        check_positive("slew limit", self.slew_limit)
    }
}

/// Electrical equivalent of a dielectric elastomer actuator: series
/// electrode resistance feeding the capacitance with a parallel leakage.
/// An infinite parallel resistance drops the leakage path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeaLoadParams {
    pub capacitance: f64,
    pub series_resistance: f64,
    pub parallel_resistance: f64,
}

impl Default for DeaLoadParams {
    fn default() -> Self {
        DeaLoadParams {
            capacitance: 49e-9,
            series_resistance: 60e3,
            parallel_resistance: 6.6e6,
        }
    }
}

impl DeaLoadParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("capacitance", self.capacitance)?;
        check_positive("series resistance", self.series_resistance)?;
        if !(self.parallel_resistance > 0.0) || self.parallel_resistance.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "parallel resistance must be positive, got {}",
                self.parallel_resistance
            )));
        }
        Ok(())
    }

    pub fn dc_resistance(&self) -> f64 {
        self.series_resistance + self.parallel_resistance
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Capacitance of a ceramic part at voltage `v` under linear derating,
/// clamped at the rated voltage.
pub fn derated_capacitance(c0: f64, derating: f64, rated_voltage: f64, v: f64) -> Result<f64> {
    if !(derating >= 0.0) || !(c0 > 0.0) || !(rated_voltage > 0.0) {
        return Err(Error::InvalidParameter("derating inputs must be non-negative".into()));
    }
    if derating * v.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "derating {derating:e}/V at {v} V removes all capacitance; nonphysical model"
        )));
    }
    Ok(derate(c0, Derating { per_volt: derating, rated_voltage }, v))
}

/// Clamped derating without the range check; callers guarantee
/// `per_volt * rated_voltage < 1`.
pub(crate) fn derate(c0: f64, d: Derating, v: f64) -> f64 {
    c0 * (1.0 - d.per_volt * v.abs().min(d.rated_voltage))
}

/// Where a fragment terminal lands when attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminal {
    Pos,
    Neg,
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentPart {
    pub name: String,
    pub kind: ComponentKind,
    pub pos: Terminal,
    pub neg: Terminal,
}

/// A two-terminal sub-network, attached to a circuit between two nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fragment {
    pub parts: Vec<FragmentPart>,
}

impl Fragment {
    fn push(&mut self, name: &str, kind: ComponentKind, pos: Terminal, neg: Terminal) {
        self.parts.push(FragmentPart {
            name: name.to_string(),
            kind,
            pos,
            neg,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Attach between `pos` and `neg`. Components are named
    /// `<part>_<tag>`; internal nodes are labelled `<tag>_<internal>`.
    pub fn attach(&self, circuit: &mut Circuit, pos: NodeId, neg: NodeId, tag: &str) -> Result<()> {
        for part in &self.parts {
            let mut resolve = |t: &Terminal| match t {
                Terminal::Pos => pos,
                Terminal::Neg => neg,
                Terminal::Internal(n) => circuit.node(&format!("{tag}_{n}")),
            };
            let p = resolve(&part.pos);
            let n = resolve(&part.neg);
            circuit.add(&format!("{}_{tag}", part.name), p, n, part.kind.clone())?;
        }
        Ok(())
    }
}

/// Converter as primitive parts: ideal source, internal resistor, and
/// output capacitance.
pub fn expand_converter(params: &ConverterParams) -> Result<Fragment> {
    params.validate()?;
    let mut f = Fragment::default();
    let emf = Terminal::Internal("emf".into());
    f.push(
        "V",
        ComponentKind::IdealSource {
            signal: SourceSignal::Dc {
                level: params.open_circuit_voltage,
            },
        },
        emf.clone(),
        Terminal::Neg,
    );
    f.push(
        "R",
        ComponentKind::Resistor {
            resistance: params.internal_resistance,
        },
        emf,
        Terminal::Pos,
    );
    f.push(
        "C",
        ComponentKind::Capacitor {
            capacitance: params.parallel_capacitance,
            derating: None,
        },
        Terminal::Pos,
        Terminal::Neg,
    );
    Ok(f)
}

pub fn expand_bench(params: &BenchSupplyParams) -> Result<Fragment> {
    params.validate()?;
    let mut f = Fragment::default();
    let emf = Terminal::Internal("emf".into());
    f.push(
        "V",
        ComponentKind::IdealSource {
            signal: SourceSignal::Ramp {
                level: params.set_voltage,
                slew: params.slew_limit,
                at: 0.0,
            },
        },
        emf.clone(),
        Terminal::Neg,
    );
    f.push(
        "R",
        ComponentKind::Resistor {
            resistance: params.output_resistance,
        },
        emf,
        Terminal::Pos,
    );
    Ok(f)
}

/// Series resistor feeding a capacitor: the bench mimic of an actuator.
pub fn series_rc_load(resistance: f64, capacitance: f64, derating: Option<Derating>) -> Result<Fragment> {
    check_positive("load resistance", resistance)?;
    check_positive("load capacitance", capacitance)?;
    let mut f = Fragment::default();
    let mid = Terminal::Internal("m".into());
    f.push("Rs", ComponentKind::Resistor { resistance }, Terminal::Pos, mid.clone());
    f.push(
        "C",
        ComponentKind::Capacitor {
            capacitance,
            derating,
        },
        mid,
        Terminal::Neg,
    );
    Ok(f)
}

pub fn expand_dea_load(params: &DeaLoadParams) -> Result<Fragment> {
    params.validate()?;
    let mut f = series_rc_load(params.series_resistance, params.capacitance, None)?;
    if params.parallel_resistance.is_finite() {
        f.push(
            "Rp",
            ComponentKind::Resistor {
                resistance: params.parallel_resistance,
            },
            Terminal::Internal("m".into()),
            Terminal::Neg,
        );
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derating_examples() {
        assert_eq!(derated_capacitance(10e-9, 0.0, 2000.0, 1800.0).unwrap(), 10e-9);
        assert_eq!(derated_capacitance(10e-9, 2e-4, 2000.0, 0.0).unwrap(), 10e-9);
        let c = derated_capacitance(10e-9, 2e-4, 2000.0, 1800.0).unwrap();
        assert!((c - 6.4e-9).abs() < 1e-21);
        assert!(derated_capacitance(10e-9, 2e-4, 2000.0, 5000.0).is_err());
    }

    #[test]
    fn derating_clamps_at_rated_voltage() {
        let a = derated_capacitance(10e-9, 1e-4, 2000.0, 2000.0).unwrap();
        let b = derated_capacitance(10e-9, 1e-4, 2000.0, 3000.0).unwrap();
        assert_eq!(a, b);
    }

    proptest::proptest! {
        #[test]
        fn derating_is_monotone_in_magnitude(v1 in -4000.0f64..4000.0, v2 in -4000.0f64..4000.0) {
            let d = Derating { per_volt: 2e-4, rated_voltage: 2000.0 };
            let (lo, hi) = if v1.abs() <= v2.abs() { (v1, v2) } else { (v2, v1) };
            proptest::prop_assert!(derate(1e-8, d, hi) <= derate(1e-8, d, lo));
            proptest::prop_assert_eq!(derate(1e-8, d, v1), derate(1e-8, d, -v1));
        }
    }

    #[test]
    fn dea_defaults() {
        let p = DeaLoadParams::default();
        assert!((p.dc_resistance() - 6.66e6).abs() < 1e-6);
        assert_eq!(expand_dea_load(&p).unwrap().parts.len(), 3);
    }

    #[test]
    fn dea_without_leakage_is_the_mimic_load() {
        let p = DeaLoadParams {
            capacitance: 10e-9,
            series_resistance: 100e3,
            parallel_resistance: f64::INFINITY,
        };
        assert_eq!(
            expand_dea_load(&p).unwrap(),
            series_rc_load(100e3, 10e-9, None).unwrap()
        );
    }

    #[test]
    fn converter_short_circuit_current() {
        let p = ConverterParams::default();
        assert!((p.short_circuit_current() - 1.5e-3).abs() < 1e-15);
    }
}
