use std::fmt::Write;

use crate::circuit::{ComponentKind, SourceSignal};
use crate::mna::ProbeSpec;
use crate::units::format_value;

use super::{Analysis, Scenario};

/// Canonical netlist text. Component names are expected to start with the
/// letter of their kind (`R`, `C`, `S`, `V`, `X`), as the builders ensure.
pub fn print(scenario: &Scenario) -> String {
    let v = format_value;
    let mut out = String::new();
    let c = &scenario.circuit;
    for (name, ctrl) in c.controls() {
        // Duty and phase keep their full shortest round-trip digits.
        let _ = writeln!(
            out,
            ".ctrl {name} square f={} duty={} phase={}",
            v(ctrl.frequency),
            ctrl.duty,
            ctrl.phase
        );
    }
    for comp in c.components() {
        let _ = write!(out, "{} {} {}", comp.name, c.label(comp.pos), c.label(comp.neg));
        match &comp.kind {
            ComponentKind::Resistor { resistance } => {
                let _ = write!(out, " {}", v(*resistance));
            }
            ComponentKind::Capacitor {
                capacitance,
                derating,
            } => {
                let _ = write!(out, " {}", v(*capacitance));
                if let Some(d) = derating {
                    let _ = write!(out, " derate={} vrated={}", v(d.per_volt), v(d.rated_voltage));
                }
            }
            ComponentKind::IdealSource { signal } => {
                let _ = match *signal {
                    SourceSignal::Dc { level } => write!(out, " dc={}", v(level)),
                    SourceSignal::Step { level, at } => write!(out, " step={} at={}", v(level), v(at)),
                    SourceSignal::Ramp { level, slew, at } => {
                        write!(out, " ramp={} slew={} at={}", v(level), v(slew), v(at))
                    }
                };
            }
            ComponentKind::ConverterSource {
                open_circuit_voltage,
                internal_resistance,
                parallel_capacitance,
            } => {
                let _ = write!(
                    out,
                    " converter voc={} rint={} cpar={}",
                    v(*open_circuit_voltage),
                    v(*internal_resistance),
                    v(*parallel_capacitance)
                );
            }
            ComponentKind::Switch {
                on_resistance,
                off_resistance,
                drive,
            } => {
                let _ = write!(
                    out,
                    " ctrl={}{} ron={} roff={} ton={} toff={} offset={}",
                    if drive.inverted { "!" } else { "" },
                    drive.control,
                    v(*on_resistance),
                    v(*off_resistance),
                    v(drive.driver.turn_on_delay),
                    v(drive.driver.turn_off_delay),
                    v(drive.driver.offset)
                );
            }
            ComponentKind::Probe {
                input_resistance,
                input_capacitance,
            } => {
                let _ = write!(out, " probe rin={} cin={}", v(*input_resistance), v(*input_capacitance));
            }
        }
        out.push('\n');
    }
    let s = &scenario.settings;
    let _ = writeln!(out, ".tran {} {} damp={}", v(s.step), v(s.stop), s.damping_steps);
    for p in &scenario.probes {
        let _ = match p {
            ProbeSpec::Node(n) => writeln!(out, ".probe {n}"),
            ProbeSpec::Pair(a, b) => writeln!(out, ".probe {a} {b}"),
            ProbeSpec::Current(n) => writeln!(out, ".probe I({n})"),
        };
    }
    for a in &scenario.analyses {
        match a {
            Analysis::Transient => {}
            Analysis::Sweep { frequencies } => {
                let list: Vec<String> = frequencies.iter().map(|f| v(*f)).collect();
                let _ = writeln!(out, ".sweep f={}", list.join(","));
            }
            Analysis::MonteCarlo(m) => {
                let _ = write!(
                    out,
                    ".mc trials={} sigma={} spread={} seed={}",
                    m.trials,
                    v(m.sigma),
                    v(m.offset_spread),
                    m.seed
                );
                if let Some(med) = m.off_resistance_median {
                    let _ = write!(out, " median={}", v(med));
                }
                out.push('\n');
            }
        }
    }
    out.push_str(".end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse, ScenarioSource};

    #[test]
    fn canonical_values() {
        let text = ".ctrl g square f=1 phase=3.141592653589793\nV1 A 0 dc=800\nR1 A 0 3600000\n.tran 1u 1m\n";
        let s = parse(&ScenarioSource::new("t", text)).unwrap();
        let printed = print(&s);
        assert!(printed.contains("R1 A 0 3.6M\n"), "{printed}");
        assert!(printed.contains("phase=3.141592653589793"), "{printed}");
        let again = parse(&ScenarioSource::new("t", printed)).unwrap();
        assert_eq!(again, s);
    }
}
