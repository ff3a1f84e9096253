use sha2::{Digest, Sha256};

use crate::circuit::{Circuit, ComponentKind, SourceSignal};

/// SHA-256 over the structure and values that enter the system matrix:
/// node count, component kinds, terminals, parameter bit patterns, and the
/// control signals switches refer to. Component names and node labels do not
/// contribute. Returned as lowercase hex.
pub fn stamp_checksum(circuit: &Circuit) -> String {
    let mut h = Sha256::new();
    let mut put = |bytes: &[u8]| h.update(bytes);
    put(b"hvbridge-stamp-v1");
    put(&(circuit.node_count() as u64).to_le_bytes());
    put(&(circuit.components().len() as u64).to_le_bytes());
    let f = |v: f64| v.to_bits().to_le_bytes();
    for c in circuit.components() {
        let (tag, values): (u8, Vec<f64>) = match &c.kind {
            ComponentKind::Resistor { resistance } => (1, vec![*resistance]),
            ComponentKind::Capacitor {
                capacitance,
                derating,
            } => match derating {
                None => (2, vec![*capacitance]),
                Some(d) => (3, vec![*capacitance, d.per_volt, d.rated_voltage]),
            },
            ComponentKind::IdealSource { signal } => match *signal {
                SourceSignal::Dc { level } => (4, vec![level]),
                SourceSignal::Step { level, at } => (5, vec![level, at]),
                SourceSignal::Ramp { level, slew, at } => (6, vec![level, slew, at]),
            },
            ComponentKind::ConverterSource {
                open_circuit_voltage,
                internal_resistance,
                parallel_capacitance,
            } => (7, vec![*open_circuit_voltage, *internal_resistance, *parallel_capacitance]),
            ComponentKind::Switch {
                on_resistance,
                off_resistance,
                drive,
            } => {
                let ctrl = circuit.controls().get(&drive.control);
                let mut v = vec![
                    *on_resistance,
                    *off_resistance,
                    drive.driver.turn_on_delay,
                    drive.driver.turn_off_delay,
                    drive.driver.offset,
                    if drive.inverted { 1.0 } else { 0.0 },
                ];
                if let Some(s) = ctrl {
                    v.extend([s.frequency, s.duty, s.phase]);
                }
                (8, v)
            }
            ComponentKind::Probe {
                input_resistance,
                input_capacitance,
            } => (9, vec![*input_resistance, *input_capacitance]),
        };
        put(&[tag]);
        put(&(c.pos.0 as u64).to_le_bytes());
        put(&(c.neg.0 as u64).to_le_bytes());
        for v in values {
            put(&f(v));
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
