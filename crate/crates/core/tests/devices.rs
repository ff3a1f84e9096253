use std::collections::BTreeMap;

use proptest::prelude::*;

use hvbridge::circuit::{ComponentKind, SourceSignal};
use hvbridge::devices::{
    derated_capacitance, driver_schedule, expand_converter, expand_dea_load, ControlSignal, ConverterParams,
    DeaLoadParams, DriverSpec,
};
use hvbridge::mna::{dc_operating_point, run_transient_from, InitialState, IntegrationSettings, ProbeSpec};
use hvbridge::{Circuit, NodeId};

fn converter_circuit(load: Option<f64>) -> Circuit {
    let mut c = Circuit::new();
    let a = c.node("A");
    expand_converter(&ConverterParams::default())
        .unwrap()
        .attach(&mut c, a, NodeId::GROUND, "conv")
        .unwrap();
    if let Some(r) = load {
        c.add_between("RL", "A", "0", ComponentKind::Resistor { resistance: r }).unwrap();
    }
    c
}

#[test]
fn converter_open_circuit_rise() {
    let p = ConverterParams::default();
    let tau = p.internal_resistance * p.parallel_capacitance;
    let settings = IntegrationSettings::new(tau / 1000.0, 10.0 * tau);
    let w = run_transient_from(
        &converter_circuit(None),
        &settings,
        &BTreeMap::new(),
        &InitialState::CapacitorVoltages(BTreeMap::new()),
        &[ProbeSpec::Node("A".into())],
    )
    .unwrap()
    .remove(0);
    let mut worst = 0.0f64;
    for i in 0..w.len() {
        let exact = 4500.0 * (1.0 - (-w.time(i) / tau).exp());
        worst = worst.max((w.samples[i] - exact).abs() / 4500.0);
    }
    assert!(worst <= 1e-4, "{worst:e}");
    assert!((w.samples.last().unwrap() - 4500.0).abs() < 4500.0 * 1e-4);
}

#[test]
fn converter_static_loading() {
    let op = dc_operating_point(&converter_circuit(None), &BTreeMap::new()).unwrap();
    assert!((op.get("A").unwrap() - 4500.0).abs() < 1e-9);

    let op = dc_operating_point(&converter_circuit(Some(3e6)), &BTreeMap::new()).unwrap();
    assert!((op.get("A").unwrap() - 2250.0).abs() < 1e-9);

    let short = 1e-3;
    let op = dc_operating_point(&converter_circuit(Some(short)), &BTreeMap::new()).unwrap();
    let i = op.get("A").unwrap() / short;
    assert!((i - 1.5e-3).abs() < 1.5e-3 * 1e-6, "{i}");
    assert_eq!(ConverterParams::default().short_circuit_current(), 1.5e-3);
}

#[test]
fn derating_at_operating_voltage() {
    let c = derated_capacitance(10e-9, 2e-4, 2000.0, 1800.0).unwrap();
    assert!((c - 6.4e-9).abs() < 1e-21);
    assert_eq!(derated_capacitance(10e-9, 0.0, 2000.0, 1800.0).unwrap(), 10e-9);
    assert_eq!(derated_capacitance(10e-9, 2e-4, 2000.0, 0.0).unwrap(), 10e-9);
}

#[test]
fn dea_load_settles_to_leakage_divider() {
    let p = DeaLoadParams::default();
    assert!((p.dc_resistance() - 6.66e6).abs() < 1e-3);
    let mut c = Circuit::new();
    c.add_between(
        "V1",
        "A",
        "0",
        ComponentKind::IdealSource {
            signal: SourceSignal::Dc { level: 1800.0 },
        },
    )
    .unwrap();
    let a = c.find_node("A").unwrap();
    expand_dea_load(&p).unwrap().attach(&mut c, a, NodeId::GROUND, "load").unwrap();
    let op = dc_operating_point(&c, &BTreeMap::new()).unwrap();
    let v = op.get("load_m").unwrap();
    assert!((v - 1800.0 * 6.6 / 6.66).abs() < 1e-6, "{v}");
    assert!((v - 1783.8).abs() < 0.05);
}

#[test]
fn driver_examples() {
    let s = driver_schedule(&ControlSignal::square(1.0), &DriverSpec::default(), 1.0, false).unwrap();
    assert!((s.events[0].time - 0.4e-3).abs() < 1e-15 && s.events[0].on);

    let ideal = driver_schedule(&ControlSignal::square(10.0), &DriverSpec::IDEAL, 0.3, false).unwrap();
    let edges: Vec<f64> = ideal.events.iter().map(|e| e.time).collect();
    let want: Vec<f64> = (1..6).map(|k| k as f64 * 0.05).collect();
    assert_eq!(edges.len(), want.len());
    assert!(edges.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));

    assert!(driver_schedule(&ControlSignal::square(1e3), &DriverSpec::default(), 0.01, false).is_ok());
    assert!(driver_schedule(&ControlSignal::square(10e3), &DriverSpec::default(), 0.01, false).is_err());
}

proptest! {
    #[test]
    fn schedules_are_monotone_and_alternate(
        f in 1.0f64..1000.0,
        duty in 0.3f64..0.7,
        phase in -6.0f64..6.0,
        offset in 0.0f64..50e-6,
        inverted in any::<bool>(),
    ) {
        let control = ControlSignal { frequency: f, duty, phase };
        let driver = DriverSpec { offset, ..DriverSpec::default() };
        let stop = 20.0 / f;
        match driver_schedule(&control, &driver, stop, inverted) {
            Ok(s) => {
                let mut state = s.initial;
                let mut last = 0.0;
                for e in &s.events {
                    prop_assert!(e.time > last || (last == 0.0 && e.time > 0.0));
                    prop_assert!(e.on != state);
                    state = e.on;
                    last = e.time;
                }
            }
            // Only periods too short for the driver may be refused.
            Err(_) => prop_assert!(duty.min(1.0 - duty) / f <= 0.4e-3 + offset),
        }
    }

    #[test]
    fn derating_is_monotone_and_continuous(v in 0.0f64..3000.0, dv in 0.0f64..100.0) {
        let c = |v: f64| derated_capacitance(10e-9, 2e-4, 2000.0, v).unwrap();
        prop_assert!(c(v + dv) <= c(v));
        // Lipschitz with constant c0 * derating.
        prop_assert!((c(v + 1e-3) - c(v)).abs() <= 10e-9 * 2e-4 * 1e-3 * (1.0 + 1e-6));
        prop_assert!(c(-v) == c(v));
    }
}
