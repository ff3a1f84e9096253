mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hvbridge::circuit::ComponentKind;
use hvbridge::scenario::{load_preset, parse, print, Scenario, ScenarioSource, PRESETS};
use hvbridge::units::{format_value, parse_value};
use hvbridge::Error;

use support::netlists::random_netlist;

fn parse_text(text: &str) -> Result<Scenario, Error> {
    parse(&ScenarioSource::new("test.ckt", text))
}

fn assert_round_trip(origin: &str, text: &str) {
    let first = parse(&ScenarioSource::new(origin, text)).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let printed = print(&first);
    let second = parse(&ScenarioSource::new(origin, printed.clone())).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(first, second, "{printed}");
}

#[test]
fn presets_round_trip() {
    for name in PRESETS {
        let s = load_preset(name).unwrap();
        let text = print(&s);
        assert_round_trip(name, &text);
        assert_eq!(parse(&ScenarioSource::new(name, text)).unwrap(), s, "{name}");
    }
}

#[test]
fn grammar_examples() {
    let s = parse_text("V1 1 0 dc=800\nR1 1 0 3.6M\nC1 1 2 220p\nR2 2 0 1k\n.tran 1u 1m\n").unwrap();
    let r1 = s.circuit.component("R1").unwrap();
    assert_eq!(r1.kind, ComponentKind::Resistor { resistance: 3.6e6 });
    assert!(r1.neg.is_ground());
    let c1 = s.circuit.component("C1").unwrap();
    assert!(matches!(c1.kind, ComponentKind::Capacitor { capacitance, .. } if capacitance == 2.2e-10));
}

#[test]
fn undefined_control_is_located() {
    let err = parse_text("V1 1 0 dc=1\nR1 1 2 1k\nS1 1 2 ctrl=g ron=5 roff=1G\n.tran 1u 1m\n").unwrap_err();
    let Error::Parse(p) = err else { panic!("{err}") };
    assert_eq!(p.line, 3);
    assert!(p.column >= 1);
    assert!(p.message.contains("undefined control 'g'"), "{}", p.message);
}

#[test]
fn every_diagnostic_is_located() {
    let bad = [
        "R1 1 0\n.tran 1u 1m\n",
        "R1 1 0 3.6X\n.tran 1u 1m\n",
        "R1 1 0 1k\nR1 1 0 2k\n.tran 1u 1m\n",
        "R1 1 0 1k\n.bogus\n.tran 1u 1m\n",
        "R1 1 0 1k\n",
        "R1 1 0 1k\n.tran 1u 1m\n.end\nR2 1 0 1k\n",
        "R1 1 0 1k\nC1 1 2 1n\n.tran 1u 1m\n",
        "R1 1 0 1k\n.tran 1u 1m\n.probe nowhere\n",
    ];
    for text in bad {
        match parse_text(text) {
            Err(Error::Parse(p)) => {
                assert_eq!(p.origin, "test.ckt");
                assert!(p.line >= 1 && p.column >= 1, "{p}");
                assert!(!p.message.is_empty());
            }
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}

#[test]
fn canonical_printing() {
    assert_eq!(format_value(3_600_000.0), "3.6M");
    let s = parse_text(".ctrl g square f=100 phase=3.141592653589793\nV1 1 0 dc=1\nS1 1 0 ctrl=g\nR1 1 0 1k\n.tran 1u 1m\n")
        .unwrap();
    let text = print(&s);
    let line = text.lines().find(|l| l.starts_with(".ctrl")).unwrap();
    let phase = line.split_whitespace().find_map(|w| w.strip_prefix("phase=")).unwrap();
    let digits = phase.chars().filter(|c| c.is_ascii_digit()).count();
    assert!(digits >= 12, "{line}");
    assert_eq!(parse_value(phase).unwrap(), std::f64::consts::PI);
}

#[test]
fn generated_netlists_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_1000);
    for k in 0..1000 {
        let text = random_netlist(&mut rng);
        assert_round_trip(&format!("generated {k}"), &text);
    }
}

proptest! {
    #[test]
    fn suffix_law(mantissa in 1u64..999_999_999_999_999, exp in -15i32..12) {
        let v: f64 = format!("{mantissa}e{exp}").parse().unwrap();
        let text = format_value(v);
        prop_assert_eq!(parse_value(&text).unwrap(), v, "{}", text);
        prop_assert_eq!(parse_value(&format_value(-v)).unwrap(), -v);
    }

    #[test]
    fn printed_netlists_reparse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_netlist(&mut rng);
        let first = parse_text(&text).unwrap();
        let second = parse_text(&print(&first)).unwrap();
        prop_assert_eq!(first, second);
    }
}
