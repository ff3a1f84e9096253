//! Generator of random but valid netlists for parser properties.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn value_text(rng: &mut ChaCha8Rng, lo_exp: i32, hi_exp: i32) -> String {
    let e = rng.random_range(lo_exp..=hi_exp);
    let (suffix, shift) = match e.div_euclid(3) * 3 {
        -12 => ("p", -12),
        -9 => ("n", -9),
        -6 => ("u", -6),
        -3 => ("m", -3),
        3 => ("k", 3),
        6 => ("M", 6),
        9 => ("G", 9),
        _ => ("", 0),
    };
    let digits = rng.random_range(1..1000u32);
    let mant = digits as f64 * 10f64.powi(e - shift) / 100.0;
    let mant = format!("{}", (mant * 1e6).round() / 1e6);
    if mant == "0" {
        return format!("1{suffix}");
    }
    format!("{mant}{suffix}")
}

/// A random but valid netlist exercising every statement kind.
pub fn random_netlist(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let n = rng.random_range(1..=6);
    let node = |k: usize| if k == 0 { "0".to_string() } else { format!("N_{k}") };
    let controls = rng.random_range(1..=2);
    for c in 0..controls {
        out += &format!(
            ".ctrl g{c} square f={} duty={} phase={}\n",
            value_text(rng, 0, 2),
            rng.random_range(1..10) as f64 / 10.0,
            rng.random_range(-3.0..3.0)
        );
    }
    for k in 1..=n {
        let to = rng.random_range(0..k);
        out += &format!("R{k} {} {} {}\n", node(k), node(to), value_text(rng, 0, 9));
    }
    let pick = |rng: &mut ChaCha8Rng| {
        let a = rng.random_range(0..=n);
        let b = (a + rng.random_range(1..=n)) % (n + 1);
        (node(a), node(b))
    };
    for k in 0..rng.random_range(0..4) {
        let (a, b) = pick(rng);
        let derate = if rng.random_bool(0.3) { " derate=200u vrated=2k" } else { "" };
        out += &format!("C{k} {a} {b} {}{derate}\n", value_text(rng, -12, -6));
    }
    for k in 0..rng.random_range(0..3) {
        let (a, b) = pick(rng);
        let inv = if rng.random_bool(0.5) { "!" } else { "" };
        out += &format!("S{k} {a} {b} ctrl={inv}g{}", rng.random_range(0..controls));
        if rng.random_bool(0.5) {
            out += &format!(" ron={} roff={}", value_text(rng, 0, 2), value_text(rng, 6, 9));
        }
        if rng.random_bool(0.5) {
            out += &format!(" ton={} toff={}", value_text(rng, -6, -3), value_text(rng, -6, -3));
        }
        out += "\n";
    }
    let src = node(rng.random_range(1..=n));
    match rng.random_range(0..4) {
        0 => out += &format!("Vin {src} 0 dc={}\n", value_text(rng, 0, 3)),
        1 => out += &format!("Vin {src} 0 step={} at={}\n", value_text(rng, 0, 3), value_text(rng, -6, -3)),
        2 => out += &format!("Vin {src} 0 ramp={} slew={}\n", value_text(rng, 0, 3), value_text(rng, 6, 8)),
        _ => out += &format!("Xsup {src} 0 converter voc={} rint=3M\n", value_text(rng, 2, 3)),
    }
    if rng.random_bool(0.4) {
        out += &format!("Xp {} 0 probe\n", node(rng.random_range(1..=n)));
    }
    out += &format!(".tran {} {} damp={}\n", value_text(rng, -8, -6), value_text(rng, -3, -1), rng.random_range(0..4));
    out += &format!(".probe {}\n", node(rng.random_range(1..=n)));
    if n >= 2 {
        out += ".probe N_1 N_2\n";
    }
    out += ".probe I(R1)\n";
    if rng.random_bool(0.5) {
        out += &format!(".sweep f={},{}\n", value_text(rng, 0, 1), value_text(rng, 2, 3));
    }
    if rng.random_bool(0.5) {
        out += &format!(".mc trials={} seed={} sigma=0.5\n", rng.random_range(1..50), rng.random::<u32>());
    }
    out += ".end\n";
    out
}
