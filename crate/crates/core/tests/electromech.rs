use proptest::prelude::*;

use hvbridge::analysis::final_period_rise_time;
use hvbridge::electromech::{
    displacement_amplitude, displacement_response, displacement_run, fig8_supply_recipe, ElectromechParams, SupplyKind,
};
use hvbridge::Waveform;

fn params(fn_hz: f64, zeta: f64) -> ElectromechParams {
    ElectromechParams {
        natural_frequency: fn_hz,
        damping_ratio: zeta,
        ..ElectromechParams::default()
    }
}

#[test]
fn step_matches_underdamped_response() {
    let (f, zeta) = (50.0, 0.3);
    let p = params(f, zeta);
    let h = 1.0 / (100.0 * f);
    let v = Waveform::from_fn(0.0, h, 1000, |_| 1800.0);
    let x = displacement_response(&v, &p).unwrap();
    let wn = std::f64::consts::TAU * f;
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let phi = zeta.acos();
    for i in 0..x.len() {
        let t = x.time(i);
        let exact = 1.0 - (-zeta * wn * t).exp() * (wd * t + phi).sin() / (1.0 - zeta * zeta).sqrt();
        assert!((x.samples[i] - exact).abs() <= 0.01, "t={t} {} vs {exact}", x.samples[i]);
    }
}

#[test]
fn fast_ripple_is_attenuated() {
    let p = params(80.0, 0.7);
    let f = 800.0;
    let h = 1.0 / (200.0 * f);
    // Drive is the square root of 0.5 + 0.5 sin, so the static law sees a pure sinusoid.
    let v = Waveform::from_fn(0.0, h, (2.0 / h) as usize, |t| {
        1800.0 * (0.5 + 0.5 * (std::f64::consts::TAU * f * t).sin()).sqrt()
    });
    let x = displacement_response(&v, &p).unwrap();
    let ripple = displacement_amplitude(&x, 1.0 / f).unwrap();
    // Input peak-to-peak is 1; 40 dB down is 0.01.
    assert!(ripple <= 0.0101, "{ripple}");
}

#[test]
fn converter_rises_slower_than_bench() {
    let p = ElectromechParams::default();
    let f = 6.0;
    let rise = |kind| {
        let r = fig8_supply_recipe(kind).unwrap();
        let run = displacement_run(&r, f, None, &p).unwrap();
        final_period_rise_time(&run.v_load, 1.0 / f).unwrap()
    };
    let (bench, conv) = (rise(SupplyKind::Bench), rise(SupplyKind::Converter));
    assert!(conv > bench, "converter {conv:e} s, bench {bench:e} s");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn static_response_grows_with_voltage(a in 0.0f64..3000.0, b in 0.0f64..3000.0) {
        let p = ElectromechParams::default();
        let settle = |v: f64| {
            let w = Waveform::from_fn(0.0, 1e-4, 4000, |_| v);
            *displacement_response(&w, &p).unwrap().samples.last().unwrap()
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(settle(lo) <= settle(hi) + 1e-12);
        let r = hi / 1800.0;
        prop_assert!((settle(hi) - r * r).abs() <= 1e-6 * (1.0 + r * r));
    }

    #[test]
    fn polarity_does_not_matter(amp in 0.0f64..2000.0, f in 1.0f64..200.0, off in -500.0f64..500.0) {
        let p = ElectromechParams::default();
        let v = Waveform::from_fn(0.0, 1e-4, 2000, |t| off + amp * (std::f64::consts::TAU * f * t).sin());
        let a = displacement_response(&v, &p).unwrap();
        let b = displacement_response(&v.map(|x| -x), &p).unwrap();
        prop_assert_eq!(a, b);
    }
}
