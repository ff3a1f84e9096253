//! Normalized actuator displacement from the drive voltage.
//!
//! The static law is quadratic in voltage, `u = gain * (v / v_ref)^2`, and
//! the mechanics are a second-order low-pass. The filter is discretized
//! exactly for a zero-order-hold input on the waveform grid, so its step
//! response matches the continuous one at every sample.

use crate::analysis::{sweep_periods, AmplitudeMode};
use crate::error::{Error, Result};
use crate::mna::{derive_timelines, run_transient, ProbeSpec};
use crate::scenario::{preset_recipe, BridgeRecipe, Recipe};
use crate::devices::{BenchSupplyParams, ConverterParams};
use crate::topology::SupplySpec;
use crate::waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectromechParams {
    pub reference_voltage: f64,
    pub gain: f64,
    pub natural_frequency: f64,
    pub damping_ratio: f64,
}

impl Default for ElectromechParams {
    fn default() -> Self {
        ElectromechParams {
            reference_voltage: 1800.0,
            gain: 1.0,
            natural_frequency: 80.0,
            damping_ratio: 0.7,
        }
    }
}

impl ElectromechParams {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("reference voltage", self.reference_voltage),
            ("gain", self.gain),
            ("natural frequency", self.natural_frequency),
            ("damping ratio", self.damping_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

type M3 = [[f64; 3]; 3];

fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Matrix exponential by scaling and squaring with a Taylor core.
fn expm(a: &M3) -> M3 {
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * 3.0;
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let s: M3 = a.map(|row| row.map(|v| v * scale));
    let mut result = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut term = result;
    for k in 1..=18 {
        term = mat_mul(&term, &s).map(|row| row.map(|v| v / k as f64));
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// Displacement waveform for drive voltage `v`, starting at rest.
pub fn displacement_response(v: &Waveform, params: &ElectromechParams) -> Result<Waveform> {
    v.validate()?;
    params.validate()?;
    let h = v.step;
    let limit = 1.0 / (20.0 * params.natural_frequency);
    if h > limit {
        return Err(Error::InvalidParameter(format!(
            "waveform step {h:e} s is too coarse for a {} Hz mechanical filter (limit {limit:e} s)",
            params.natural_frequency
        )));
    }
    let wn = std::f64::consts::TAU * params.natural_frequency;
    let z = params.damping_ratio;
    // Augmented system [x, x', u] with u held constant over a step.
    let a: M3 = [
        [0.0, h, 0.0],
        [-wn * wn * h, -2.0 * z * wn * h, wn * wn * h],
        [0.0, 0.0, 0.0],
    ];
    let e = expm(&a);
    let (mut x, mut dx) = (0.0, 0.0);
    let mut out = Vec::with_capacity(v.len());
    for &volts in &v.samples {
        out.push(x);
        let r = volts / params.reference_voltage;
        let u = params.gain * r * r;
        let nx = e[0][0] * x + e[0][1] * dx + e[0][2] * u;
        let ndx = e[1][0] * x + e[1][1] * dx + e[1][2] * u;
        x = nx;
        dx = ndx;
    }
    Ok(Waveform {
        start: v.start,
        step: h,
        samples: out,
    })
}

/// Peak-to-peak displacement over the final period.
pub fn displacement_amplitude(x: &Waveform, period: f64) -> Result<f64> {
    crate::analysis::measure_amplitude(x, 0, period, AmplitudeMode::Bipolar).map(|a| 2.0 * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupplyKind {
    Bench,
    Converter,
}

impl SupplyKind {
    pub fn name(self) -> &'static str {
        match self {
            SupplyKind::Bench => "bench",
            SupplyKind::Converter => "converter",
        }
    }

    pub fn spec(self) -> SupplySpec {
        match self {
            SupplyKind::Bench => SupplySpec::Bench(BenchSupplyParams::new(1800.0)),
            SupplyKind::Converter => SupplySpec::Converter(ConverterParams::default()),
        }
    }
}

/// Actuator drive run for one supply and frequency: the load-capacitance
/// voltage and the displacement it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementRun {
    pub frequency: f64,
    pub v_load: Waveform,
    pub x_norm: Waveform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementPoint {
    pub frequency: f64,
    /// Largest load-capacitance voltage in the final period.
    pub voltage_amplitude: f64,
    /// Peak-to-peak normalized displacement in the final period.
    pub displacement_amplitude: f64,
}

fn fig8_recipe(supply: SupplyKind) -> Result<BridgeRecipe> {
    match preset_recipe("fig8")? {
        Recipe::Bridge(mut r) => {
            r.supply = supply.spec();
            Ok(r)
        }
        Recipe::Dual(_) => unreachable!("fig8 is a single bridge"),
    }
}

/// Simulate the recipe at `frequency` until periodic steady state and derive
/// the displacement. `stop` overrides the run length when given.
pub fn displacement_run(
    recipe: &BridgeRecipe,
    frequency: f64,
    stop: Option<f64>,
    params: &ElectromechParams,
) -> Result<DisplacementRun> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::InvalidParameter(format!("frequency must be positive, got {frequency}")));
    }
    let mut r = recipe.clone();
    r.control.frequency = frequency;
    r.settings.stop = stop.unwrap_or(sweep_periods(frequency) as f64 / frequency);
    let node = r
        .load_capacitor_node()
        .ok_or_else(|| Error::InvalidParameter("displacement needs a capacitive load".into()))?;
    let s = r.scenario()?;
    let timelines = derive_timelines(&s.circuit, s.settings.stop)?;
    let v_load = run_transient(&s.circuit, &s.settings, &timelines, &[ProbeSpec::Node(node)])?
        .pop()
        .expect("one probe");
    let x_norm = displacement_response(&v_load, params)?;
    Ok(DisplacementRun {
        frequency,
        v_load,
        x_norm,
    })
}

/// Displacement amplitude against frequency for the actuator preset driven
/// by the chosen supply.
pub fn displacement_sweep(
    supply: SupplyKind,
    frequencies: &[f64],
    params: &ElectromechParams,
    workers: usize,
) -> Result<Vec<DisplacementPoint>> {
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter("frequency list is empty".into()));
    }
    let recipe = fig8_recipe(supply)?;
    displacement_sweep_with(&recipe, frequencies, params, workers)
}

pub fn displacement_sweep_with(
    recipe: &BridgeRecipe,
    frequencies: &[f64],
    params: &ElectromechParams,
    workers: usize,
) -> Result<Vec<DisplacementPoint>> {
    crate::analysis::run_parallel(frequencies.len(), workers, |k| {
        let f = frequencies[k];
        let run = displacement_run(recipe, f, None, params)?;
        let period = 1.0 / f;
        let last = run.v_load.window(run.v_load.end_time() - period, run.v_load.end_time());
        Ok(DisplacementPoint {
            frequency: f,
            voltage_amplitude: last.max().max(0.0),
            displacement_amplitude: displacement_amplitude(&run.x_norm, period)?,
        })
    })?
    .into_iter()
    .collect()
}

/// Time traces as `t,v_load,x_norm`.
pub fn write_displacement_csv<W: std::io::Write>(out: &mut W, run: &DisplacementRun) -> Result<()> {
    crate::waveform::write_csv(out, &[("v_load", &run.v_load), ("x_norm", &run.x_norm)])
}

/// Per-supply amplitude table as `freq_hz,supply,amplitude_v,x_amplitude`.
pub fn write_displacement_table<W: std::io::Write>(
    out: &mut W,
    rows: &[(SupplyKind, Vec<DisplacementPoint>)],
) -> Result<()> {
    writeln!(out, "freq_hz,supply,amplitude_v,x_amplitude")?;
    for (supply, points) in rows {
        for p in points {
            writeln!(
                out,
                "{},{},{},{}",
                p.frequency,
                supply.name(),
                p.voltage_amplitude,
                p.displacement_amplitude
            )?;
        }
    }
    Ok(())
}

pub fn fig8_supply_recipe(supply: SupplyKind) -> Result<BridgeRecipe> {
    fig8_recipe(supply)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, h: f64, n: usize) -> Waveform {
        Waveform::from_fn(0.0, h, n, |_| v)
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let x = displacement_response(&constant(0.0, 1e-4, 1000), &ElectromechParams::default()).unwrap();
        assert!(x.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_voltage_settles_to_gain() {
        let x = displacement_response(&constant(1800.0, 1e-4, 5000), &ElectromechParams::default()).unwrap();
        assert!((x.samples.last().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sign_invariance() {
        let p = ElectromechParams::default();
        let v = Waveform::from_fn(0.0, 1e-4, 2000, |t| 1500.0 * (40.0 * t).sin());
        let a = displacement_response(&v, &p).unwrap();
        let b = displacement_response(&v.map(|x| -x), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = ElectromechParams::default();
        assert!(displacement_response(&constant(1.0, 1.0 / 1500.0, 10), &p).is_err());
        assert!(displacement_response(&constant(1.0, 1.0 / 1700.0, 10), &p).is_ok());
    }
}
