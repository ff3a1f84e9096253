//! Device-mismatch Monte Carlo.
//!
//! Trial `k` draws from its own ChaCha8 stream seeded with
//! `splitmix64(seed + k * 0x9E3779B97F4A7C15)`, so every trial is
//! reproducible on its own and results do not depend on how trials are
//! spread over threads. Per device, in stack order, the stream yields one
//! standard normal (off-resistance) and then one uniform (driver offset).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mna::{derive_timelines, run_transient_observed, InitialState};
use crate::circuit::ComponentKind;
use crate::scenario::{BridgeRecipe, Scenario};

use super::run_parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchModel {
    /// Median off-resistance; `None` keeps each device's template value.
    pub off_resistance_median: Option<f64>,
    /// Log-normal sigma of the off-resistance.
    pub sigma: f64,
    /// Driver offsets are uniform in `[-spread, spread]` seconds.
    pub offset_spread: f64,
    pub trials: usize,
    pub seed: u64,
}

impl MismatchModel {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.offset_spread >= 0.0 && self.offset_spread.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "offset spread must be >= 0, got {}",
                self.offset_spread
            )));
        }
        if let Some(m) = self.off_resistance_median {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter(format!("median off-resistance must be positive, got {m}")));
            }
        }
        Ok(())
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropSummary {
    pub min: f64,
    pub median: f64,
    /// Nearest-rank 99th percentile.
    pub p99: f64,
    pub max: f64,
}

impl DropSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
        Some(DropSummary {
            min: v[0],
            median,
            p99: v[rank - 1],
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: Vec<TrialRecord>,
    /// Over successful trials; `None` when every trial failed.
    pub summary: Option<DropSummary>,
}

impl MonteCarloReport {
    /// Columns `trial,seed,max_drop_v,status`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "trial,seed,max_drop_v,status")?;
        for t in &self.trials {
            match &t.outcome {
                Ok(d) => writeln!(out, "{},{},{},ok", t.trial, t.seed, d)?,
                Err(e) => writeln!(out, "{},{},NaN,failed: {}", t.trial, t.seed, e.replace([',', '\n'], ";"))?,
            }
        }
        Ok(())
    }
}

/// Draw one trial's stack from the template.
pub fn perturbed_recipe(template: &BridgeRecipe, model: &MismatchModel, seed: u64) -> BridgeRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = template.clone();
    let n = r.stack.device_count();
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random::<f64>();
        let median = model.off_resistance_median.unwrap_or(template.stack.off_resistance[i]);
        r.stack.off_resistance[i] = median * (model.sigma * z).exp();
        r.stack.driver_offsets[i] = template.stack.driver_offsets[i] + model.offset_spread * (2.0 * u - 1.0);
    }
    r
}

fn max_device_drop(recipe: &BridgeRecipe) -> Result<f64> {
    let s = recipe.scenario()?;
    let rail = recipe
        .stack
        .rail_labels()
        .iter()
        .map(|l| s.circuit.find_node(l).ok_or_else(|| Error::Analysis(format!("no node '{l}'"))))
        .collect::<Result<Vec<_>>>()?;
    let timelines = derive_timelines(&s.circuit, s.settings.stop)?;
    let mut max_drop = 0.0f64;
    run_transient_observed(&s.circuit, &s.settings, &timelines, &InitialState::OperatingPoint, |v| {
        for w in rail.windows(2) {
            max_drop = max_drop.max((v.node_voltage(w[0]) - v.node_voltage(w[1])).abs());
        }
    })?;
    Ok(max_drop)
}

/// Largest device drop over the full run, for each of `model.trials`
/// perturbed copies of the template.
pub fn monte_carlo(template: &BridgeRecipe, model: &MismatchModel, workers: usize) -> Result<MonteCarloReport> {
    model.validate()?;
    let trials = run_parallel(model.trials, workers, |k| {
        let seed = trial_seed(model.seed, k);
        let outcome = max_device_drop(&perturbed_recipe(template, model, seed)).map_err(|e| e.to_string());
        TrialRecord {
            trial: k,
            seed,
            outcome,
        }
    })?;
    let ok: Vec<f64> = trials.iter().filter_map(|t| t.outcome.as_ref().ok().copied()).collect();
    Ok(MonteCarloReport {
        summary: DropSummary::from_values(&ok),
        trials,
    })
}

/// Draw one trial of a parsed netlist: every switch, in netlist order, is
/// perturbed like a stack device.
pub fn perturbed_netlist(template: &Scenario, model: &MismatchModel, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = template.clone();
    for comp in s.circuit.components_mut() {
        if let ComponentKind::Switch {
            off_resistance, drive, ..
        } = &mut comp.kind
        {
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random::<f64>();
            let median = model.off_resistance_median.unwrap_or(*off_resistance);
            *off_resistance = median * (model.sigma * z).exp();
            drive.driver.offset += model.offset_spread * (2.0 * u - 1.0);
        }
    }
    s
}

fn max_switch_drop(s: &Scenario) -> Result<f64> {
    let switches: Vec<usize> = s
        .circuit
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, ComponentKind::Switch { .. }))
        .map(|(i, _)| i)
        .collect();
    if switches.is_empty() {
        return Err(Error::Analysis("Monte Carlo needs at least one switch".into()));
    }
    let timelines = derive_timelines(&s.circuit, s.settings.stop)?;
    let mut max_drop = 0.0f64;
    run_transient_observed(&s.circuit, &s.settings, &timelines, &InitialState::OperatingPoint, |v| {
        for &i in &switches {
            max_drop = max_drop.max(v.branch_voltage(i).abs());
        }
    })?;
    Ok(max_drop)
}

/// Monte Carlo over a parsed netlist: the recorded value is the largest
/// voltage across any switch over the full run.
pub fn monte_carlo_netlist(template: &Scenario, model: &MismatchModel, workers: usize) -> Result<MonteCarloReport> {
    model.validate()?;
    let trials = run_parallel(model.trials, workers, |k| {
        let seed = trial_seed(model.seed, k);
        let outcome = max_switch_drop(&perturbed_netlist(template, model, seed)).map_err(|e| e.to_string());
        TrialRecord {
            trial: k,
            seed,
            outcome,
        }
    })?;
    let ok: Vec<f64> = trials.iter().filter_map(|t| t.outcome.as_ref().ok().copied()).collect();
    Ok(MonteCarloReport {
        summary: DropSummary::from_values(&ok),
        trials,
    })
}
