//! Measurements on simulated waveforms and the sweep drivers built on them.

mod metrics;
mod montecarlo;
mod phase;
mod sweep;

pub use metrics::{
    final_period, measure_amplitude, measure_slew, measure_slew_between, rising_edge_times, voltage_shares,
    AmplitudeMode, ShareReport, Side, SHARE_FLOOR,
};
pub use montecarlo::{
    monte_carlo, monte_carlo_netlist, perturbed_netlist, perturbed_recipe, splitmix64, trial_seed, DropSummary, MismatchModel, MonteCarloReport, TrialRecord,
};
pub use phase::{phase_sweep, write_phase_csv, PhaseMetrics};
pub use sweep::{bridge_cell, final_period_rise_time, frequency_sweep, sweep_periods, SweepBase, SweepRow, SweepTable};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Per-run quantities. Values that could not be measured are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Unipolar maximum of the output over the final period.
    pub amplitude: f64,
    /// 10–90 % slew rate of the output's rising edge in the final period.
    pub slew_rate: f64,
    /// Device drops over the end-to-end stack voltage at the last sample.
    pub shares: Option<Vec<f64>>,
    /// Largest device drop over the whole run.
    pub max_drop: f64,
    /// Peak supply current over the final period.
    pub peak_current: f64,
    /// Peak supply power over the final period.
    pub peak_power: f64,
}

impl Metrics {
    pub(crate) fn failed() -> Self {
        Metrics {
            amplitude: f64::NAN,
            slew_rate: f64::NAN,
            shares: None,
            max_drop: f64::NAN,
            peak_current: f64::NAN,
            peak_power: f64::NAN,
        }
    }
}

/// Evaluate `f(0..n)` on a pool of `workers` threads (0 = default), keeping
/// results in index order.
pub(crate) fn run_parallel<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Analysis(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}
