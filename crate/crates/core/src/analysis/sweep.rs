use std::io::Write;

use crate::error::{Error, Result};
use crate::mna::{derive_timelines, run_transient_observed, InitialState, ProbeSpec};
use crate::scenario::{BridgeRecipe, LoadSpec, Scenario};
use crate::waveform::Waveform;

use super::metrics::{measure_slew, rising_edge_times};
use super::{run_parallel, Metrics};

/// Whole periods simulated per sweep cell: ten, or enough to cover 0.5 s
/// when that is more.
pub fn sweep_periods(frequency: f64) -> usize {
    ((0.5 * frequency - 1e-9).ceil() as usize).max(10)
}

/// What a frequency sweep rebuilds for every cell.
#[derive(Debug, Clone)]
pub enum SweepBase {
    /// A parameterized half-bridge; loads may vary per cell.
    Bridge(BridgeRecipe),
    /// A fixed netlist; every control follows the cell frequency and the
    /// first probe is the measured output.
    Netlist(Scenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub frequency: f64,
    pub load: String,
    pub outcome: std::result::Result<Metrics, String>,
}

/// Results over a frequency × load grid, ordered load-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub frequencies: Vec<f64>,
    pub loads: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, frequency: f64, load: &str) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.frequency == frequency && r.load == load)
            .and_then(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    /// Columns `freq_hz,load,amplitude_v,slew_v_per_s,max_drop_v,peak_i_a,peak_p_w`;
    /// failed cells are written as NaN.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "freq_hz,load,amplitude_v,slew_v_per_s,max_drop_v,peak_i_a,peak_p_w")?;
        for r in &self.rows {
            let m = r.outcome.clone().unwrap_or_else(|_| Metrics::failed());
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.frequency, r.load, m.amplitude, m.slew_rate, m.max_drop, m.peak_current, m.peak_power
            )?;
        }
        Ok(())
    }
}

/// Run one cell of a bridge sweep: the recipe at frequency `f` with `load`,
/// long enough to reach periodic steady state, measured over the final
/// period.
pub fn bridge_cell(recipe: &BridgeRecipe, frequency: f64, load: &LoadSpec) -> Result<Metrics> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::InvalidParameter(format!("sweep frequency must be positive, got {frequency}")));
    }
    let mut r = recipe.clone();
    r.control.frequency = frequency;
    r.load = *load;
    let period = 1.0 / frequency;
    r.settings.stop = sweep_periods(frequency) as f64 * period;
    let s = r.scenario()?;
    measure_bridge(&s, &r, period)
}

/// Metrics of a built half-bridge scenario over its last `period`.
pub(crate) fn measure_bridge(s: &Scenario, recipe: &BridgeRecipe, period: f64) -> Result<Metrics> {
    let c = &s.circuit;
    let node = |l: &str| c.find_node(l).ok_or_else(|| Error::Analysis(format!("no node '{l}'")));
    let rail = recipe
        .stack
        .rail_labels()
        .iter()
        .map(|l| node(l))
        .collect::<Result<Vec<_>>>()?;
    let out = node("O")?;
    let a = node("A")?;
    let (probe, sign) = recipe.supply.current_probe();
    let ProbeSpec::Current(src) = probe else { unreachable!("supply probes are currents") };
    let src = c
        .component_index(&src)
        .ok_or_else(|| Error::Analysis(format!("no supply component '{src}'")))?;

    let h = s.settings.step;
    let steps = s.settings.steps();
    let keep_from = steps.saturating_sub((period / h).round() as usize);
    let timelines = derive_timelines(c, s.settings.stop)?;
    let mut max_drop = 0.0f64;
    let mut v_out = Vec::new();
    let mut power = Vec::new();
    let mut current = Vec::new();
    let mut last_rail = Vec::new();
    run_transient_observed(c, &s.settings, &timelines, &InitialState::OperatingPoint, |v| {
        for w in rail.windows(2) {
            max_drop = max_drop.max((v.node_voltage(w[0]) - v.node_voltage(w[1])).abs());
        }
        if v.index >= keep_from {
            let i = sign * v.component_current(src);
            v_out.push(v.node_voltage(out));
            current.push(i);
            power.push(i * v.node_voltage(a));
        }
        if v.index == steps {
            last_rail = rail.iter().map(|&n| v.node_voltage(n)).collect();
        }
    })?;
    let start = keep_from as f64 * h;
    let w_out = Waveform {
        start,
        step: h,
        samples: v_out,
    };
    let total = last_rail[0] - last_rail[last_rail.len() - 1];
    let shares = (total.abs() > super::metrics::SHARE_FLOOR)
        .then(|| last_rail.windows(2).map(|p| (p[0] - p[1]) / total).collect());
    Ok(Metrics {
        amplitude: w_out.max().max(0.0),
        slew_rate: measure_slew(&w_out, 0.1, 0.9).unwrap_or(f64::NAN),
        shares,
        max_drop,
        peak_current: current.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        peak_power: power.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn netlist_cell(base: &Scenario, frequency: f64) -> Result<Metrics> {
    let mut s = base.clone();
    for (_, c) in s.circuit.controls_mut() {
        c.frequency = frequency;
    }
    let period = 1.0 / frequency;
    s.settings.stop = sweep_periods(frequency) as f64 * period;
    let probe = s
        .probes
        .first()
        .ok_or_else(|| Error::Analysis("netlist sweep needs at least one .probe".into()))?
        .clone();
    let w = crate::mna::run_transient(&s.circuit, &s.settings, &derive_timelines(&s.circuit, s.settings.stop)?, &[probe])?
        .pop()
        .expect("one probe");
    let last = w.window(w.end_time() - period, w.end_time());
    Ok(Metrics {
        amplitude: last.max().max(0.0),
        slew_rate: measure_slew(&last, 0.1, 0.9).unwrap_or(f64::NAN),
        shares: None,
        max_drop: f64::NAN,
        peak_current: f64::NAN,
        peak_power: f64::NAN,
    })
}

/// Amplitude (and companion metrics) over a frequency × load grid. Cells run
/// on up to `workers` threads (0 picks the default); each owns its circuit,
/// and results are placed by grid position, so the table does not depend on
/// scheduling. A failed cell is recorded and the sweep continues.
pub fn frequency_sweep(base: &SweepBase, frequencies: &[f64], loads: &[LoadSpec], workers: usize) -> Result<SweepTable> {
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter("frequency list is empty".into()));
    }
    if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidParameter(format!("sweep frequency must be positive, got {f}")));
    }
    let load_names: Vec<String> = match base {
        SweepBase::Bridge(_) if loads.is_empty() => {
            return Err(Error::InvalidParameter("load list is empty".into()))
        }
        SweepBase::Bridge(_) => loads.iter().map(|l| l.to_string()).collect(),
        SweepBase::Netlist(_) if !loads.is_empty() => {
            return Err(Error::InvalidParameter("a netlist sweep cannot substitute loads".into()))
        }
        SweepBase::Netlist(_) => vec!["netlist".to_string()],
    };
    let nf = frequencies.len();
    let cells = run_parallel(nf * load_names.len(), workers, |k| {
        let (li, fi) = (k / nf, k % nf);
        let f = frequencies[fi];
        let outcome = match base {
            SweepBase::Bridge(r) => bridge_cell(r, f, &loads[li]),
            SweepBase::Netlist(s) => netlist_cell(s, f),
        };
        SweepRow {
            frequency: f,
            load: load_names[li].clone(),
            outcome: outcome.map_err(|e| e.to_string()),
        }
    })?;
    Ok(SweepTable {
        frequencies: frequencies.to_vec(),
        loads: load_names,
        rows: cells,
    })
}

/// 10–90 % rise time of the first rising edge in the final period.
pub fn final_period_rise_time(w: &Waveform, period: f64) -> Result<f64> {
    let last = w.window(w.end_time() - period, w.end_time());
    let (a, b) = rising_edge_times(&last, 0.1, 0.9, None)?;
    Ok(b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_length() {
        assert_eq!(sweep_periods(2.0), 10);
        assert_eq!(sweep_periods(20.0), 10);
        assert_eq!(sweep_periods(100.0), 50);
        assert_eq!(sweep_periods(1000.0), 500);
    }
}
