use crate::error::{Error, Result};
use crate::mna::{derive_timelines, run_transient_observed, InitialState};
use crate::scenario::DualRecipe;
use crate::topology::{channel_tag, CONVERTER_NAME};

use super::run_parallel;

/// Supply-side peaks for one phase difference, over the final control
/// period of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMetrics {
    pub phase: f64,
    /// Peak current leaving the converter terminals.
    pub peak_current: f64,
    /// Peak power delivered at the converter terminals.
    pub peak_power: f64,
    /// Peak current drawn from the supply node by each channel.
    pub channel_peaks: [f64; 2],
}

fn phase_cell(recipe: &DualRecipe, phase: f64) -> Result<PhaseMetrics> {
    let mut r = recipe.clone();
    r.phase_difference = phase;
    let s = r.scenario()?;
    let c = &s.circuit;
    let a = c.find_node("A").ok_or_else(|| Error::Analysis("no supply node 'A'".into()))?;
    let conv = c
        .component_index(CONVERTER_NAME)
        .ok_or_else(|| Error::Analysis("no converter in the circuit".into()))?;
    // Components hanging off the supply node, with the sign that turns
    // their branch current into current leaving A.
    let mut taps: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
    for (i, comp) in c.components().iter().enumerate() {
        for (k, tap) in taps.iter_mut().enumerate() {
            if comp.name.ends_with(&format!("_{}", channel_tag(k + 1))) {
                if comp.pos == a {
                    tap.push((i, 1.0));
                } else if comp.neg == a {
                    tap.push((i, -1.0));
                }
            }
        }
    }
    let period = r
        .control
        .period()
        .ok_or_else(|| Error::Analysis("phase study needs a switching control".into()))?;
    let steps = s.settings.steps();
    let keep_from = steps.saturating_sub((period / s.settings.step).round() as usize);
    let mut m = PhaseMetrics {
        phase,
        peak_current: f64::NEG_INFINITY,
        peak_power: f64::NEG_INFINITY,
        channel_peaks: [f64::NEG_INFINITY; 2],
    };
    let timelines = derive_timelines(c, s.settings.stop)?;
    run_transient_observed(c, &s.settings, &timelines, &InitialState::OperatingPoint, |v| {
        if v.index < keep_from {
            return;
        }
        let i = -v.component_current(conv);
        m.peak_current = m.peak_current.max(i);
        m.peak_power = m.peak_power.max(i * v.node_voltage(a));
        for (k, tap) in taps.iter().enumerate() {
            let ik: f64 = tap.iter().map(|(idx, sign)| sign * v.component_current(*idx)).sum();
            m.channel_peaks[k] = m.channel_peaks[k].max(ik);
        }
    })?;
    Ok(m)
}

/// Peak converter current and power of a dual-channel circuit for each
/// phase difference between the channels.
pub fn phase_sweep(recipe: &DualRecipe, phases: &[f64], workers: usize) -> Result<Vec<PhaseMetrics>> {
    if phases.is_empty() {
        return Err(Error::InvalidParameter("phase list is empty".into()));
    }
    run_parallel(phases.len(), workers, |k| phase_cell(recipe, phases[k]))?
        .into_iter()
        .collect()
}

pub fn write_phase_csv<W: std::io::Write>(out: &mut W, rows: &[PhaseMetrics]) -> Result<()> {
    writeln!(out, "phase_rad,peak_i_a,peak_p_w,peak_i_ch1_a,peak_i_ch2_a")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.phase, r.peak_current, r.peak_power, r.channel_peaks[0], r.channel_peaks[1]
        )?;
    }
    Ok(())
}
