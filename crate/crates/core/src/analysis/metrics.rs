use crate::error::{Error, Result};
use crate::waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMode {
    /// Largest value in the final period (never below 0).
    Unipolar,
    /// Half the peak-to-peak excursion in the final period.
    Bipolar,
}

/// The final full period of `w`, after checking it spans `settle + 1`
/// periods.
pub fn final_period(w: &Waveform, settle_periods: usize, period: f64) -> Result<Waveform> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::Analysis(format!("period must be positive, got {period}")));
    }
    let span = w.end_time() - w.start;
    let needed = (settle_periods + 1) as f64 * period;
    if span + 0.5 * w.step < needed {
        return Err(Error::Analysis(format!(
            "waveform spans {span:e} s but {} periods need {needed:e} s",
            settle_periods + 1
        )));
    }
    Ok(w.window(w.end_time() - period, w.end_time()))
}

pub fn measure_amplitude(w: &Waveform, settle_periods: usize, period: f64, mode: AmplitudeMode) -> Result<f64> {
    let last = final_period(w, settle_periods, period)?;
    Ok(match mode {
        AmplitudeMode::Unipolar => last.max().max(0.0),
        AmplitudeMode::Bipolar => 0.5 * (last.max() - last.min()),
    })
}

/// Times at which the first rising edge crosses the low and high
/// thresholds. Thresholds sit at the given fractions of the swing between
/// `levels` (defaulting to the waveform's own minimum and maximum), and
/// crossing times are interpolated linearly between samples. An edge that
/// falls back below the low threshold before reaching the high one is
/// discarded.
pub fn rising_edge_times(w: &Waveform, low: f64, high: f64, levels: Option<(f64, f64)>) -> Result<(f64, f64)> {
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(Error::Analysis(format!("invalid threshold fractions {low}, {high}")));
    }
    let (v0, v1) = levels.unwrap_or((w.min(), w.max()));
    let swing = v1 - v0;
    if !(swing > 0.0) {
        return Err(Error::Analysis("no rising edge: waveform has no swing".into()));
    }
    let lo = v0 + low * swing;
    let hi = v0 + high * swing;
    let cross = |i: usize, level: f64| {
        let (a, b) = (w.samples[i - 1], w.samples[i]);
        w.time(i - 1) + w.step * (level - a) / (b - a)
    };
    let mut t_low = None;
    for i in 1..w.len() {
        let (a, b) = (w.samples[i - 1], w.samples[i]);
        if b < lo {
            t_low = None;
            continue;
        }
        if t_low.is_none() && a < lo {
            t_low = Some(cross(i, lo));
        }
        if let Some(tl) = t_low {
            if a < hi && b >= hi {
                return Ok((tl, cross(i, hi)));
            }
        }
    }
    Err(Error::Analysis("no rising edge crosses both thresholds".into()))
}

/// Slew rate of the first qualifying rising edge, `(high - low) * swing /
/// (t_high - t_low)`, in volts per second.
pub fn measure_slew(w: &Waveform, low: f64, high: f64) -> Result<f64> {
    measure_slew_between(w, low, high, None)
}

pub fn measure_slew_between(w: &Waveform, low: f64, high: f64, levels: Option<(f64, f64)>) -> Result<f64> {
    let (v0, v1) = levels.unwrap_or((w.min(), w.max()));
    let (tl, th) = rising_edge_times(w, low, high, Some((v0, v1)))?;
    Ok((high - low) * (v1 - v0) / (th - tl))
}

/// Which half of the stack is blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareReport {
    /// Device drops top to bottom (`V_AB, V_BO, V_OC, V_CD` for two per side).
    pub drops: Vec<Waveform>,
    /// Final-sample drops over the end-to-end stack voltage; `None` below 1 V.
    pub stack_shares: Option<Vec<f64>>,
    pub blocking_side: Side,
    /// Final-sample drops of the blocking side over that side's voltage.
    pub side_shares: Option<Vec<f64>>,
    /// Largest device drop magnitude anywhere in the run.
    pub max_drop: f64,
}

/// Minimum end-to-end voltage for shares to be meaningful.
pub const SHARE_FLOOR: f64 = 1.0;

/// Per-device drops from rail node traces listed top to bottom, supply node
/// first and ground (`V_D`) last. Shares are taken at the final sample, so
/// pass a waveform ending in the steady state of interest.
pub fn voltage_shares(nodes: &[&Waveform], devices_per_side: usize) -> Result<ShareReport> {
    let n = 2 * devices_per_side;
    if devices_per_side == 0 || nodes.len() != n + 1 {
        return Err(Error::Analysis(format!(
            "expected {} node traces for {devices_per_side} devices per side, got {}",
            n + 1,
            nodes.len()
        )));
    }
    let drops = nodes
        .windows(2)
        .map(|p| p[0].zip_with(p[1], |a, b| a - b))
        .collect::<Result<Vec<_>>>()?;
    let last = |w: &Waveform| *w.samples.last().expect("validated non-empty");
    let finals: Vec<f64> = drops.iter().map(last).collect();
    let total = last(nodes[0]) - last(nodes[n]);
    let stack_shares = (total.abs() > SHARE_FLOOR).then(|| finals.iter().map(|d| d / total).collect());
    let high: f64 = finals[..devices_per_side].iter().sum();
    let low: f64 = finals[devices_per_side..].iter().sum();
    let (blocking_side, side_v, range) = if high.abs() >= low.abs() {
        (Side::High, high, 0..devices_per_side)
    } else {
        (Side::Low, low, devices_per_side..n)
    };
    let side_shares = (side_v.abs() > SHARE_FLOOR).then(|| finals[range].iter().map(|d| d / side_v).collect());
    let max_drop = drops
        .iter()
        .flat_map(|d| d.samples.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ShareReport {
        drops,
        stack_shares,
        blocking_side,
        side_shares,
        max_drop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_of_square_wave() {
        let w = Waveform::from_fn(0.0, 1e-4, 3001, |t| if (t * 100.0).fract() < 0.5 { 1800.0 } else { 0.0 });
        assert_eq!(measure_amplitude(&w, 2, 0.01, AmplitudeMode::Unipolar).unwrap(), 1800.0);
        assert_eq!(measure_amplitude(&w, 2, 0.01, AmplitudeMode::Bipolar).unwrap(), 900.0);
        assert!(measure_amplitude(&w, 30, 0.01, AmplitudeMode::Unipolar).is_err());
        let z = Waveform::from_fn(0.0, 1e-4, 3001, |_| 0.0);
        assert_eq!(measure_amplitude(&z, 2, 0.01, AmplitudeMode::Unipolar).unwrap(), 0.0);
    }

    #[test]
    fn slew_of_ramp() {
        let w = Waveform::from_fn(0.0, 1e-6, 401, |t| (t / 200e-6).min(1.0) * 1800.0);
        let s = measure_slew(&w, 0.1, 0.9).unwrap();
        assert!((s - 9e6).abs() < 9e6 * 1e-9, "{s}");
    }

    #[test]
    fn slew_needs_an_edge() {
        let w = Waveform::from_fn(0.0, 1e-6, 100, |_| 5.0);
        assert!(measure_slew(&w, 0.1, 0.9).is_err());
        let falling = Waveform::from_fn(0.0, 1e-6, 100, |t| 1.0 - t * 1e4);
        assert!(measure_slew(&falling, 0.1, 0.9).is_err());
    }

    #[test]
    fn equal_drops_share_equally() {
        let ws: Vec<Waveform> = [4.0, 3.0, 2.0, 1.0, 0.0]
            .iter()
            .map(|&v| Waveform::from_fn(0.0, 1.0, 3, move |_| v * 100.0))
            .collect();
        let refs: Vec<&Waveform> = ws.iter().collect();
        let r = voltage_shares(&refs, 2).unwrap();
        assert_eq!(r.stack_shares.unwrap(), vec![0.25; 4]);
        assert_eq!(r.side_shares.unwrap(), vec![0.5; 2]);
        assert_eq!(r.max_drop, 100.0);
    }

    #[test]
    fn shares_undefined_near_zero() {
        let ws: Vec<Waveform> = (0..5).map(|_| Waveform::from_fn(0.0, 1.0, 3, |_| 0.0)).collect();
        let refs: Vec<&Waveform> = ws.iter().collect();
        let r = voltage_shares(&refs, 2).unwrap();
        assert!(r.stack_shares.is_none() && r.side_shares.is_none());
    }
}
