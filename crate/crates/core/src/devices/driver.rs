//! Square-wave control commands and photovoltaic gate-driver latency.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Square-wave command. A positive phase delays the waveform: rising edges
/// fall at `(k + phase / 2π) / frequency`. Frequency 0 means "held high".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSignal {
    pub frequency: f64,
    pub duty: f64,
    pub phase: f64,
}

impl ControlSignal {
    pub fn square(frequency: f64) -> Self {
        ControlSignal {
            frequency,
            duty: 0.5,
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.frequency.is_finite() && self.frequency >= 0.0) {
            return Err(format!("frequency must be finite and >= 0, got {}", self.frequency));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(format!("duty must lie strictly between 0 and 1, got {}", self.duty));
        }
        if !self.phase.is_finite() {
            return Err("phase must be finite".into());
        }
        Ok(())
    }

    pub fn period(&self) -> Option<f64> {
        (self.frequency > 0.0).then(|| 1.0 / self.frequency)
    }

    /// Commanded level at time `t`.
    pub fn level(&self, t: f64) -> bool {
        if self.frequency == 0.0 {
            return true;
        }
        let frac = (self.frequency * t - self.phase / TAU).rem_euclid(1.0);
        frac < self.duty
    }

    /// Commanded edges in `[0, stop)` as `(time, new_level)`.
    pub fn edges(&self, stop: f64) -> Vec<(f64, bool)> {
        let Some(period) = self.period() else {
            return Vec::new();
        };
        let base = self.phase / TAU * period;
        let mut k = ((0.0 - base) / period).floor() as i64 - 1;
        let mut out = Vec::new();
        loop {
            let rise = base + k as f64 * period;
            if rise >= stop {
                break;
            }
            let fall = rise + self.duty * period;
            if rise >= 0.0 {
                out.push((rise, true));
            }
            if fall >= 0.0 && fall < stop {
                out.push((fall, false));
            }
            k += 1;
        }
        out
    }
}

/// Photovoltaic gate-driver latency. `offset` is added to both delays and
/// models device-to-device spread; it may be negative as long as both
/// effective delays stay non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverSpec {
    pub turn_on_delay: f64,
    pub turn_off_delay: f64,
    pub offset: f64,
}

impl Default for DriverSpec {
    fn default() -> Self {
        DriverSpec {
            turn_on_delay: 0.4e-3,
            turn_off_delay: 0.1e-3,
            offset: 0.0,
        }
    }
}

impl DriverSpec {
    pub const IDEAL: DriverSpec = DriverSpec {
        turn_on_delay: 0.0,
        turn_off_delay: 0.0,
        offset: 0.0,
    };

    pub fn on_latency(&self) -> f64 {
        self.turn_on_delay + self.offset
    }

    pub fn off_latency(&self) -> f64 {
        self.turn_off_delay + self.offset
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let all = [self.turn_on_delay, self.turn_off_delay, self.offset];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("driver delays must be finite".into());
        }
        if self.turn_on_delay < 0.0 || self.turn_off_delay < 0.0 {
            return Err("driver delays must be non-negative".into());
        }
        if self.on_latency() < 0.0 || self.off_latency() < 0.0 {
            return Err("driver offset makes an effective delay negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub time: f64,
    pub on: bool,
}

/// Piecewise-constant switch state: `initial` holds at t = 0, then each
/// event sets the state from its time onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSchedule {
    pub initial: bool,
    pub events: Vec<SwitchEvent>,
}

impl SwitchSchedule {
    pub fn constant(on: bool) -> Self {
        SwitchSchedule {
            initial: on,
            events: Vec::new(),
        }
    }

    pub fn state_at(&self, t: f64) -> bool {
        self.events
            .iter()
            .take_while(|e| e.time <= t)
            .last()
            .map_or(self.initial, |e| e.on)
    }
}

/// Turn a periodic command into the switch's ON/OFF timeline.
///
/// The command is treated as having run forever, so the state at t = 0
/// reflects the latest delayed event at or before zero. Only events in
/// `(0, stop)` are listed. An inverted drive follows the complement of the
/// command, as the low side of a half-bridge does.
pub fn driver_schedule(
    control: &ControlSignal,
    driver: &DriverSpec,
    stop: f64,
    inverted: bool,
) -> Result<SwitchSchedule> {
    control.validate().map_err(Error::Schedule)?;
    driver.validate().map_err(Error::Schedule)?;
    if !(stop.is_finite() && stop > 0.0) {
        return Err(Error::Schedule(format!("stop time must be positive, got {stop}")));
    }
    let Some(period) = control.period() else {
        return Ok(SwitchSchedule::constant(!inverted));
    };
    let high = control.duty * period;
    let (eff_high, eff_low) = if inverted {
        (period - high, high)
    } else {
        (high, period - high)
    };
    let d_on = driver.on_latency();
    let d_off = driver.off_latency();
    if d_on >= eff_high {
        return Err(Error::Schedule(format!(
            "turn-on latency {d_on:e} s crosses the next commanded edge {eff_high:e} s later; \
             command period too short for driver"
        )));
    }
    if d_off >= eff_low {
        return Err(Error::Schedule(format!(
            "turn-off latency {d_off:e} s crosses the next commanded edge {eff_low:e} s later; \
             command period too short for driver"
        )));
    }

    let base = control.phase / TAU * period + if inverted { high } else { 0.0 };
    let mut k = (-(base + 2.0 * period) / period).floor() as i64;
    let mut initial = None;
    let mut events = Vec::new();
    loop {
        let rise = base + k as f64 * period;
        if rise >= stop {
            break;
        }
        for (time, on) in [(rise + d_on, true), (rise + eff_high + d_off, false)] {
            if time <= 0.0 {
                initial = Some(on);
            } else if time < stop {
                events.push(SwitchEvent { time, on });
            }
        }
        k += 1;
    }
    Ok(SwitchSchedule {
        initial: initial.expect("history covers at least one full period"),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rising_edge_at_zero_turns_on_after_latency() {
        let s = driver_schedule(&ControlSignal::square(1.0), &DriverSpec::default(), 2.0, false).unwrap();
        assert!(!s.initial);
        assert_eq!(s.events[0].on, true);
        assert!((s.events[0].time - 0.4e-3).abs() < 1e-15);
        assert!((s.events[1].time - 0.5001).abs() < 1e-12);
        assert!(!s.events[1].on);
    }

    #[test]
    fn low_side_starts_on_and_opens_first() {
        let s = driver_schedule(&ControlSignal::square(1.0), &DriverSpec::default(), 2.0, true).unwrap();
        assert!(s.initial);
        assert!(!s.events[0].on);
        assert!((s.events[0].time - 0.1e-3).abs() < 1e-15);
        assert!((s.events[1].time - 0.5004).abs() < 1e-12);
    }

    #[test]
    fn zero_delays_reproduce_command_edges() {
        let ctrl = ControlSignal {
            frequency: 50.0,
            duty: 0.3,
            phase: 0.7,
        };
        let s = driver_schedule(&ctrl, &DriverSpec::IDEAL, 0.1, false).unwrap();
        let edges: Vec<_> = ctrl.edges(0.1).into_iter().filter(|(t, _)| *t > 0.0).collect();
        assert_eq!(s.events.len(), edges.len());
        for (e, (t, lvl)) in s.events.iter().zip(edges) {
            assert!((e.time - t).abs() < 1e-15);
            assert_eq!(e.on, lvl);
        }
        assert_eq!(s.initial, ctrl.level(0.0));
    }

    #[test]
    fn period_too_short_for_driver() {
        let d = DriverSpec::default();
        assert!(driver_schedule(&ControlSignal::square(1e3), &d, 0.01, false).is_ok());
        assert!(driver_schedule(&ControlSignal::square(1e3), &d, 0.01, true).is_ok());
        let err = driver_schedule(&ControlSignal::square(1e4), &d, 0.01, false).unwrap_err();
        assert!(err.to_string().contains("too short"));
    }

    #[test]
    fn phase_delays_edges() {
        let ctrl = ControlSignal::square(100.0).with_phase(std::f64::consts::FRAC_PI_2);
        let edges = ctrl.edges(0.02);
        assert!((edges[0].0 - 2.5e-3).abs() < 1e-15);
        assert!(edges[0].1);
    }

    #[test]
    fn zero_frequency_holds_high() {
        let s = driver_schedule(&ControlSignal::square(0.0), &DriverSpec::default(), 1.0, false).unwrap();
        assert!(s.initial && s.events.is_empty());
        let s = driver_schedule(&ControlSignal::square(0.0), &DriverSpec::default(), 1.0, true).unwrap();
        assert!(!s.initial && s.events.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn schedules_are_monotone_and_alternate(
            f in 1.0f64..900.0,
            duty in 0.45f64..0.55,
            phase in -7.0f64..7.0,
            offset in 0.0f64..50e-6,
            inverted: bool,
        ) {
            let ctrl = ControlSignal { frequency: f, duty, phase };
            let drv = DriverSpec { offset, ..DriverSpec::default() };
            let s = driver_schedule(&ctrl, &drv, 20.0 / f, inverted).unwrap();
            let mut prev_t = 0.0;
            let mut prev_on = s.initial;
            for e in &s.events {
                proptest::prop_assert!(e.time > prev_t);
                proptest::prop_assert!(e.on != prev_on);
                prev_t = e.time;
                prev_on = e.on;
            }
        }
    }
}
