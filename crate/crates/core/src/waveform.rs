//! Uniformly sampled signals and their CSV form.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub start: f64,
    pub step: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(start: f64, step: f64, samples: Vec<f64>) -> Result<Self> {
        let w = Waveform {
            start,
            step,
            samples,
        };
        w.validate()?;
        Ok(w)
    }

    /// Sample `f` on the grid `start + i * step` for `i in 0..n`.
    pub fn from_fn(start: f64, step: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..n).map(|i| f(start + i as f64 * step)).collect();
        Waveform {
            start,
            step,
            samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("waveform step must be positive, got {}", self.step)));
        }
        if self.samples.is_empty() {
            return Err(Error::InvalidParameter("waveform has no samples".into()));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("waveform sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    pub fn same_grid(&self, other: &Waveform) -> bool {
        self.start == other.start && self.step == other.step && self.len() == other.len()
    }

    /// Samples whose time lies in `[from, to]` (with half-step tolerance),
    /// as a new waveform.
    pub fn window(&self, from: f64, to: f64) -> Waveform {
        let tol = 0.5 * self.step;
        let first = ((from - self.start - tol) / self.step).ceil().max(0.0) as usize;
        let last = (((to - self.start + tol) / self.step).floor() as usize).min(self.len() - 1);
        let first = first.min(last);
        Waveform {
            start: self.time(first),
            step: self.step,
            samples: self.samples[first..=last].to_vec(),
        }
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform {
            start: self.start,
            step: self.step,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Waveform, f: impl Fn(f64, f64) -> f64) -> Result<Waveform> {
        if !self.same_grid(other) {
            return Err(Error::Analysis("waveforms are sampled on different grids".into()));
        }
        Ok(Waveform {
            start: self.start,
            step: self.step,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Write columns sharing one time grid: header `t,<name>...`, SI units,
/// one row per grid point, LF line endings.
pub fn write_csv<W: Write>(out: &mut W, columns: &[(&str, &Waveform)]) -> Result<()> {
    let Some((_, first)) = columns.first() else {
        return Err(Error::InvalidParameter("no columns to write".into()));
    };
    if let Some((name, _)) = columns.iter().find(|(_, w)| !w.same_grid(first)) {
        return Err(Error::InvalidParameter(format!("column '{name}' is on a different time grid")));
    }
    let mut line = String::from("t");
    for (name, _) in columns {
        line.push(',');
        line.push_str(name);
    }
    line.push('\n');
    out.write_all(line.as_bytes())?;
    for i in 0..first.len() {
        line.clear();
        line.push_str(&first.time(i).to_string());
        for (_, w) in columns {
            line.push(',');
            line.push_str(&w.samples[i].to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
