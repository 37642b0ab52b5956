use std::io::{BufRead, Write};

use super::SolverError;

/// Allowed pressure range, kPa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for PressureBounds {
    fn default() -> Self {
        Self {
            min: -50.0,
            max: 60.0,
        }
    }
}

/// Piecewise-linear cavity pressure (kPa) over time (s).
#[derive(Debug, Clone, PartialEq)]
pub struct PressureProgram {
    samples: Vec<(f64, f64)>,
}

impl PressureProgram {
    pub fn new(samples: Vec<(f64, f64)>, bounds: PressureBounds) -> Result<Self, SolverError> {
        let err = |msg: String| Err(SolverError::Program(msg));
        if samples.len() < 2 {
            return err(format!("need at least two samples, got {}", samples.len()));
        }
        if samples[0] != (0.0, 0.0) {
            return err(format!(
                "must start at time 0 with pressure 0, got ({}, {})",
                samples[0].0, samples[0].1
            ));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return err(format!("times must increase strictly (row {})", i + 2));
            }
        }
        for (i, &(t, p)) in samples.iter().enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return err(format!("non-finite value in row {}", i + 1));
            }
            if p < bounds.min || p > bounds.max {
                return err(format!(
                    "pressure {p} kPa in row {} outside [{}, {}]",
                    i + 1,
                    bounds.min,
                    bounds.max
                ));
            }
        }
        Ok(Self { samples })
    }

    /// Atmospheric start, down to -20 kPa, then up to +40 kPa at a constant
    /// rate of 20 kPa/s.
    pub fn extension_then_flexion() -> Self {
        Self::new(
            vec![(0.0, 0.0), (1.0, -20.0), (4.0, 40.0)],
            PressureBounds::default(),
        )
        .expect("built-in program is valid")
    }

    /// Linear ramp from 0 to `peak` over one second.
    pub fn ramp(peak: f64) -> Self {
        Self {
            samples: vec![(0.0, 0.0), (1.0, peak)],
        }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn max_abs_pressure(&self) -> f64 {
        self.samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max)
    }

    /// Pressure at time `t` seconds (clamped to the program range).
    pub fn at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        for w in s.windows(2) {
            let ((t0, p0), (t1, p1)) = (w[0], w[1]);
            if t <= t1 {
                return p0 + (p1 - p0) * (t - t0) / (t1 - t0);
            }
        }
        s[s.len() - 1].1
    }

    /// Pressure at normalized time `tau` in [0, 1].
    pub fn at_normalized(&self, tau: f64) -> f64 {
        self.at(tau * self.duration())
    }

    /// Parses `time,pressure` CSV (seconds, kPa).
    pub fn from_csv<R: BufRead>(input: R, bounds: PressureBounds) -> Result<Self, SolverError> {
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "time,pressure" => {}
            Some((_, Ok(h))) => {
                return Err(SolverError::Program(format!(
                    "expected header `time,pressure`, found `{h}`"
                )))
            }
            Some((_, Err(e))) => return Err(SolverError::Program(e.to_string())),
            None => return Err(SolverError::Program("empty file".into())),
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| SolverError::Program(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed = line.split_once(',').and_then(|(a, b)| {
                Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?))
            });
            match parsed {
                Some(s) => samples.push(s),
                None => {
                    return Err(SolverError::Program(format!(
                        "line {}: expected `time,pressure`, found `{line}`",
                        i + 1
                    )))
                }
            }
        }
        Self::new(samples, bounds)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,pressure")?;
        for (t, p) in &self.samples {
            writeln!(out, "{t},{p}")?;
        }
        Ok(())
    }
}
