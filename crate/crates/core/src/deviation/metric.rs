use std::io::Write;

use crate::fem::TrajectorySet;
use crate::Vec3;

use super::{reparameterize, DeviationError};

/// Deviation matrix between two backbone histories and its reductions.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// `delta[m][s]` in mm, `k` rows of `j` entries.
    pub delta: Vec<Vec<f64>>,
    /// Row means.
    pub avg_over_length: Vec<f64>,
    /// Column means.
    pub avg_over_time: Vec<f64>,
    pub j_hat: f64,
    /// Root mean square of the matrix over the uniform grid.
    pub j_cont: f64,
    pub k: usize,
    pub j: usize,
    /// Actuation duration, s.
    pub duration: f64,
    /// Actuator length, mm.
    pub length: f64,
}

impl DeviationReport {
    /// Reductions of a rectangular nonnegative matrix.
    pub fn from_matrix(delta: Vec<Vec<f64>>) -> Result<Self, DeviationError> {
        let k = delta.len();
        let j = delta.first().map_or(0, Vec::len);
        if k < 2 {
            return Err(DeviationError::SampleCount {
                name: "k",
                value: k,
            });
        }
        if j < 2 {
            return Err(DeviationError::SampleCount {
                name: "j",
                value: j,
            });
        }
        if let Some(row) = delta.iter().position(|r| r.len() != j) {
            return Err(DeviationError::MismatchedGrid(format!(
                "row {row} has {} entries, expected {j}",
                delta[row].len()
            )));
        }
        let avg_over_length: Vec<f64> = delta
            .iter()
            .map(|r| r.iter().sum::<f64>() / j as f64)
            .collect();
        let avg_over_time: Vec<f64> = (0..j)
            .map(|s| delta.iter().map(|r| r[s]).sum::<f64>() / k as f64)
            .collect();
        let count = (k * j) as f64;
        let j_hat = delta.iter().flatten().sum::<f64>() / count;
        let j_cont = (delta.iter().flatten().map(|d| d * d).sum::<f64>() / count).sqrt();
        Ok(Self {
            delta,
            avg_over_length,
            avg_over_time,
            j_hat,
            j_cont,
            k,
            j,
            duration: 1.0,
            length: 1.0,
        })
    }

    /// Samples two continuous backbone families `r(t, l)` on the uniform
    /// `k x j` grid.
    pub fn from_curves(
        k: usize,
        j: usize,
        base: impl Fn(f64, f64) -> Vec3,
        cand: impl Fn(f64, f64) -> Vec3,
    ) -> Result<Self, DeviationError> {
        check_counts(k, j)?;
        let delta = grid(k)
            .map(|t| grid(j).map(|l| (cand(t, l) - base(t, l)).norm()).collect())
            .collect();
        Self::from_matrix(delta)
    }

    pub fn with_metadata(mut self, duration: f64, length: f64) -> Self {
        self.duration = duration;
        self.length = length;
        self
    }

    /// Heatmap with time percent rows and length percent columns.
    pub fn write_heatmap<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "time_pct")?;
        for l in grid(self.j) {
            write!(out, ",{:.2}", 100.0 * l)?;
        }
        writeln!(out)?;
        for (t, row) in grid(self.k).zip(&self.delta) {
            write!(out, "{:.2}", 100.0 * t)?;
            for d in row {
                write!(out, ",{d:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Mean deviation per time sample.
    pub fn write_time_marginal<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time_pct,mean_deviation_mm")?;
        for (t, d) in grid(self.k).zip(&self.avg_over_length) {
            writeln!(out, "{:.2},{d:.6}", 100.0 * t)?;
        }
        Ok(())
    }

    /// Mean deviation per arc-length sample.
    pub fn write_length_marginal<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "length_pct,mean_deviation_mm")?;
        for (l, d) in grid(self.j).zip(&self.avg_over_time) {
            writeln!(out, "{:.2},{d:.6}", 100.0 * l)?;
        }
        Ok(())
    }
}

fn check_counts(k: usize, j: usize) -> Result<(), DeviationError> {
    if k < 2 {
        return Err(DeviationError::SampleCount {
            name: "k",
            value: k,
        });
    }
    if j < 2 {
        return Err(DeviationError::SampleCount {
            name: "j",
            value: j,
        });
    }
    Ok(())
}

/// `n` uniform samples of `[0, 1]` including both ends.
fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    let last = (n.max(2) - 1) as f64;
    (0..n).map(move |i| i as f64 / last)
}

/// Compares candidate and baseline backbones at every time step and `j`
/// arc-length samples.
pub fn deviation_matrix(
    base: &TrajectorySet,
    cand: &TrajectorySet,
    k: usize,
    j: usize,
) -> Result<DeviationReport, DeviationError> {
    check_counts(k, j)?;
    if base.steps() != k || cand.steps() != k {
        return Err(DeviationError::MismatchedGrid(format!(
            "expected {k} steps, baseline has {} and candidate {}",
            base.steps(),
            cand.steps()
        )));
    }
    if base.times != cand.times {
        return Err(DeviationError::MismatchedGrid(
            "baseline and candidate sample different times".into(),
        ));
    }
    let samples: Vec<f64> = grid(j).collect();
    let mut delta = Vec::with_capacity(k);
    for (pa, pc) in base.positions.iter().zip(&cand.positions) {
        let ca = reparameterize(pa)?;
        let cc = reparameterize(pc)?;
        delta.push(
            samples
                .iter()
                .map(|&l| (cc.eval(l) - ca.eval(l)).norm())
                .collect(),
        );
    }
    DeviationReport::from_matrix(delta)
}

/// The scalar objective: plain mean of the deviation matrix.
pub fn objective(report: &DeviationReport) -> f64 {
    report.j_hat
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_mean() {
        let r = DeviationReport::from_matrix(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(objective(&r), 2.5);
        assert_eq!(r.avg_over_length, vec![1.5, 3.5]);
        assert_eq!(r.avg_over_time, vec![2.0, 3.0]);
        assert!((r.j_cont - 7.5f64.sqrt()).abs() < 1e-15);
        assert!(r.j_cont >= r.j_hat);
    }

    #[test]
    fn zero_matrix() {
        let r = DeviationReport::from_matrix(vec![vec![0.0; 4]; 3]).unwrap();
        assert_eq!(objective(&r), 0.0);
        assert_eq!(r.j_cont, 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DeviationReport::from_matrix(vec![vec![1.0, 2.0]]).is_err());
        assert!(DeviationReport::from_matrix(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(
            DeviationReport::from_curves(2, 1, |_, l| Vec3::x() * l, |_, l| Vec3::x() * l).is_err()
        );
    }

    #[test]
    fn heatmap_layout() {
        let r = DeviationReport::from_matrix(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        r.write_heatmap(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time_pct,0.00,100.00\n0.00,1.000000,2.000000\n100.00,3.000000,4.000000\n"
        );
    }

    #[test]
    fn mismatched_grids() {
        let pts = vec![vec![Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()]; 3];
        let a = TrajectorySet::new(vec![0.0, 0.5, 1.0], pts.clone()).unwrap();
        let b = TrajectorySet::new(vec![0.0, 0.4, 1.0], pts).unwrap();
        assert!(matches!(
            deviation_matrix(&a, &b, 3, 10),
            Err(DeviationError::MismatchedGrid(_))
        ));
        assert!(deviation_matrix(&a, &a, 4, 10).is_err());
        assert_eq!(deviation_matrix(&a, &a, 3, 10).unwrap().j_hat, 0.0);
    }
}
