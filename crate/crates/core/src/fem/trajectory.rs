use std::io::{BufRead, Write};

use crate::Vec3;

use super::SolverError;

/// Monitored node positions (mm) at normalized times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vec3>>,
}

impl TrajectorySet {
    pub fn new(times: Vec<f64>, positions: Vec<Vec<Vec3>>) -> Result<Self, SolverError> {
        if times.len() != positions.len() {
            return Err(SolverError::Trajectory(format!(
                "{} times but {} position sets",
                times.len(),
                positions.len()
            )));
        }
        if let Some(first) = positions.first() {
            if let Some(m) = positions.iter().position(|p| p.len() != first.len()) {
                return Err(SolverError::Trajectory(format!(
                    "step {m} has {} nodes, step 0 has {}",
                    positions[m].len(),
                    first.len()
                )));
            }
        }
        Ok(Self { times, positions })
    }

    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn nodes(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Applies `f` to every position.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            times: self.times.clone(),
            positions: self
                .positions
                .iter()
                .map(|step| step.iter().map(&f).collect())
                .collect(),
        }
    }

    /// `step,t_norm,node_index,x,y,z`, one row per node per step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,t_norm,node_index,x,y,z")?;
        for (m, (t, pts)) in self.times.iter().zip(&self.positions).enumerate() {
            for (i, p) in pts.iter().enumerate() {
                writeln!(out, "{m},{t:.6},{i},{:.6},{:.6},{:.6}", p.x, p.y, p.z)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, SolverError> {
        let bad = |line: usize, msg: &str| SolverError::Trajectory(format!("line {line}: {msg}"));
        let mut times = Vec::new();
        let mut positions: Vec<Vec<Vec3>> = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| SolverError::Trajectory(e.to_string()))?;
            if n == 0 {
                if line.trim() != "step,t_norm,node_index,x,y,z" {
                    return Err(bad(1, "unexpected header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad(n + 1, "expected 6 fields"));
            }
            let int = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| bad(n + 1, "bad index"))
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(n + 1, "bad number"))
            };
            let (m, i) = (int(fields[0])?, int(fields[2])?);
            if m == positions.len() {
                times.push(num(fields[1])?);
                positions.push(Vec::new());
            } else if m + 1 != positions.len() {
                return Err(bad(n + 1, "steps out of order"));
            }
            let step = positions.last_mut().expect("step pushed above");
            if i != step.len() {
                return Err(bad(n + 1, "node indices out of order"));
            }
            step.push(Vec3::new(num(fields[3])?, num(fields[4])?, num(fields[5])?));
        }
        Self::new(times, positions)
    }
}

/// Direction of the distal end of the backbone: derivative at the last
/// node of the quadratic through the last three nodes (chord-length
/// parameter), or the last chord with only two nodes.
fn distal_tangent(points: &[Vec3]) -> Result<Vec3, SolverError> {
    let n = points.len();
    if n < 2 {
        return Err(SolverError::Trajectory(format!(
            "bending angle needs 2 nodes, got {n}"
        )));
    }
    let last = points[n - 1] - points[n - 2];
    let h2 = last.norm();
    if !(h2 > 0.0) {
        return Err(SolverError::Trajectory("coincident distal nodes".into()));
    }
    if n == 2 {
        return Ok(last / h2);
    }
    let prev = points[n - 2] - points[n - 3];
    let h1 = prev.norm();
    if !(h1 > 0.0) {
        return Err(SolverError::Trajectory("coincident distal nodes".into()));
    }
    let d = last * ((2.0 * h2 + h1) / (h2 * (h1 + h2))) - prev * (h2 / (h1 * (h1 + h2)));
    Ok(d)
}

/// Signed rotation in degrees about +y (the sagittal normal) of the
/// distal backbone tangent at `step` relative to step 0. Positive values
/// turn the tip from +x toward -z.
pub fn bending_angle(traj: &TrajectorySet, step: usize) -> Result<f64, SolverError> {
    let at = traj.positions.get(step).ok_or_else(|| {
        SolverError::Trajectory(format!("step {step} out of range ({} steps)", traj.steps()))
    })?;
    let planar = |d: Vec3| -> Result<f64, SolverError> {
        if d.x == 0.0 && d.z == 0.0 {
            return Err(SolverError::Trajectory(
                "tangent normal to the sagittal plane".into(),
            ));
        }
        Ok((-d.z).atan2(d.x))
    };
    let reference = planar(distal_tangent(&traj.positions[0])?)?;
    let current = planar(distal_tangent(at)?)?;
    let mut delta = current - reference;
    while delta > std::f64::consts::PI {
        delta -= 2.0 * std::f64::consts::PI;
    }
    while delta <= -std::f64::consts::PI {
        delta += 2.0 * std::f64::consts::PI;
    }
    Ok(delta.to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| Vec3::new(10.0 * i as f64, 0.0, 0.0))
            .collect()
    }

    fn pair(a: Vec<Vec3>, b: Vec<Vec3>) -> TrajectorySet {
        TrajectorySet::new(vec![0.0, 1.0], vec![a, b]).unwrap()
    }

    #[test]
    fn undeformed_is_zero() {
        let t = pair(straight(6), straight(6));
        assert_eq!(bending_angle(&t, 0).unwrap(), 0.0);
        assert_eq!(bending_angle(&t, 1).unwrap(), 0.0);
    }

    #[test]
    fn rigid_rotation_about_base() {
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), 30f64.to_radians());
        let t = pair(straight(6), straight(6).iter().map(|p| rot * p).collect());
        assert!((bending_angle(&t, 1).unwrap() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn quarter_circle() {
        let r = 40.0;
        let arc: Vec<Vec3> = (0..6)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / 5.0;
                Vec3::new(r * th.sin(), 0.0, -r * (1.0 - th.cos()))
            })
            .collect();
        let t = pair(straight(6), arc);
        let angle = bending_angle(&t, 1).unwrap();
        assert!((angle - 90.0).abs() < 1.0, "{angle}");
    }

    #[test]
    fn coincident_nodes_are_rejected() {
        let mut bad = straight(4);
        bad[3] = bad[2];
        let t = pair(straight(4), bad);
        assert!(bending_angle(&t, 1).is_err());
        assert!(bending_angle(&t, 5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = pair(
            straight(3),
            straight(3)
                .iter()
                .map(|p| p + Vec3::new(0.5, 0.0, -1.25))
                .collect(),
        );
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = TrajectorySet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }
}
