use crate::Vec3;

use super::DeviationError;

/// Natural cubic spline through backbone points against normalized
/// cumulative chord length.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    knots: Vec<f64>,
    points: Vec<Vec3>,
    /// Second derivatives at the knots.
    moments: Vec<Vec3>,
}

/// Fits the centerline of `points`; the spline passes through every point,
/// with `spline(0)` the first and `spline(1)` the last.
pub fn reparameterize(points: &[Vec3]) -> Result<Centerline, DeviationError> {
    let n = points.len();
    if n < 3 {
        return Err(DeviationError::TooFewPoints(n));
    }
    let mut knots = Vec::with_capacity(n);
    knots.push(0.0);
    for i in 1..n {
        let h = (points[i] - points[i - 1]).norm();
        if !(h > 0.0) {
            return Err(DeviationError::Coincident(i - 1, i));
        }
        knots.push(knots[i - 1] + h);
    }
    let total = knots[n - 1];
    for s in &mut knots {
        *s /= total;
    }
    knots[n - 1] = 1.0;
    let moments = natural_moments(&knots, points);
    Ok(Centerline {
        knots,
        points: points.to_vec(),
        moments,
    })
}

/// Thomas algorithm on the natural-spline moment system.
fn natural_moments(s: &[f64], y: &[Vec3]) -> Vec<Vec3> {
    let n = s.len();
    let mut m = vec![Vec3::zeros(); n];
    if n < 3 {
        return m;
    }
    let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![Vec3::zeros(); inner];
    for r in 0..inner {
        let i = r + 1;
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        upper[r] = h[i];
        rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    for r in 1..inner {
        let lower = h[r];
        let w = lower / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        let prev = rhs[r - 1];
        rhs[r] -= w * prev;
    }
    for r in (0..inner).rev() {
        let next = if r + 1 < inner {
            m[r + 2]
        } else {
            Vec3::zeros()
        };
        m[r + 1] = (rhs[r] - upper[r] * next) / diag[r];
    }
    m
}

impl Centerline {
    /// Position at normalized parameter `l`, clamped to `[0, 1]`.
    pub fn eval(&self, l: f64) -> Vec3 {
        let l = l.clamp(0.0, 1.0);
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&s| s <= l) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (s0, s1) = (self.knots[i], self.knots[i + 1]);
        let h = s1 - s0;
        let (a, b) = ((s1 - l) / h, (l - s0) / h);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        self.points[i] * a
            + self.points[i + 1] * b
            + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}
