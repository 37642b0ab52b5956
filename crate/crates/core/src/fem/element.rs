use nalgebra::{Matrix3, SMatrix, SVector};

use crate::Vec3;

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Vec12 = SVector<f64, 12>;

/// Lame parameters `(lambda, mu)` from Young's modulus and Poisson ratio.
pub fn lame(e: f64, nu: f64) -> (f64, f64) {
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    (lambda, mu)
}

/// Rotation factor of the polar decomposition `F = R S`, with the
/// reflection folded into the weakest principal direction.
pub fn polar_rotation(f: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = f.svd(true, true);
    let mut u = svd.u.expect("svd computed u");
    let v_t = svd.v_t.expect("svd computed v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let weakest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        let mut col = u.column_mut(weakest);
        col.neg_mut();
        r = u * v_t;
    }
    r
}

/// Linear tetrahedron with its rest-state stiffness.
#[derive(Debug, Clone)]
pub struct TetElement {
    pub nodes: [usize; 4],
    pub rest: [Vec3; 4],
    /// Inverse rest edge matrix.
    pub dm_inv: Matrix3<f64>,
    pub volume: f64,
    pub k0: Mat12,
}

/// Forces and tangent of one element at the current configuration.
pub struct ElementState {
    pub force: Vec12,
    pub tangent: Mat12,
}

impl TetElement {
    pub fn new(nodes: [usize; 4], rest: [Vec3; 4], e: f64, nu: f64) -> Option<Self> {
        let dm = Matrix3::from_columns(&[rest[1] - rest[0], rest[2] - rest[0], rest[3] - rest[0]]);
        let volume = dm.determinant() / 6.0;
        if !(volume > 0.0) {
            return None;
        }
        let dm_inv = dm.try_inverse()?;
        let mut g = [Vec3::zeros(); 4];
        for a in 1..4 {
            g[a] = dm_inv.row(a - 1).transpose();
        }
        g[0] = -(g[1] + g[2] + g[3]);
        let (lambda, mu) = lame(e, nu);
        let mut k0 = Mat12::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let block = volume
                    * (lambda * g[a] * g[b].transpose()
                        + mu * g[b] * g[a].transpose()
                        + mu * g[a].dot(&g[b]) * Matrix3::identity());
                k0.fixed_view_mut::<3, 3>(3 * a, 3 * b).copy_from(&block);
            }
        }
        Some(Self {
            nodes,
            rest,
            dm_inv,
            volume,
            k0,
        })
    }

    pub fn deformation_gradient(&self, x: &[Vec3; 4]) -> Matrix3<f64> {
        let ds = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        ds * self.dm_inv
    }

    /// Internal force and tangent. `corotational == false` gives plain
    /// small-strain elasticity. `None` if the element is inverted.
    pub fn evaluate(&self, positions: &[Vec3], corotational: bool) -> Option<ElementState> {
        let x = self.nodes.map(|v| positions[v]);
        let f = self.deformation_gradient(&x);
        if !(f.determinant() > 0.0) {
            return None;
        }
        let r = if corotational {
            polar_rotation(&f)
        } else {
            Matrix3::identity()
        };
        let mut local = Vec12::zeros();
        for a in 0..4 {
            let d = r.transpose() * x[a] - self.rest[a];
            local.fixed_rows_mut::<3>(3 * a).copy_from(&d);
        }
        let kd = self.k0 * local;
        let mut force = Vec12::zeros();
        let mut rot = Mat12::zeros();
        for a in 0..4 {
            force
                .fixed_rows_mut::<3>(3 * a)
                .copy_from(&(r * kd.fixed_rows::<3>(3 * a)));
            rot.fixed_view_mut::<3, 3>(3 * a, 3 * a).copy_from(&r);
        }
        let tangent = if corotational {
            rot * self.k0 * rot.transpose()
        } else {
            self.k0
        };
        Some(ElementState { force, tangent })
    }
}
