#![allow(dead_code)]

use std::sync::Arc;

use musense::fem::{Kinematics, Layout, LoadCase, SolverSettings, System};
use musense::geometry::SolidOutline;
use musense::mesh::{mesh_outline, TetMesh, TET_FACES};
use musense::Vec3;

pub fn block_mesh(size: Vec3, cell: f64) -> TetMesh {
    let outline = SolidOutline::block(Vec3::zeros(), size, cell);
    mesh_outline(&outline, cell).unwrap()
}

/// Boundary triangles on the plane `axis = value`, outward winding.
pub fn faces_on_plane(mesh: &TetMesh, axis: usize, value: f64) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for tet in &mesh.tets {
        for f in TET_FACES {
            let tri = f.map(|l| tet[l]);
            if tri
                .iter()
                .all(|&v| (mesh.vertices[v][axis] - value).abs() < 1e-12)
            {
                out.push(tri);
            }
        }
    }
    out
}

/// Consistent nodal forces of a uniform traction on `faces`.
pub fn traction(mesh: &TetMesh, faces: &[[usize; 3]], t: Vec3) -> Vec<(usize, Vec3)> {
    let mut loads = Vec::new();
    for [a, b, c] in faces {
        let (pa, pb, pc) = (mesh.vertices[*a], mesh.vertices[*b], mesh.vertices[*c]);
        let area = 0.5 * (pb - pa).cross(&(pc - pa)).norm();
        for v in [a, b, c] {
            loads.push((*v, t * (area / 3.0)));
        }
    }
    loads
}

/// Symmetry rollers on the three coordinate planes through the origin.
pub fn rollers(mesh: &TetMesh) -> Vec<bool> {
    let mut fixed = vec![false; 3 * mesh.vertices.len()];
    for (v, p) in mesh.vertices.iter().enumerate() {
        for d in 0..3 {
            if p[d].abs() < 1e-12 {
                fixed[3 * v + d] = true;
            }
        }
    }
    fixed
}

pub fn clamped(mesh: &TetMesh) -> Vec<bool> {
    let mut fixed = vec![false; 3 * mesh.vertices.len()];
    for &v in &mesh.fixed_vertices {
        fixed[3 * v..3 * v + 3].fill(true);
    }
    fixed
}

pub fn settings(kinematics: Kinematics) -> SolverSettings {
    SolverSettings {
        kinematics,
        ..SolverSettings::default()
    }
}

pub fn system(
    mesh: &TetMesh,
    e: f64,
    nu: f64,
    fixed: &[bool],
    loads: LoadCase,
    kinematics: Kinematics,
) -> System {
    let layout = Arc::new(Layout::new(mesh.vertices.len(), &mesh.tets, fixed).unwrap());
    let moduli = vec![e; mesh.tets.len()];
    System::new(
        &mesh.vertices,
        &mesh.tets,
        &moduli,
        nu,
        loads,
        layout,
        settings(kinematics),
    )
    .unwrap()
}

/// 4 mm cube around a spherical cavity, clamped at `x = 0`.
pub fn cavity_cube(cell: f64) -> TetMesh {
    use musense::geometry::Cavity;
    let mut o = SolidOutline::block(Vec3::zeros(), Vec3::repeat(4.0), 4.0);
    o.cavities.push(Cavity {
        id: 0,
        center: Vec3::new(2.0, 2.0, 2.4),
        radial: 1.0,
        axial: 1.0,
    });
    o.membrane_band = 0.2;
    o.wall_margin = 0.5;
    mesh_outline(&o, cell).unwrap()
}

pub fn max_displacement(rest: &[Vec3], x: &[Vec3]) -> f64 {
    rest.iter()
        .zip(x)
        .map(|(a, b)| (b - a).norm())
        .fold(0.0, f64::max)
}

pub fn relative_error(x: &[Vec3], exact: impl Fn(&Vec3) -> Vec3, rest: &[Vec3]) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (p, q) in rest.iter().zip(x) {
        let u = exact(p);
        err = err.max((q - p - u).norm());
        scale = scale.max(u.norm());
    }
    err / scale
}

/// Block on symmetry rollers pulled by a uniform traction on its far face;
/// returns the worst nodal error against the uniform strain solution,
/// relative to the largest exact displacement.
pub fn patch_test_error(kin: Kinematics) -> f64 {
    let (e, nu, sigma) = (50.0, 0.3, 0.5);
    let mesh = block_mesh(Vec3::new(2.0, 1.0, 1.0), 0.25);
    let end = faces_on_plane(&mesh, 0, 2.0);
    let loads = LoadCase {
        pressure_faces: vec![],
        dead_loads: traction(&mesh, &end, Vec3::new(sigma, 0.0, 0.0)),
    };
    let sys = system(&mesh, e, nu, &rollers(&mesh), loads, kin);
    let x = sys.solve_static(1.0).unwrap();
    let exact = |p: &Vec3| Vec3::new(p.x, -nu * p.y, -nu * p.z) * (sigma / e);
    relative_error(&x, exact, &mesh.vertices)
}

/// Refinement level 1 is the coarsest admissible grid: 2 cells through the
/// beam thickness; each level halves the cell.
pub fn cantilever_tip(level: u32, kin: Kinematics, load: f64) -> (f64, f64) {
    let (l, b, e) = (20.0, 1.0, 1000.0);
    let cell = b / (1u32 << level) as f64;
    let mesh = block_mesh(Vec3::new(l, b, b), cell);
    let end = faces_on_plane(&mesh, 0, l);
    let loads = LoadCase {
        pressure_faces: vec![],
        dead_loads: traction(&mesh, &end, Vec3::new(0.0, 0.0, -1.0 / (b * b))),
    };
    let sys = system(&mesh, e, 0.0, &clamped(&mesh), loads, kin);
    let x = sys.solve_static(load).unwrap();
    let tip: Vec<f64> = mesh
        .vertices
        .iter()
        .zip(&x)
        .filter(|(v, _)| (v.x - l).abs() < 1e-12)
        .map(|(v, q)| v.z - q.z)
        .collect();
    let w = tip.iter().sum::<f64>() / tip.len() as f64;
    let theory = load * l.powi(3) / (3.0 * e * b.powi(4) / 12.0);
    (w, theory)
}
