use musense::candidates::CandidatePath;
use musense::geometry::{anchor_nodes, build_design, solid_outline, SolidOutline};
use musense::mesh::{mesh_outline, roi_elements, TetMesh};
use musense::Vec3;
use proptest::prelude::*;

/// Every length the geometry layer produces, in a fixed order.
fn lengths(scale: f64, fingers: usize) -> Vec<f64> {
    let d = build_design(scale, 6, fingers).unwrap();
    let mut v = vec![
        d.unit_cell,
        d.bladder_diameter,
        d.chamber_pitch,
        d.strut_min_thickness,
        d.actuator_length(),
        d.half_width(),
    ];
    let a = anchor_nodes(&d);
    for p in a.points.iter().chain(a.replicas.iter().flatten()) {
        v.extend(p.iter());
    }
    let o: SolidOutline = solid_outline(&d).unwrap();
    for b in o.bodies() {
        v.extend(b.min.iter().chain(b.max.iter()));
    }
    for c in &o.cavities {
        v.extend(c.center.iter());
        v.extend([c.radial, c.axial]);
    }
    for c in &o.channels {
        v.extend(c.start.iter());
        v.extend([c.length, c.radius]);
    }
    for p in &o.monitor_points {
        v.extend(p.iter());
    }
    v.extend([o.membrane_band, o.wall_margin, o.grid_unit]);
    v
}

#[test]
fn scaling_is_exact_at_the_table_scales() {
    for fingers in [1, 2] {
        let base = lengths(1.0, fingers);
        for s in [0.75, 1.5, 2.0, 0.1] {
            let scaled = lengths(s, fingers);
            assert_eq!(scaled.len(), base.len());
            for (a, b) in base.iter().zip(&scaled) {
                assert_eq!(s * a, *b, "scale {s}");
            }
        }
    }
}

#[test]
fn sensor_radius_does_not_scale() {
    let a = build_design(1.0, 6, 1).unwrap();
    let b = build_design(1.5, 6, 1).unwrap();
    assert_eq!(a.sensor_radius, b.sensor_radius);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn scaling_is_exact(s in 0.05f64..20.0) {
        let base = lengths(1.0, 1);
        let scaled = lengths(s, 1);
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert_eq!(s * a, *b);
        }
    }
}

fn preset_mesh() -> TetMesh {
    let d = build_design(1.0, 6, 1).unwrap();
    mesh_outline(&solid_outline(&d).unwrap(), d.unit_cell / 3.0).unwrap()
}

#[test]
fn preset_mesh_round_trips_byte_for_byte() {
    let mesh = preset_mesh();
    mesh.validate().unwrap();
    assert!((0..mesh.tets.len()).all(|t| mesh.volume(t) > 0.0));
    let mut first = Vec::new();
    mesh.write(&mut first).unwrap();
    let back = TetMesh::read(first.as_slice()).unwrap();
    assert_eq!(back, mesh);
    let mut second = Vec::new();
    back.write(&mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn preset_mesh_layout() {
    let mesh = preset_mesh();
    let d = build_design(1.0, 6, 1).unwrap();
    assert_eq!(mesh.monitored_vertices.len(), 6);
    assert!(!mesh.cavity_faces.is_empty());
    let cavities: std::collections::BTreeSet<usize> =
        mesh.cavity_faces.iter().map(|f| f.cavity).collect();
    assert_eq!(cavities.len(), 6);
    // monitored vertices sit on the anchors' nearest grid nodes
    let h = d.unit_cell / 3.0;
    for (v, a) in mesh.monitored_vertices.iter().zip(&anchor_nodes(&d).points) {
        assert!((mesh.vertices[*v] - a).norm() <= h * 3f64.sqrt() / 2.0 + 1e-9);
    }
    assert!(mesh
        .fixed_vertices
        .iter()
        .all(|&v| mesh.vertices[v].x == 0.0));
}

/// Inside the capsule: inside either end ball, or inside the open cylinder.
fn in_capsule(p: &Vec3, a: &Vec3, b: &Vec3, r: f64) -> bool {
    if (p - a).norm() <= r || (p - b).norm() <= r {
        return true;
    }
    let axis = b - a;
    let len = axis.norm();
    let along = (p - a).dot(&axis) / len;
    if along < 0.0 || along > len {
        return false;
    }
    (p - a).cross(&axis).norm() / len <= r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn roi_matches_capsule_oracle(
        a in (0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0),
        b in (0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0),
        c in (0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0),
        r in 0.2f64..2.5,
    ) {
        let mesh = grid_cube();
        let pts = vec![Vec3::new(a.0, a.1, a.2), Vec3::new(b.0, b.1, b.2), Vec3::new(c.0, c.1, c.2)];
        let path = CandidatePath {
            start_index: 1,
            length: 3,
            anchors: pts.clone(),
            inclusions: vec![pts.clone()],
            radius: r,
            label: "alpha_1".into(),
        };
        let roi = roi_elements(&mesh, &path);
        let oracle: Vec<usize> = (0..mesh.tets.len())
            .filter(|&t| {
                let p = mesh.centroid(t);
                pts.windows(2).any(|w| in_capsule(&p, &w[0], &w[1], r))
            })
            .collect();
        prop_assert_eq!(&roi.element_ids, &oracle);
        prop_assert_eq!(roi.warning.is_some(), oracle.is_empty());
    }
}

fn grid_cube() -> TetMesh {
    use std::sync::OnceLock;
    static MESH: OnceLock<TetMesh> = OnceLock::new();
    MESH.get_or_init(|| {
        let outline = SolidOutline::block(Vec3::zeros(), Vec3::repeat(10.0), 10.0);
        let mesh = mesh_outline(&outline, 1.0).unwrap();
        assert_eq!(mesh.tets.len(), 5 * 1000);
        mesh
    })
    .clone()
}
