use std::f64::consts::PI;

use musense::deviation::{deviation_matrix, objective, reparameterize, DeviationReport};
use musense::fem::TrajectorySet;
use musense::Vec3;
use nalgebra::{Rotation3, Translation3};
use proptest::prelude::*;

fn line(_t: f64, l: f64) -> Vec3 {
    Vec3::new(100.0 * l, 0.0, 0.0)
}

fn bulged(a: f64) -> impl Fn(f64, f64) -> Vec3 {
    move |t, l| line(t, l) + Vec3::new(0.0, 0.0, a * (PI * l).sin())
}

#[test]
fn sinusoid_matches_the_discrete_closed_form() {
    let a = 2.0;
    for j in [10usize, 50, 200] {
        let r = DeviationReport::from_curves(4, j, line, bulged(a)).unwrap();
        // sum of sin(pi s / (j - 1)) over s = 0..j-1 is cot(pi / (2 (j - 1)))
        let mean = a / (PI / (2.0 * (j - 1) as f64)).tan() / j as f64;
        assert!((r.j_hat - mean).abs() < 1e-12, "j = {j}");
        let rms = a * ((j - 1) as f64 / (2.0 * j as f64)).sqrt();
        assert!((r.j_cont - rms).abs() < 1e-12, "j = {j}");
        assert!(r.j_cont >= r.j_hat);
    }
}

#[test]
fn sinusoid_approaches_the_continuous_limits() {
    let a = 1.5;
    let mut errors = Vec::new();
    for n in [25usize, 50, 100, 200, 400] {
        let r = DeviationReport::from_curves(n, n, line, bulged(a)).unwrap();
        errors.push((
            (r.j_hat - 2.0 * a / PI).abs(),
            (r.j_cont - a / 2f64.sqrt()).abs(),
        ));
    }
    for w in errors.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1);
    }
    let (jh, jc) = errors[errors.len() - 1];
    assert!(jh / (2.0 * a / PI) < 0.003 && jc / (a / 2f64.sqrt()) < 0.002);
}

#[test]
fn spline_pipeline_recovers_the_sinusoid() {
    // backbone samples through the full spline path
    let a = 1.0;
    let n = 41;
    let sample = |f: &dyn Fn(f64, f64) -> Vec3| -> Vec<Vec3> {
        (0..n).map(|i| f(0.0, i as f64 / (n - 1) as f64)).collect()
    };
    let base_pts = sample(&line);
    let bulge = bulged(a);
    let cand_pts = sample(&bulge);
    let times = vec![0.0, 1.0];
    let base = TrajectorySet::new(times.clone(), vec![base_pts.clone(), base_pts]).unwrap();
    let cand = TrajectorySet::new(times, vec![cand_pts.clone(), cand_pts]).unwrap();
    let r = deviation_matrix(&base, &cand, 2, 200).unwrap();
    let exact = DeviationReport::from_curves(2, 200, line, bulged(a)).unwrap();
    assert!(((r.j_hat - exact.j_hat) / exact.j_hat).abs() < 0.02);
}

#[test]
fn grid_refinement_differences_shrink() {
    let cand = |t: f64, l: f64| line(t, l) + Vec3::new(0.0, 0.5 * t * t, 1.2 * t * (PI * l).sin());
    let mut diffs = Vec::new();
    let (mut k, mut j) = (5usize, 8usize);
    for _ in 0..4 {
        let coarse = DeviationReport::from_curves(k, j, line, cand)
            .unwrap()
            .j_hat;
        let fine = DeviationReport::from_curves(2 * k, 2 * j, line, cand)
            .unwrap()
            .j_hat;
        diffs.push((coarse - fine).abs());
        k *= 2;
        j *= 2;
    }
    for w in diffs.windows(2) {
        assert!(w[1] < w[0], "{diffs:?}");
    }
}

fn wavy(k: usize, n: usize, phase: f64) -> TrajectorySet {
    let times: Vec<f64> = (0..k).map(|m| m as f64 / (k - 1) as f64).collect();
    let positions = times
        .iter()
        .map(|&t| {
            (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    Vec3::new(
                        12.5 * (i + 1) as f64,
                        0.3 * t * (s + phase).sin(),
                        -t * s * s * (1.0 + phase),
                    )
                })
                .collect()
        })
        .collect();
    TrajectorySet::new(times, positions).unwrap()
}

#[test]
fn self_comparison_is_zero() {
    let a = wavy(6, 6, 0.2);
    let r = deviation_matrix(&a, &a, 6, 30).unwrap();
    assert!(r.delta.iter().flatten().all(|&d| d == 0.0));
    assert_eq!(objective(&r), 0.0);
    assert_eq!(r.j_cont, 0.0);
}

#[test]
fn translation_gives_its_length() {
    let a = wavy(5, 6, 0.4);
    let b = a.map_points(|p| p + Vec3::new(3.0, 0.0, 0.0));
    let r = deviation_matrix(&a, &b, 5, 50).unwrap();
    assert!(r.delta.iter().flatten().all(|d| (d - 3.0).abs() < 1e-9));
    assert!((r.j_hat - 3.0).abs() < 1e-9);
    assert!((r.j_cont - 3.0).abs() < 1e-9);
}

#[test]
fn circle_backbone_stays_on_the_circle() {
    let r = 30.0;
    let pts: Vec<Vec3> = (0..6)
        .map(|i| {
            let th = 0.5 * PI * i as f64 / 5.0;
            Vec3::new(r * th.sin(), 0.0, r * th.cos())
        })
        .collect();
    let c = reparameterize(&pts).unwrap();
    for q in 0..=100 {
        assert!((c.eval(q as f64 / 100.0).norm() - r).abs() < 0.01 * r);
    }
}

proptest! {
    #[test]
    fn rigid_motion_of_both_leaves_the_matrix(
        phase in 0.0f64..1.0,
        ax in -3.0f64..3.0, ay in -3.0f64..3.0, az in -3.0f64..3.0,
        tx in -50.0f64..50.0, ty in -50.0f64..50.0, tz in -50.0f64..50.0,
    ) {
        let a = wavy(4, 6, 0.0);
        let b = wavy(4, 6, phase);
        let iso = Translation3::new(tx, ty, tz) * Rotation3::from_euler_angles(ax, ay, az);
        let ra = a.map_points(|p| iso.transform_point(&(*p).into()).coords);
        let rb = b.map_points(|p| iso.transform_point(&(*p).into()).coords);
        let r0 = deviation_matrix(&a, &b, 4, 25).unwrap();
        let r1 = deviation_matrix(&ra, &rb, 4, 25).unwrap();
        for (x, y) in r0.delta.iter().flatten().zip(r1.delta.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn jensen_and_marginals(values in proptest::collection::vec(0.0f64..10.0, 12)) {
        let m: Vec<Vec<f64>> = values.chunks(4).map(|c| c.to_vec()).collect();
        let r = DeviationReport::from_matrix(m.clone()).unwrap();
        prop_assert!(r.j_cont >= r.j_hat * (1.0 - 1e-15));
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((objective(&r) - mean).abs() < 1e-12);
        // traversal order does not matter
        let reversed: f64 = values.iter().rev().sum::<f64>() / values.len() as f64;
        prop_assert!((objective(&r) - reversed).abs() < 1e-12);
        let row_mean = r.avg_over_length.iter().sum::<f64>() / r.k as f64;
        let col_mean = r.avg_over_time.iter().sum::<f64>() / r.j as f64;
        prop_assert!((row_mean - r.j_hat).abs() < 1e-12);
        prop_assert!((col_mean - r.j_hat).abs() < 1e-12);
    }
}
