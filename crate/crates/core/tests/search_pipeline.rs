use musense::candidates::CandidatePath;
use musense::fem::{MaterialConfig, PressureProgram};
use musense::geometry::build_design;
use musense::search::{
    evaluate_candidate, exhaustive_search, run_baseline, BaselineCache, Problem, RowStatus,
    SearchConfig,
};
use musense::Vec3;

fn problem(chambers: usize) -> Problem {
    Problem::build(build_design(1.0, chambers, 1).unwrap(), 3).unwrap()
}

fn config(k: usize) -> SearchConfig {
    SearchConfig::new(
        MaterialConfig::for_scale(1.0),
        PressureProgram::extension_then_flexion(),
        k,
        20,
    )
}

#[test]
fn baseline_is_solved_once_per_fingerprint() {
    let p = problem(3);
    let cache = BaselineCache::new();
    let cfg = config(2);
    let a = run_baseline(&p, &cfg, &cache).unwrap();
    let b = run_baseline(&p, &cfg, &cache).unwrap();
    assert_eq!(a, b);
    assert_eq!(cache.solves(), 1);
    assert_eq!(a.steps(), 2);

    let mut changed = cfg.clone();
    changed.material.e_lat = 21.70;
    assert_ne!(p.fingerprint(&cfg), p.fingerprint(&changed));
    run_baseline(&p, &changed, &cache).unwrap();
    assert_eq!(cache.solves(), 2);

    exhaustive_search(&p, &cfg, &cache).unwrap();
    assert_eq!(cache.solves(), 2, "search reuses the cached baseline");
}

#[test]
fn degenerate_material_reproduces_the_baseline() {
    let p = problem(4);
    let mut cfg = config(3);
    cfg.material = MaterialConfig::uniform(1000.0, 0.45);
    let out = exhaustive_search(&p, &cfg, &BaselineCache::new()).unwrap();
    assert_eq!(out.table.rows.len(), 3);
    for r in &out.table.rows {
        assert!(r.j_hat.unwrap() <= 1e-9, "{}: {:?}", r.label, r.j_hat);
    }
    assert_eq!(out.table.optimum, "alpha_1");
}

#[test]
fn empty_inclusion_matches_the_baseline_with_a_warning() {
    let p = problem(3);
    let cfg = config(3);
    let baseline = run_baseline(&p, &cfg, &BaselineCache::new()).unwrap();
    let outside: Vec<Vec3> = (0..3)
        .map(|i| Vec3::new(10.0 * i as f64, 500.0, 0.0))
        .collect();
    let path = CandidatePath {
        start_index: 1,
        length: 3,
        anchors: outside.clone(),
        inclusions: vec![outside],
        radius: 1.0,
        label: "alpha_1".into(),
    };
    let o = evaluate_candidate(&p, &baseline, &path, &cfg);
    assert_eq!(o.row.roi_elements, 0);
    assert!(o.row.warning.is_some());
    assert!(o.row.j_hat.unwrap() <= 1e-9);
}

#[test]
fn solver_failure_marks_the_row() {
    let p = problem(3);
    let cfg = config(3);
    let baseline = run_baseline(&p, &cfg, &BaselineCache::new()).unwrap();
    let mut strict = cfg.clone();
    strict.settings.max_iterations = 1;
    strict.settings.max_bisections = 0;
    let o = evaluate_candidate(&p, &baseline, &p.candidates[0], &strict);
    assert!(matches!(o.row.status, RowStatus::Failed(_)));
    assert!(o.row.j_hat.is_none());
    assert!(o.report.is_none());
}

#[test]
fn worker_count_does_not_change_the_table() {
    let p = problem(4);
    let mut cfg = config(3);
    let mut tables = Vec::new();
    for workers in [1, 3] {
        cfg.workers = workers;
        let out = exhaustive_search(&p, &cfg, &BaselineCache::new()).unwrap();
        let mut csv = Vec::new();
        out.table.write_csv(&mut csv).unwrap();
        tables.push(csv);
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn six_chambers_give_ten_positive_rows() {
    let p = problem(6);
    assert_eq!(p.candidates.len(), 10);
    let out = exhaustive_search(&p, &config(3), &BaselineCache::new()).unwrap();
    assert_eq!(out.table.rows.len(), 10);
    let length = p.design.actuator_length();
    for r in &out.table.rows {
        let j = r.j_hat.unwrap();
        assert!(j.is_finite() && j > 0.0 && j < length, "{}: {j}", r.label);
        assert!(r.j_cont.unwrap() >= j);
    }
    let best = out.table.optimum_row().j_hat.unwrap();
    assert!(out.table.rows.iter().all(|r| r.j_hat.unwrap() >= best));
}
