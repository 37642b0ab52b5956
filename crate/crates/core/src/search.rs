//! Exhaustive evaluation: one baseline solve, then every candidate on the
//! shared mesh, ranked by the global average deviation.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use thiserror::Error;

use crate::candidates::{enumerate_candidates, CandidatePath};
use crate::deviation::{deviation_matrix, DeviationReport};
use crate::fem::{
    assemble_material, solve_quasistatic, Layout, MaterialConfig, PressureProgram, SolverSettings,
    TrajectorySet,
};
use crate::geometry::{anchor_nodes, solid_outline, AnchorSet, MuDesign};
use crate::mesh::{mesh_outline, roi_elements, TetMesh};
use crate::parallel;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("all {0} candidates failed")]
    AllFailed(usize),
    #[error("mesh resolution must be at least 1 cell per unit cell")]
    Resolution,
}

/// Everything a search needs that does not depend on the candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub material: MaterialConfig,
    pub program: PressureProgram,
    /// Time samples.
    pub k: usize,
    /// Arc-length samples.
    pub j: usize,
    /// 0 means all available cores.
    pub workers: usize,
    pub settings: SolverSettings,
}

impl SearchConfig {
    pub fn new(material: MaterialConfig, program: PressureProgram, k: usize, j: usize) -> Self {
        Self {
            material,
            program,
            k,
            j,
            workers: 0,
            settings: SolverSettings::default(),
        }
    }

    pub fn effective_workers(&self) -> usize {
        match self.workers {
            0 => parallel::available_workers(),
            w => w,
        }
    }
}

/// Meshed design shared read-only by all solves.
#[derive(Debug)]
pub struct Problem {
    pub design: MuDesign,
    pub cells_per_unit_cell: usize,
    pub mesh: TetMesh,
    pub layout: Arc<Layout>,
    pub anchors: AnchorSet,
    pub candidates: Vec<CandidatePath>,
}

impl Problem {
    /// Meshes the design with `cells_per_unit_cell` grid cells per lattice
    /// unit cell.
    pub fn build(design: MuDesign, cells_per_unit_cell: usize) -> crate::Result<Self> {
        if cells_per_unit_cell == 0 {
            return Err(SearchError::Resolution.into());
        }
        let outline = solid_outline(&design)?;
        let mesh = mesh_outline(&outline, design.unit_cell / cells_per_unit_cell as f64)?;
        mesh.validate()?;
        let anchors = anchor_nodes(&design);
        let candidates = enumerate_candidates(&anchors, design.sensor_radius)?;
        let layout = Arc::new(Layout::for_mesh(&mesh)?);
        Ok(Self {
            design,
            cells_per_unit_cell,
            mesh,
            layout,
            anchors,
            candidates,
        })
    }

    /// Identifies the baseline problem: design, mesh resolution, material,
    /// program, sample counts and solver settings.
    pub fn fingerprint(&self, config: &SearchConfig) -> String {
        use sha2::{Digest, Sha256};
        let canonical = format!(
            "{:?}|cells={}|{:?}|{:?}|k={}|j={}|{:?}",
            self.design,
            self.cells_per_unit_cell,
            config.material,
            config.program.samples(),
            config.k,
            config.j,
            config.settings
        );
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Baseline trajectories keyed by fingerprint, with a count of the solves
/// actually performed.
#[derive(Debug, Default)]
pub struct BaselineCache {
    entries: Mutex<HashMap<String, Arc<TrajectorySet>>>,
    solves: AtomicUsize,
}

impl BaselineCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    /// Holds the lock while solving, so concurrent callers with the same key
    /// never solve twice.
    fn get_or_solve(
        &self,
        key: &str,
        solve: impl FnOnce() -> crate::Result<TrajectorySet>,
    ) -> crate::Result<Arc<TrajectorySet>> {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = entries.get(key) {
            return Ok(Arc::clone(hit));
        }
        let traj = Arc::new(solve()?);
        self.solves.fetch_add(1, Ordering::SeqCst);
        entries.insert(key.to_string(), Arc::clone(&traj));
        Ok(traj)
    }
}

/// Model A: the design without any inclusion.
pub fn run_baseline(
    problem: &Problem,
    config: &SearchConfig,
    cache: &BaselineCache,
) -> crate::Result<Arc<TrajectorySet>> {
    cache.get_or_solve(&problem.fingerprint(config), || {
        let material = assemble_material(&problem.mesh, None, &config.material)?;
        Ok(solve_quasistatic(
            &problem.mesh,
            &material,
            &config.program,
            config.k,
            Arc::clone(&problem.layout),
            config.settings,
        )?)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub label: String,
    pub start_index: usize,
    pub length: usize,
    pub roi_elements: usize,
    pub j_hat: Option<f64>,
    pub j_cont: Option<f64>,
    /// Excluded from every written table so reruns stay byte-identical.
    pub wall_clock_s: f64,
    pub status: RowStatus,
    pub warning: Option<String>,
}

/// Result of one Model alpha evaluation.
#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    pub row: RankingRow,
    pub trajectory: Option<TrajectorySet>,
    pub report: Option<DeviationReport>,
}

/// Stiffens the candidate inclusion, solves and compares with `baseline`.
/// Solver or comparison failures become a FAILED row, never an error.
pub fn evaluate_candidate(
    problem: &Problem,
    baseline: &TrajectorySet,
    path: &CandidatePath,
    config: &SearchConfig,
) -> CandidateOutcome {
    let started = Instant::now();
    let roi = roi_elements(&problem.mesh, path);
    let result = (|| -> crate::Result<(TrajectorySet, DeviationReport)> {
        let material = assemble_material(&problem.mesh, Some(&roi), &config.material)?;
        let traj = solve_quasistatic(
            &problem.mesh,
            &material,
            &config.program,
            config.k,
            Arc::clone(&problem.layout),
            config.settings,
        )?;
        let report = deviation_matrix(baseline, &traj, config.k, config.j)?
            .with_metadata(config.program.duration(), problem.design.actuator_length());
        Ok((traj, report))
    })();
    let mut row = RankingRow {
        label: path.label.clone(),
        start_index: path.start_index,
        length: path.length,
        roi_elements: roi.len(),
        j_hat: None,
        j_cont: None,
        wall_clock_s: 0.0,
        status: RowStatus::Ok,
        warning: roi.warning.clone(),
    };
    let (trajectory, report) = match result {
        Ok((traj, report)) => {
            row.j_hat = Some(report.j_hat);
            row.j_cont = Some(report.j_cont);
            (Some(traj), Some(report))
        }
        Err(e) => {
            log::warn!("{} failed: {e}", path.label);
            row.status = RowStatus::Failed(e.to_string());
            (None, None)
        }
    };
    row.wall_clock_s = started.elapsed().as_secs_f64();
    CandidateOutcome {
        row,
        trajectory,
        report,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    /// Ascending by `j_hat`, ties by shorter window then smaller start;
    /// FAILED rows last in enumeration order.
    pub rows: Vec<RankingRow>,
    pub optimum: String,
    pub config_fingerprint: String,
}

impl RankingTable {
    pub fn from_rows(mut rows: Vec<RankingRow>, fingerprint: String) -> Result<Self, SearchError> {
        rows.sort_by(|a, b| match (a.j_hat, b.j_hat) {
            (Some(x), Some(y)) => x
                .total_cmp(&y)
                .then(a.length.cmp(&b.length))
                .then(a.start_index.cmp(&b.start_index)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a
                .length
                .cmp(&b.length)
                .then(a.start_index.cmp(&b.start_index)),
        });
        let optimum = rows
            .iter()
            .find(|r| r.j_hat.is_some())
            .map(|r| r.label.clone())
            .ok_or(SearchError::AllFailed(rows.len()))?;
        Ok(Self {
            rows,
            optimum,
            config_fingerprint: fingerprint,
        })
    }

    pub fn optimum_row(&self) -> &RankingRow {
        self.rows
            .iter()
            .find(|r| r.label == self.optimum)
            .expect("optimum is one of the rows")
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.j_hat.is_none()).count()
    }

    pub fn get(&self, label: &str) -> Option<&RankingRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Ranked table without timings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "rank,label,start_index,length,roi_elements,j_hat_mm,j_cont_mm,status"
        )?;
        for (rank, r) in self.rows.iter().enumerate() {
            let value = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
            let status = match (&r.status, &r.warning) {
                (RowStatus::Failed(_), _) => "FAILED",
                (RowStatus::Ok, Some(_)) => "EMPTY_ROI",
                (RowStatus::Ok, None) => "ok",
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rank + 1,
                r.label,
                r.start_index,
                r.length,
                r.roi_elements,
                value(r.j_hat),
                value(r.j_cont),
                status
            )?;
        }
        Ok(())
    }
}

/// Baseline, all candidates and the ranking.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub table: RankingTable,
    pub baseline: Arc<TrajectorySet>,
    /// In enumeration order.
    pub outcomes: Vec<CandidateOutcome>,
}

/// Evaluates every candidate of the problem on up to `config.workers`
/// threads. The table depends only on the inputs, not on the schedule.
pub fn exhaustive_search(
    problem: &Problem,
    config: &SearchConfig,
    cache: &BaselineCache,
) -> crate::Result<SearchOutcome> {
    let baseline = run_baseline(problem, config, cache)?;
    let outcomes =
        parallel::map_with_workers(config.effective_workers(), &problem.candidates, |path| {
            evaluate_candidate(problem, &baseline, path, config)
        });
    let rows = outcomes.iter().map(|o| o.row.clone()).collect();
    let table = RankingTable::from_rows(rows, problem.fingerprint(config))?;
    if table.failed() > 0 {
        log::warn!(
            "{} of {} candidates FAILED; ranking is partial",
            table.failed(),
            table.rows.len()
        );
    }
    Ok(SearchOutcome {
        table,
        baseline,
        outcomes,
    })
}
