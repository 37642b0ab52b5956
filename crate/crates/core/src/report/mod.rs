//! Run configuration, pipeline commands and artifact writers.

mod config;
mod svg;

pub use config::{ConfigError, RunConfig};
pub use svg::summary_svg;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::candidates::{candidate_count, write_manifest};
use crate::geometry::{anchor_nodes, solid_outline};
use crate::search::{exhaustive_search, BaselineCache, Problem, RankingTable};
use crate::Error;

/// Outcome of a dry run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub anchors: usize,
    pub candidates: usize,
    /// One baseline plus one per candidate.
    pub solves: usize,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} candidates, {} solves", self.candidates, self.solves)
    }
}

/// Validates the configuration and previews the work without meshing or
/// solving anything.
pub fn cmd_validate(cfg: &RunConfig) -> crate::Result<ValidationReport> {
    cfg.validate()?;
    let design = cfg.design()?;
    solid_outline(&design)?.validate()?;
    let anchors = anchor_nodes(&design).len();
    let candidates = candidate_count(anchors);
    if candidates == 0 {
        return Err(crate::candidates::CandidateError::TooFewAnchors(anchors).into());
    }
    Ok(ValidationReport {
        anchors,
        candidates,
        solves: candidates + 1,
    })
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub table: RankingTable,
    pub fingerprint: String,
    pub tets: usize,
    pub baseline_solves: usize,
    /// Wall-clock time of the whole run; reported, never written to disk.
    pub elapsed_s: f64,
    pub warnings: Vec<String>,
}

/// Collects written files for the manifest.
struct Artifacts {
    root: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(root: &Path) -> crate::Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> crate::Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// `manifest.txt`: fingerprint, version and a checksum per artifact.
    fn finish(mut self, fingerprint: &str) -> crate::Result<()> {
        self.files.sort();
        let mut lines = vec![
            format!("fingerprint {fingerprint}"),
            format!("version musense {}", env!("CARGO_PKG_VERSION")),
        ];
        for rel in &self.files {
            let path = self.root.join(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            lines.push(format!(
                "sha256 {}  {rel}",
                hex::encode(Sha256::digest(&bytes))
            ));
        }
        let path = self.root.join("manifest.txt");
        fs::write(&path, lines.join("\n") + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Full pipeline for one configuration.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> crate::Result<RunSummary> {
    run_with_cache(cfg, out, &BaselineCache::new())
}

/// As [`cmd_run`], reusing baselines already in `cache`.
pub fn run_with_cache(
    cfg: &RunConfig,
    out: &Path,
    cache: &BaselineCache,
) -> crate::Result<RunSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let design = cfg.design()?;
    let search = cfg.search_config()?;
    let problem = Problem::build(design, cfg.cells_per_unit_cell)?;
    let fingerprint = problem.fingerprint(&search);
    log::info!(
        "{} tets, {} candidates, fingerprint {}",
        problem.mesh.tets.len(),
        problem.candidates.len(),
        &fingerprint[..12]
    );
    let before = cache.solves();
    let outcome = exhaustive_search(&problem, &search, cache)?;

    let mut art = Artifacts::new(out)?;
    let toml = cfg.to_toml();
    art.write("config.toml", |w| w.write_all(toml.as_bytes()))?;
    art.write("pressure.csv", |w| search.program.write_csv(w))?;
    art.write("nodes.txt", |w| problem.anchors.write_nodes_txt(w))?;
    art.write("candidates.csv", |w| write_manifest(&problem.candidates, w))?;
    art.write("mesh.tetmesh", |w| problem.mesh.write(w))?;
    art.write("trajectories/baseline.csv", |w| {
        outcome.baseline.write_csv(w)
    })?;
    let mut warnings = Vec::new();
    for o in &outcome.outcomes {
        let label = &o.row.label;
        if let Some(w) = &o.row.warning {
            warnings.push(w.clone());
        }
        if let Some(traj) = &o.trajectory {
            art.write(&format!("trajectories/{label}.csv"), |w| traj.write_csv(w))?;
        }
        if let Some(rep) = &o.report {
            art.write(&format!("heatmaps/{label}.csv"), |w| rep.write_heatmap(w))?;
            art.write(&format!("marginals/{label}_time.csv"), |w| {
                rep.write_time_marginal(w)
            })?;
            art.write(&format!("marginals/{label}_length.csv"), |w| {
                rep.write_length_marginal(w)
            })?;
        }
    }
    let column = format!("{:.2}x", cfg.scale);
    art.write("ranking.csv", |w| outcome.table.write_csv(w))?;
    art.write("table.csv", |w| {
        write_table(
            &[(column, Some(&outcome.table))],
            &problem.candidates_labels(),
            w,
        )
    })?;
    let optimum = outcome
        .outcomes
        .iter()
        .find(|o| o.row.label == outcome.table.optimum)
        .and_then(|o| o.report.as_ref());
    let svg = summary_svg(&outcome.outcomes, &outcome.table.optimum, optimum);
    art.write("summary.svg", |w| w.write_all(svg.as_bytes()))?;
    art.finish(&fingerprint)?;

    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        table: outcome.table,
        fingerprint,
        tets: problem.mesh.tets.len(),
        baseline_solves: cache.solves() - before,
        elapsed_s: started.elapsed().as_secs_f64(),
        warnings,
    })
}

impl Problem {
    fn candidates_labels(&self) -> Vec<String> {
        self.candidates.iter().map(|c| c.label.clone()).collect()
    }
}

/// Table layout: one row per sensor label in enumeration order, one
/// column per run, deviations in mm with 3 decimals.
pub fn write_table<W: Write>(
    columns: &[(String, Option<&RankingTable>)],
    labels: &[String],
    mut out: W,
) -> std::io::Result<()> {
    write!(out, "sensor")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for label in labels {
        write!(out, "{label}")?;
        for (_, table) in columns {
            match table.and_then(|t| t.get(label)).and_then(|r| r.j_hat) {
                Some(v) => write!(out, ",{v:.3}")?,
                None => write!(out, ",FAILED")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One column of a sweep.
#[derive(Debug, Clone)]
pub struct SweepColumn {
    pub name: String,
    pub dir: PathBuf,
    pub result: Result<RunSummary, String>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub columns: Vec<SweepColumn>,
    pub table_path: PathBuf,
}

/// Runs the pipeline once per scale (single finger, modulus by scale) and
/// optionally for the gripper preset at 1.0x, then writes `sweep.csv`.
/// A failing column is reported and the others still complete.
pub fn cmd_sweep(
    cfg: &RunConfig,
    scales: &[f64],
    gripper: bool,
    out: &Path,
) -> crate::Result<SweepSummary> {
    if scales.is_empty() && !gripper {
        return Err(ConfigError::Invalid {
            field: "scale",
            reason: "sweep needs at least one scale".into(),
        }
        .into());
    }
    let mut runs: Vec<(String, String, RunConfig)> = Vec::new();
    for &s in scales {
        let name = format!("{s:.2}x");
        runs.push((
            name.clone(),
            format!("scale_{name}"),
            RunConfig {
                scale: s,
                fingers: 1,
                e_lat_kpa: None,
                ..cfg.clone()
            },
        ));
    }
    if gripper {
        runs.push((
            "gripper".into(),
            "gripper".into(),
            RunConfig {
                scale: 1.0,
                fingers: 2,
                e_lat_kpa: None,
                ..cfg.clone()
            },
        ));
    }
    let cache = BaselineCache::new();
    let mut columns: Vec<SweepColumn> = Vec::new();
    for (name, mut dir_name, run_cfg) in runs {
        let taken = columns.iter().filter(|c| c.name == name).count();
        if taken > 0 {
            dir_name = format!("{dir_name}_{}", taken + 1);
        }
        let dir = out.join(&dir_name);
        let result = run_with_cache(&run_cfg, &dir, &cache).map_err(|e| {
            log::error!("sweep column {name} failed: {e}");
            e.to_string()
        });
        columns.push(SweepColumn { name, dir, result });
    }
    let labels = columns
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .map(|r| {
            let mut l: Vec<(usize, usize, String)> = r
                .table
                .rows
                .iter()
                .map(|row| (row.length, row.start_index, row.label.clone()))
                .collect();
            l.sort();
            l.into_iter().map(|x| x.2).collect::<Vec<_>>()
        })
        .max_by_key(Vec::len)
        .unwrap_or_default();
    let table_cols: Vec<(String, Option<&RankingTable>)> = columns
        .iter()
        .map(|c| (c.name.clone(), c.result.as_ref().ok().map(|r| &r.table)))
        .collect();
    let table_path = out.join("sweep.csv");
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let file = File::create(&table_path).map_err(|e| Error::io(&table_path, e))?;
    let mut w = BufWriter::new(file);
    write_table(&table_cols, &labels, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&table_path, e))?;
    Ok(SweepSummary {
        columns,
        table_path,
    })
}
