//! `musense`: run, validate or sweep a sensor placement search.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use musense::report::{cmd_run, cmd_sweep, cmd_validate, RunConfig};

#[derive(Parser)]
#[command(
    name = "musense",
    version,
    about = "Exhaustive sensor placement search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Baseline, every candidate, ranking and all artifacts.
    Run(Common),
    /// Check the configuration and preview the work without solving.
    Validate(Common),
    /// One full run per scale (and the gripper preset), combined into a table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Add the two-finger gripper column.
        #[arg(long)]
        gripper: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "musense-out")]
    out: PathBuf,
    /// Worker threads for candidate solves (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Time samples.
    #[arg(long)]
    k: Option<usize>,
    /// Arc-length samples.
    #[arg(long)]
    j: Option<usize>,
    /// Design scale; repeat or comma-separate for `sweep`.
    #[arg(long, value_delimiter = ',')]
    scale: Vec<f64>,
}

impl Common {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(k) = self.k {
            cfg.time_samples = k;
        }
        if let Some(j) = self.j {
            cfg.length_samples = j;
        }
        Ok(cfg)
    }

    fn single(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = self.load()?;
        match self.scale.as_slice() {
            [] => {}
            [s] => cfg.scale = *s,
            _ => anyhow::bail!("`--scale` takes a single value except with `sweep`"),
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate(c) => {
            let report = cmd_validate(&c.single()?)?;
            println!("{report}");
        }
        Command::Run(c) => {
            let cfg = c.single()?;
            let summary = cmd_run(&cfg, &c.out)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            let best = summary.table.optimum_row();
            println!(
                "optimum {} (i = {}, h = {}): J = {:.6} mm",
                best.label,
                best.start_index,
                best.length,
                best.j_hat.unwrap_or(f64::NAN)
            );
            if summary.table.failed() > 0 {
                eprintln!(
                    "warning: {} candidates FAILED, ranking is partial",
                    summary.table.failed()
                );
            }
            println!(
                "{} tets, {:.1} s, artifacts in {}",
                summary.tets,
                summary.elapsed_s,
                display(&summary.out_dir)
            );
        }
        Command::Sweep { common, gripper } => {
            let cfg = common.load()?;
            let scales = if common.scale.is_empty() && !gripper {
                vec![cfg.scale]
            } else {
                common.scale.clone()
            };
            let summary = cmd_sweep(&cfg, &scales, gripper, &common.out)?;
            let mut failed = 0;
            for col in &summary.columns {
                match &col.result {
                    Ok(r) => println!("{}: optimum {}", col.name, r.table.optimum),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: FAILED: {e}", col.name);
                    }
                }
            }
            println!("table in {}", display(&summary.table_path));
            if failed == summary.columns.len() {
                anyhow::bail!("every sweep column failed");
            }
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
