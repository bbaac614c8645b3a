//! Configuration files, result files and the command implementations behind the CLI.

pub mod config;
pub mod output;
pub mod scan;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::dynamics::{RunOutcome, Simulation};
use crate::error::{Error, Result};
use crate::potentials::{hypothesis_report, AssumptionReport};

use config::RunConfigFile;
use output::{bounds_for, write_series_csv, write_summary, GridSummary, RunSummary, VERSION};

/// Outcome of a run together with its summary.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub outcome: RunOutcome,
    pub summary: RunSummary,
}

/// Reads and parses a config file. Unreadable files count as configuration errors.
pub fn load_config(path: &Path) -> Result<RunConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfigFile::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
        other => other,
    })
}

/// Assumption report on the run grid; `None` when the dimension has no such report.
fn assumptions_for(cfg: &RunConfigFile) -> Result<Option<AssumptionReport>> {
    let grid = cfg.make_grid()?;
    let spec = cfg.potential_spec()?;
    match hypothesis_report(&spec, &grid, cfg.hypothesis_params()) {
        Ok(r) => Ok(Some(r)),
        Err(Error::InvalidPotential(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs a configuration in memory.
pub fn execute(cfg: &RunConfigFile) -> Result<RunArtifacts> {
    let prepared = cfg.prepare()?;
    let sim = Simulation::new(prepared.sim)?;
    let mut outcome = sim.run()?;
    let hash = cfg.hash();
    outcome.series.meta.config_hash = Some(hash.clone());
    let grid = sim.grid();
    let r0 = outcome.series.records.first();
    let summary = RunSummary {
        software_version: VERSION,
        config_hash: hash,
        seed: cfg.seed,
        equation: cfg.equation,
        termination: outcome.report.termination.label(),
        t_detect: outcome.report.termination.detection_time(),
        grid: GridSummary {
            dim: grid.dim(),
            extent: grid.extent(),
            points: grid.points_per_axis(),
            spacing: grid.spacing(),
        },
        regularization: outcome.series.meta.regularization,
        taper: outcome.series.meta.taper,
        dt: cfg.time.dt,
        exponent: cfg.exponent,
        coupling: cfg.coupling,
        initial_energy: r0.map(|r| r.energy),
        initial_mass: r0.map(|r| r.mass),
        tuned_amplitude: prepared.tuned,
        bounds: bounds_for(&outcome, sim.hamiltonian(), cfg.exponent)?,
        report: outcome.report.clone(),
        assumptions: assumptions_for(cfg)?,
        config: cfg.clone(),
    };
    Ok(RunArtifacts { outcome, summary })
}

/// Runs a configuration and writes `series.csv` and `summary.json` into `out_dir`.
pub fn run_to_dir(cfg: &RunConfigFile, out_dir: &Path) -> Result<RunArtifacts> {
    let artifacts = execute(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let file = BufWriter::new(File::create(out_dir.join("series.csv"))?);
    write_series_csv(&artifacts.outcome.series, file)?;
    write_summary(&artifacts.summary, &out_dir.join("summary.json"))?;
    Ok(artifacts)
}

/// Hypothesis report for the potential and grid of a config.
pub fn hypotheses(cfg: &RunConfigFile) -> Result<AssumptionReport> {
    let grid = cfg.make_grid()?;
    let spec = cfg.potential_spec()?;
    hypothesis_report(&spec, &grid, cfg.hypothesis_params())
}

/// Process exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::GridMismatch => 1,
        _ => 2,
    }
}
