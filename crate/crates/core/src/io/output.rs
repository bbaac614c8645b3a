//! Series and summary files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{
    levine_diagnostics, quadratic_bound_check, DiagnosticsRecord, LevineReport, QuadraticBound,
    TimeSeries,
};
use crate::dynamics::{Equation, RunOutcome, TerminationReport, TunedAmplitude};
use crate::error::Result;
use crate::io::config::RunConfigFile;
use crate::operators::DiscreteHamiltonian;
use crate::potentials::AssumptionReport;

pub const SERIES_COLUMNS: [&str; 13] = [
    "t",
    "mass",
    "energy",
    "Q",
    "Qdot",
    "Qddot_rhs",
    "virial_residual",
    "sup_norm",
    "h1A",
    "boundary_mass_frac",
    "F",
    "Fdot",
    "Hfun",
];

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn series_row(r: &DiagnosticsRecord) -> [String; 13] {
    [
        fmt_float(r.t),
        fmt_float(r.mass),
        fmt_float(r.energy),
        fmt_float(r.q),
        fmt_opt(r.q_dot),
        fmt_float(r.q_ddot_rhs),
        fmt_opt(r.virial_residual),
        fmt_float(r.sup_norm),
        fmt_float(r.h1a),
        fmt_float(r.boundary_mass_fraction),
        fmt_opt(r.levine.map(|l| l.f)),
        fmt_opt(r.levine.map(|l| l.f_dot)),
        fmt_opt(r.levine.map(|l| l.hfun)),
    ]
}

pub fn write_series_csv<W: Write>(series: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS).map_err(csv_err)?;
    for r in &series.records {
        w.write_record(series_row(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Bounds {
    /// `Q ≤ 16 E₀ t² + Q̇₀ t + Q₀`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic_16: Option<QuadraticBound>,
    /// `Q ≤ 8 E₀ t² + Q̇₀ t + Q₀`, the coefficient that integrating the virial identity gives.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic_8: Option<QuadraticBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concavity: Option<LevineReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub software_version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub equation: Equation,
    pub termination: &'static str,
    pub t_detect: Option<f64>,
    pub grid: GridSummary,
    pub regularization: f64,
    pub taper: Option<(f64, f64)>,
    pub dt: f64,
    pub exponent: f64,
    pub coupling: f64,
    pub initial_energy: Option<f64>,
    pub initial_mass: Option<f64>,
    pub tuned_amplitude: Option<TunedAmplitude>,
    pub report: TerminationReport,
    pub bounds: Bounds,
    pub assumptions: Option<AssumptionReport>,
    pub config: RunConfigFile,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative slack on the parabola checks.
const BOUND_SLACK: f64 = 1e-6;

pub fn bounds_for(outcome: &RunOutcome, h: &DiscreteHamiltonian, exponent: f64) -> Result<Bounds> {
    let series = &outcome.series;
    let Some(r0) = series.records.first() else {
        return Ok(Bounds::default());
    };
    match series.meta.equation {
        Equation::Schrodinger => {
            let trapping_free = h.trapping().sup_norm() == 0.0;
            let q_dot0 = r0.q_dot.unwrap_or(0.0);
            let slack = BOUND_SLACK * r0.q.abs().max(1.0);
            let check = |c| quadratic_bound_check(series, r0.energy, q_dot0, r0.q, c, trapping_free, slack);
            Ok(Bounds { quadratic_16: Some(check(16.0)), quadratic_8: Some(check(8.0)), concavity: None })
        }
        Equation::Wave => {
            let tol = 1e-6 * r0.energy.abs().max(1.0);
            Ok(Bounds { concavity: Some(levine_diagnostics(series, exponent, tol)?), ..Bounds::default() })
        }
    }
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
