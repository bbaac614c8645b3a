//! Parameter sweeps over a base configuration.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ElectricSection, InitialSection, MagneticSection, RunConfigFile, ScanSection};
use super::output::{fmt_float, RunSummary};
use super::execute;
use crate::error::{Error, Result};

/// Parameter values of one grid point; `None` keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScanPoint {
    pub amplitude: Option<f64>,
    pub exponent: Option<f64>,
    pub electric_strength: Option<f64>,
    pub magnetic_strength: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub point: ScanPoint,
    pub summary: RunSummary,
}

fn axis(values: &Option<Vec<f64>>) -> Result<Vec<Option<f64>>> {
    match values {
        None => Ok(vec![None]),
        Some(v) if v.is_empty() => Err(Error::Config("scan axis has no values".into())),
        Some(v) => Ok(v.iter().copied().map(Some).collect()),
    }
}

/// Cartesian product of the present axes, last axis fastest.
pub fn expand(scan: &ScanSection) -> Result<Vec<ScanPoint>> {
    let any = [&scan.amplitude, &scan.exponent, &scan.electric_strength, &scan.magnetic_strength]
        .iter()
        .any(|a| a.is_some());
    if !any {
        return Err(Error::Config("scan grid is empty".into()));
    }
    let mut points = Vec::new();
    for a in axis(&scan.amplitude)? {
        for p in axis(&scan.exponent)? {
            for e in axis(&scan.electric_strength)? {
                for m in axis(&scan.magnetic_strength)? {
                    points.push(ScanPoint { amplitude: a, exponent: p, electric_strength: e, magnetic_strength: m });
                }
            }
        }
    }
    Ok(points)
}

/// Base config with one grid point applied. Setting an amplitude disables tuning.
pub fn apply(base: &RunConfigFile, point: &ScanPoint) -> Result<RunConfigFile> {
    let mut cfg = base.clone();
    cfg.scan = None;
    if let Some(a) = point.amplitude {
        match &mut cfg.initial {
            InitialSection::Gaussian { amplitude, tune, .. } => {
                *amplitude = a;
                *tune = None;
            }
            InitialSection::Random { amplitude } => *amplitude = a,
            InitialSection::Zero => return Err(Error::Config("amplitude scan needs non-zero initial data".into())),
        }
    }
    if let Some(p) = point.exponent {
        cfg.exponent = p;
    }
    if let Some(s) = point.electric_strength {
        cfg.potential.electric = ElectricSection::InverseQuadratic { strength: s };
    }
    if let Some(s) = point.magnetic_strength {
        match &mut cfg.potential.magnetic {
            MagneticSection::Linear { strength } => *strength = s,
            MagneticSection::Zero => cfg.potential.magnetic = MagneticSection::Linear { strength: s },
            _ => return Err(Error::Config("magnetic strength scan needs the linear family".into())),
        }
    }
    Ok(cfg)
}

/// Runs every grid point on the current rayon pool; rows come back in grid order.
pub fn run_scan(base: &RunConfigFile) -> Result<Vec<ScanRow>> {
    let scan = base.scan.as_ref().ok_or_else(|| Error::Config("config has no scan section".into()))?;
    let points = expand(scan)?;
    let configs: Vec<RunConfigFile> = points.iter().map(|p| apply(base, p)).collect::<Result<_>>()?;
    configs
        .par_iter()
        .zip(points.par_iter())
        .enumerate()
        .map(|(index, (cfg, point))| {
            let art = execute(cfg)?;
            Ok(ScanRow { index, point: point.clone(), summary: art.summary })
        })
        .collect()
}

pub const SCAN_COLUMNS: [&str; 11] = [
    "index",
    "amplitude",
    "exponent",
    "electric_strength",
    "magnetic_strength",
    "initial_energy",
    "initial_mass",
    "termination",
    "t_detect",
    "t_final",
    "max_boundary_frac",
];

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(SCAN_COLUMNS).map_err(wrap)?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.index.to_string(),
            opt(r.point.amplitude),
            opt(r.point.exponent),
            opt(r.point.electric_strength),
            opt(r.point.magnetic_strength),
            opt(s.initial_energy),
            opt(s.initial_mass),
            s.termination.to_string(),
            opt(s.t_detect),
            fmt_float(s.report.t_final),
            fmt_float(s.report.max_boundary_fraction),
        ])
        .map_err(wrap)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `scan.csv` and `scan.json` into `out_dir`.
pub fn write_scan(rows: &[ScanRow], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_scan_csv(rows, std::fs::File::create(out_dir.join("scan.csv"))?)?;
    let mut text = serde_json::to_string_pretty(rows)?;
    text.push('\n');
    std::fs::write(out_dir.join("scan.json"), text)?;
    Ok(())
}
