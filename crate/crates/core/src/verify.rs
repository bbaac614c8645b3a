//! Acceptance suites: each runs a fixed scenario and compares against oracle values.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{parabola_root, second_differences, levine_alpha, TimeSeries};
use crate::dynamics::{
    tune_amplitude, BlowupThresholds, GaussianProfile, InitialData, RunOutcome, SimConfig,
    Simulation, Termination, DEFAULT_MARGIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::grid::{make_grid, spectral_gradient, spectral_mass, ComplexField, Grid, RealField};
use crate::io::config::{
    ElectricSection, GridSection, InitialSection, MagneticSection, PotentialSection, RunConfigFile,
    TaperSection, TimeSection,
};
use crate::io::run_to_dir;
use crate::operators::{
    covariant_gradient_norm_sq, energy_schrodinger, DiscreteHamiltonian, Nonlinearity,
};
use crate::oracle::{fd_gradient_order, gauge_transform, random_smooth_field, TrigPolynomial};
use crate::potentials::{
    build_m, divergence_a, eval_a, eval_b, hypothesis_report, kato_norm, kato_threshold,
    sample_trapping, sample_v, strichartz_threshold, trapping_component, ElectricPotential,
    HypothesisParams, MagneticPotential, PotentialSpec, Taper,
};

pub const TOL_SCALE_ENV: &str = "MAGVIRIAL_TOL_SCALE";

pub const SUITES: [&str; 10] = [
    "calculus",
    "potentials",
    "conservation",
    "virial-free",
    "virial-nls",
    "blowup-nls",
    "blowup-wave",
    "gauge",
    "hypotheses",
    "determinism",
];

/// Detection factors for the blow-up scenarios. Collapse on a laptop-sized
/// lattice is arrested by the grid at roughly 5-10× the initial amplitude, so
/// the library defaults (1e3, 1e4) are out of reach there.
pub const RESOLVED_BLOWUP: BlowupThresholds = BlowupThresholds { sup_factor: 4.0, h1a_factor: 4.0 };

/// Growth of `‖u‖_{H¹_A}` that ends the pre-blow-up window of the virial comparison.
pub const PRE_BLOWUP_H1A_FACTOR: f64 = 1.5;

/// Multiplier applied to every numeric tolerance, read from `MAGVIRIAL_TOL_SCALE`.
pub fn tol_scale() -> Result<f64> {
    match std::env::var(TOL_SCALE_ENV) {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
            _ => Err(Error::Config(format!("{TOL_SCALE_ENV}={s:?} is not a non-negative number"))),
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    /// Threshold after scaling; `NaN` for pure pass/fail checks.
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: value={:e} limit={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.value,
            self.limit
        )
    }
}

/// One row of the residual-versus-resolution table.
#[derive(Clone, Debug, Serialize)]
pub struct ResolutionRow {
    pub points: usize,
    pub dt: f64,
    pub window_end: f64,
    pub max_residual: f64,
    pub max_energy_form_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub resolution_table: Vec<ResolutionRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Checks {
    criterion: u8,
    scale: f64,
    out: Vec<Check>,
}

impl Checks {
    fn new(criterion: u8, scale: f64) -> Self {
        Self { criterion, scale, out: Vec::new() }
    }

    fn push(&mut self, name: &str, value: f64, limit: f64, passed: bool) {
        self.out.push(Check { criterion: self.criterion, name: name.to_string(), value, limit, passed });
    }

    /// `value ≤ tol · scale`; NaN fails.
    fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        let limit = tol * self.scale;
        self.push(name, value, limit, value <= limit);
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, f64::NAN, ok);
    }

    /// Runtime limits are not scaled.
    fn runtime(&mut self, name: &str, start: Instant, secs: f64) {
        let t = start.elapsed().as_secs_f64();
        self.push(&format!("{name} runtime [s]"), t, secs, t < secs);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn gaussian(grid: &Grid, width_sq: f64) -> ComplexField {
    ComplexField::from_fn(grid, |x| Complex64::new((-x.iter().map(|t| t * t).sum::<f64>() / width_sq).exp(), 0.0))
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let scale = tol_scale()?;
    let mut table = Vec::new();
    let checks = match name {
        "calculus" => calculus(scale)?,
        "potentials" => potential_identities(scale)?,
        "conservation" => conservation(scale)?,
        "virial-free" => virial_free(scale)?,
        "virial-nls" => {
            let (c, t) = virial_nls(scale)?;
            table = t;
            c
        }
        "blowup-nls" => blowup_nls(scale)?,
        "blowup-wave" => blowup_wave(scale)?,
        "gauge" => gauge(scale)?,
        "hypotheses" => hypotheses(scale)?,
        "determinism" => determinism(scale)?,
        other => return Err(Error::Config(format!("unknown suite {other:?}; expected one of {SUITES:?} or \"all\""))),
    };
    Ok(SuiteReport { suite: name.to_string(), checks, resolution_table: table })
}

pub fn calculus(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(1, scale);
    let g2 = make_grid(2, 10.0, 128)?;
    let u = gaussian(&g2, 1.0);
    let spectral = spectral_gradient(&u);
    let fd = fd_gradient_order(&u, 16)?;
    let err = spectral
        .iter()
        .zip(&fd)
        .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max);
    c.at_most("spectral vs finite-difference gradient sup error", err, 1e-6);

    let g3 = make_grid(3, 10.0, 64)?;
    for (g, seed) in [(&g2, 1u64), (&g3, 2)] {
        let f = random_smooth_field(g, seed);
        c.at_most(&format!("Parseval relative gap n={}", g.dim()), rel(spectral_mass(&f), f.mass()), 1e-12);
    }
    for g in [&g2, &g3] {
        let n = g.dim() as f64;
        let q = RealField::from_fn(g, |x| (-x.iter().map(|t| t * t).sum::<f64>()).exp()).integral();
        c.at_most(&format!("quadrature of exp(-|x|^2) n={}", g.dim()), (q - PI.powf(n / 2.0)).abs(), 1e-10);
    }
    c.runtime("calculus", start, 10.0);
    Ok(c.out)
}

pub fn potential_identities(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(2, scale);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in [2usize, 3, 4] {
        let m = build_m(n)?;
        let spec = PotentialSpec::new(n, MagneticPotential::LinearM(m.clone()), ElectricPotential::Zero)?;
        let (mut b_err, mut orth, mut ident, mut div) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let b = eval_b(&spec, &x)?;
            for i in 0..n {
                for j in 0..n {
                    b_err = b_err.max((b.get(i, j) - m.get(i, j)).abs());
                }
            }
            let bt = trapping_component(&spec, &x)?;
            let a = eval_a(&spec, &x)?;
            let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
            orth = orth.max(bt.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>().abs());
            ident = ident.max(bt.iter().zip(&a).map(|(b, a)| (r * b + 2.0 * a).abs()).fold(0.0, f64::max));
            div = div.max(divergence_a(&spec, &x)?.abs());
        }
        c.at_most(&format!("n={n} max |B - M|"), b_err, 1e-12);
        c.at_most(&format!("n={n} max |B_tau . x|"), orth, 1e-12);
        c.at_most(&format!("n={n} max ||x| B_tau + 2A|"), ident, 1e-12);
        c.at_most(&format!("n={n} max |div A|"), div, 0.0);
    }
    let g = make_grid(3, 8.0, 64)?;
    for (label, family) in [
        ("singular_r2", MagneticPotential::SingularSpherical),
        ("singular_cyl", MagneticPotential::SingularCylindrical),
    ] {
        let spec = PotentialSpec::new(3, family, ElectricPotential::Zero)?.resolved_for(&g);
        let bt = sample_trapping(&spec, &g)?;
        c.at_most(&format!("{label} sup |B_tau| (eps = 2h)"), bt.sup_norm(), 1e-8);
    }
    c.runtime("potential identities", start, 5.0);
    Ok(c.out)
}

/// `A = ½ Ω x` tapered at `0.8R, 0.95R`, `V = strength / (1+|x|²)`.
pub fn magnetic_spec(dim: usize, extent: f64, strength: f64) -> Result<PotentialSpec> {
    Ok(PotentialSpec::new(
        dim,
        MagneticPotential::LinearM(build_m(dim)?),
        ElectricPotential::InverseQuadratic { strength },
    )?
    .with_taper(Some(Taper::for_extent(extent))))
}

fn max_drift(series: &TimeSeries, f: impl Fn(&crate::diagnostics::DiagnosticsRecord) -> f64) -> f64 {
    let f0 = f(&series.records[0]);
    series.records.iter().map(|r| rel(f(r), f0)).fold(0.0, f64::max)
}

pub fn conservation_nls_config() -> Result<SimConfig> {
    let mut cfg = SimConfig::schrodinger(magnetic_spec(2, 10.0, 1.0)?, 10.0, 128);
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.cadence = 10;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.0, 1.0));
    Ok(cfg)
}

pub fn conservation_wave_config() -> Result<SimConfig> {
    let mut cfg = SimConfig::wave(magnetic_spec(3, 8.0, 1.0)?, 8.0, 64);
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.cadence = 10;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(3, 1.0, 1.0));
    Ok(cfg)
}

pub fn conservation(scale: f64) -> Result<Vec<Check>> {
    let mut c = Checks::new(3, scale);
    let start = Instant::now();
    let out = Simulation::new(conservation_nls_config()?)?.run()?;
    c.holds("NLS run completed", out.report.termination == Termination::Completed);
    c.at_most("NLS relative mass drift", max_drift(&out.series, |r| r.mass), 1e-8);
    c.at_most("NLS relative energy drift", max_drift(&out.series, |r| r.energy), 1e-6);
    c.runtime("NLS conservation", start, 120.0);

    let start = Instant::now();
    let out = Simulation::new(conservation_wave_config()?)?.run()?;
    c.holds("wave run completed", out.report.termination == Termination::Completed);
    c.at_most("wave relative energy drift", max_drift(&out.series, |r| r.energy), 1e-6);
    c.runtime("wave conservation", start, 120.0);
    Ok(c.out)
}

pub fn virial_free_config() -> Result<SimConfig> {
    let mut cfg = SimConfig::schrodinger(PotentialSpec::zero(2)?, 12.0, 128);
    cfg.nonlinearity = Nonlinearity::linear(3.0);
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.cadence = 10;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.0, 1.0));
    Ok(cfg)
}

pub fn virial_free(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(4, scale);
    let out = Simulation::new(virial_free_config()?)?.run()?;
    let recs = &out.series.records;
    let q_err = recs.iter().map(|r| rel(r.q, PI * (1.0 + 4.0 * r.t * r.t))).fold(0.0, f64::max);
    c.at_most("Q(t) vs pi(1+4t^2), max relative error", q_err, 5e-3);
    let q: Vec<f64> = recs.iter().map(|r| r.q).collect();
    let d2 = second_differences(&out.series.times(), &q);
    let dd_err = d2.iter().flatten().map(|v| rel(*v, 8.0 * PI)).fold(0.0, f64::max);
    c.at_most("second-differenced Q vs 8 pi, max relative error", dd_err, 1e-2);
    let bd = recs.iter().map(|r| r.boundary_mass_fraction).fold(0.0, f64::max);
    c.at_most("boundary mass fraction", bd, 1e-8);
    c.runtime("free Gaussian virial", start, 60.0);
    Ok(c.out)
}

/// Focusing cubic NLS with `A = ½Ω₂x`, `V = 0.5/(1+|x|²)` and a tuned negative-energy Gaussian.
pub fn magnetic_blowup_config(points: usize, dt: f64, cadence: usize) -> Result<SimConfig> {
    let mut cfg = SimConfig::schrodinger(magnetic_spec(2, 10.0, 0.5)?, 10.0, points);
    cfg.dt = dt;
    cfg.cadence = cadence;
    cfg.blowup = RESOLVED_BLOWUP;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.0, 1.0));
    Ok(cfg)
}

pub fn free_blowup_config(points: usize, dt: f64, cadence: usize) -> Result<SimConfig> {
    let mut cfg = SimConfig::schrodinger(PotentialSpec::zero(2)?, 10.0, points);
    cfg.dt = dt;
    cfg.cadence = cadence;
    cfg.t_end = 4.0;
    cfg.blowup = RESOLVED_BLOWUP;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.0, 1.0));
    Ok(cfg)
}

/// Replaces the Gaussian amplitude by the tuned one (energy below `−10%` of the quadratic scale).
pub fn with_tuned_amplitude(mut cfg: SimConfig) -> Result<(SimConfig, f64)> {
    let tuned = tune_amplitude(&cfg, 0.5, 10.0, DEFAULT_MARGIN_FRACTION)?;
    if let InitialData::Gaussian(g) = &mut cfg.initial {
        g.amplitude = tuned.amplitude;
    }
    Ok((cfg, tuned.amplitude))
}

/// Largest residual over the records before `h1A` first exceeds the window factor.
pub fn pre_blowup_window(out: &RunOutcome) -> ResolutionRow {
    let recs = &out.series.records;
    let h0 = recs[0].h1a;
    let window: Vec<_> = recs.iter().take_while(|r| r.h1a <= PRE_BLOWUP_H1A_FACTOR * h0).collect();
    let max_residual = window.iter().filter_map(|r| r.virial_residual).fold(0.0, f64::max);
    let max_energy_form_gap = recs
        .iter()
        .filter_map(|r| r.nls_terms)
        .map(|t| (t.total - t.energy_form).abs() / t.total.abs().max(1.0))
        .fold(0.0, f64::max);
    ResolutionRow {
        points: out.series.meta.points,
        dt: out.series.meta.dt,
        window_end: window.last().map_or(0.0, |r| r.t),
        max_residual,
        max_energy_form_gap,
    }
}

pub fn virial_nls(scale: f64) -> Result<(Vec<Check>, Vec<ResolutionRow>)> {
    let start = Instant::now();
    let mut c = Checks::new(5, scale);
    let (coarse, amplitude) = with_tuned_amplitude(magnetic_blowup_config(128, 1e-3, 10)?)?;
    let mut fine = magnetic_blowup_config(256, 5e-4, 20)?;
    fine.initial = coarse.initial.clone();
    let mut rows = Vec::new();
    let mut e0 = 0.0;
    for mut cfg in [coarse, fine] {
        cfg.t_end = 0.4;
        let out = Simulation::new(cfg)?.run()?;
        e0 = out.series.records[0].energy;
        rows.push(pre_blowup_window(&out));
    }
    c.holds(&format!("negative initial energy (a = {amplitude:.6}, E = {e0:.6})"), e0 < 0.0);
    let (r128, r256) = (&rows[0], &rows[1]);
    c.at_most("N=256 max virial residual over pre-blow-up window", r256.max_residual, 1e-3);
    c.at_most(
        "N=256 / N=128 residual ratio",
        r256.max_residual / r128.max_residual.max(f64::MIN_POSITIVE),
        0.5,
    );
    for r in &rows {
        c.at_most(&format!("N={} energy-form identity gap", r.points), r.max_energy_form_gap, 1e-9);
    }
    c.runtime("magnetic virial", start, 300.0);
    Ok((c.out, rows))
}

fn q_nonnegative(out: &RunOutcome) -> bool {
    out.series.records.iter().all(|r| r.q >= 0.0)
}

pub fn blowup_nls(scale: f64) -> Result<Vec<Check>> {
    let mut c = Checks::new(6, scale);

    let start = Instant::now();
    let (cfg, _) = with_tuned_amplitude(free_blowup_config(256, 5e-4, 20)?)?;
    let out = Simulation::new(cfg)?.run()?;
    let r0 = &out.series.records[0];
    c.holds("free: negative initial energy", r0.energy < 0.0);
    let detected = out.report.termination.detection_time();
    c.holds("free: detector fires", detected.is_some());
    let root = parabola_root(16.0 * r0.energy, r0.q_dot.unwrap_or(0.0), r0.q).unwrap_or(f64::NAN);
    let t = detected.unwrap_or(f64::INFINITY);
    c.push("free: detection time vs 1.1 x root of 16E t^2 + Qdot t + Q", t, 1.1 * root, t <= 1.1 * root);
    c.holds("free: Q >= 0 throughout", q_nonnegative(&out));
    c.runtime("free blow-up", start, 300.0);

    let start = Instant::now();
    let (mut cfg, _) = with_tuned_amplitude(magnetic_blowup_config(256, 5e-4, 20)?)?;
    cfg.t_end = 4.0;
    let grid = make_grid(2, cfg.extent, cfg.points)?;
    let report = hypothesis_report(&cfg.potential, &grid, HypothesisParams::default())?;
    c.holds("magnetic: V + r V_r / 2 >= 0", report.virial_condition.passed);
    let out = Simulation::new(cfg)?.run()?;
    c.holds("magnetic: negative initial energy", out.series.records[0].energy < 0.0);
    c.holds("magnetic: detector fires", out.report.termination.detection_time().is_some());
    c.holds("magnetic: Q >= 0 throughout", q_nonnegative(&out));
    c.runtime("magnetic blow-up", start, 300.0);

    // Same thresholds on positive-energy, subcritical-mass data must not fire.
    let mut cfg = free_blowup_config(128, 1e-3, 10)?;
    cfg.t_end = 1.5;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.5, 1.0));
    let out = Simulation::new(cfg)?.run()?;
    c.holds("control: positive-energy data complete without detection", out.report.termination == Termination::Completed);
    Ok(c.out)
}

pub fn wave_blowup_config() -> Result<SimConfig> {
    let mut cfg = SimConfig::wave(magnetic_spec(3, 8.0, 0.3)?, 8.0, 64);
    cfg.dt = 1e-2;
    cfg.t_end = 6.0;
    cfg.cadence = 5;
    cfg.blowup = RESOLVED_BLOWUP;
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(3, 1.0, 1.0));
    Ok(cfg)
}

pub fn blowup_wave(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(7, scale);
    let (cfg, _) = with_tuned_amplitude(wave_blowup_config()?)?;
    let p = cfg.nonlinearity.exponent;
    let alpha = levine_alpha(p);
    c.push("alpha = (p-1)/4", alpha, 0.5, alpha == 0.5);
    let grid = make_grid(3, cfg.extent, cfg.points)?;
    c.holds("V >= 0", sample_v(&cfg.potential, &grid)?.values().iter().all(|v| *v >= 0.0));
    let out = Simulation::new(cfg)?.run()?;
    let recs = &out.series.records;
    let e0 = recs[0].energy;
    c.holds("negative initial energy", e0 < 0.0);
    let lev: Vec<_> = recs.iter().filter_map(|r| r.levine).collect();
    let hscale = ((p + 1.0) * e0).abs().max(1.0);
    let h_gap = lev.iter().map(|l| -(l.hfun + (p + 1.0) * e0)).fold(f64::NEG_INFINITY, f64::max);
    c.at_most("max of -(Hfun + (p+1) E_W(0)) / scale", h_gap / hscale, 1e-6);
    let fp: Vec<f64> = lev.iter().map(|l| l.f.powf(-alpha)).collect();
    let d2 = (1..fp.len() - 1).map(|i| fp[i + 1] - 2.0 * fp[i] + fp[i - 1]).fold(f64::NEG_INFINITY, f64::max);
    c.at_most("max second difference of F^-alpha / |F^-alpha(0)|", d2 / fp[0].abs(), 1e-6);
    let t_bound = lev[0].f / (alpha * lev[0].f_dot);
    let t = out.report.termination.detection_time().unwrap_or(f64::INFINITY);
    c.push("detection time vs 1.1 F(0)/(alpha F'(0))", t, 1.1 * t_bound, t <= 1.1 * t_bound);
    c.runtime("wave blow-up", start, 300.0);
    Ok(c.out)
}

pub fn gauge(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(8, scale);
    let grid = make_grid(2, 8.0, 64)?;
    let spec = magnetic_spec(2, 8.0, 1.0)?;
    let h = DiscreteHamiltonian::new(&spec, &grid)?;
    let nl = Nonlinearity::focusing(3.0);
    let mut worst = [0.0f64; 4];
    for seed in 0..4u64 {
        let u = random_smooth_field(&grid, 100 + seed);
        let psi = TrigPolynomial::random(2, 2, 12.0, 200 + seed);
        let (u2, a2) = gauge_transform(&u, h.magnetic_potential(), &psi)?;
        let spec2 = PotentialSpec::new(2, MagneticPotential::Sampled(a2), ElectricPotential::InverseQuadratic { strength: 1.0 })?;
        let h2 = DiscreteHamiltonian::new(&spec2, &grid)?;
        let modulus = u
            .values()
            .iter()
            .zip(u2.values())
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
            / u.sup_norm();
        let vals = [
            rel(u2.mass(), u.mass()),
            rel(energy_schrodinger(&u2, &h2, &nl)?, energy_schrodinger(&u, &h, &nl)?),
            rel(covariant_gradient_norm_sq(&u2, &h2)?.sqrt(), covariant_gradient_norm_sq(&u, &h)?.sqrt()),
            modulus,
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    c.at_most("mass relative change", worst[0], 1e-9);
    c.at_most("energy relative change", worst[1], 1e-9);
    c.at_most("covariant gradient norm relative change", worst[2], 1e-9);
    c.at_most("pointwise |u| relative change", worst[3], 1e-9);
    c.runtime("gauge covariance", start, 10.0);
    Ok(c.out)
}

/// `|S²| ∫₀^r s V(s) ds` by composite Simpson, the Kato norm of a radial
/// decreasing `|V|` (attained at the origin) in three dimensions.
pub fn kato_radial_quadrature(v: impl Fn(f64) -> f64, radius: f64) -> f64 {
    let m = 4000;
    let step = radius / m as f64;
    let mut s = 0.0;
    for i in 0..=m {
        let r = i as f64 * step;
        let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * r * v(r);
    }
    4.0 * PI * s * step / 3.0
}

pub fn hypotheses(scale: f64) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut c = Checks::new(9, scale);
    for (n, expect) in [(4usize, 2.0), (5, 16.0 / 3.0), (6, 10.0)] {
        let t = strichartz_threshold(n);
        c.push(&format!("threshold n={n}"), t, expect, t == expect);
    }
    let g4 = make_grid(4, 4.0, 16)?;
    let rep = hypothesis_report(&PotentialSpec::zero(4)?, &g4, HypothesisParams::default())?;
    let rhs = rep.schrodinger_smallness.map_or(f64::NAN, |s| s.rhs);
    c.push("n=4 report right-hand side", rhs, 2.0, rhs == 2.0);

    // V = −c/(1+|x|²) calibrated so its Kato norm is 1.5× the n = 3 threshold.
    let g = make_grid(3, 8.0, 64)?;
    let radius = 2.0;
    let threshold = kato_threshold(3)?;
    let unit = kato_radial_quadrature(|s| 1.0 / (1.0 + s * s), radius);
    let strength = 1.5 * threshold / unit;
    let spec = PotentialSpec::new(3, MagneticPotential::Zero, ElectricPotential::InverseQuadratic { strength: -strength })?;
    let v = sample_v(&spec, &g)?;
    let vminus = RealField::from_values(&g, v.values().iter().map(|x| (-x).max(0.0)).collect())?;
    let discrete = kato_norm(&vminus, radius)?;
    let oracle = strength * unit;
    c.at_most("Kato norm vs radial quadrature, relative gap", rel(discrete, oracle), 0.1);
    let rep = hypothesis_report(&spec, &g, HypothesisParams { strichartz_m: 1.0, kato_radius: Some(radius) })?;
    c.holds("calibrated bump fails the Kato check", rep.kato.is_some_and(|k| !k.passed));

    let g3 = make_grid(3, 8.0, 32)?;
    let specs = [
        ("singular_r2", PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero)?, &g3),
        ("singular_cyl", PotentialSpec::new(3, MagneticPotential::SingularCylindrical, ElectricPotential::Zero)?, &g3),
        ("zero n=3", PotentialSpec::zero(3)?, &g3),
        ("zero n=4", PotentialSpec::zero(4)?, &g4),
    ];
    for (label, spec, grid) in specs {
        let rep = hypothesis_report(&spec, grid, HypothesisParams::default())?;
        let tests = [rep.schrodinger_smallness, rep.wave_smallness];
        let ok = tests.iter().all(|t| t.is_some_and(|t| t.passed));
        c.holds(&format!("{label}: every smallness test passes"), ok);
    }
    c.runtime("hypotheses", start, 30.0);
    Ok(c.out)
}

/// Small magnetic run with seeded random initial data.
pub fn determinism_config(seed: u64) -> RunConfigFile {
    RunConfigFile {
        equation: crate::dynamics::Equation::Schrodinger,
        dim: 2,
        exponent: 3.0,
        coupling: 1.0,
        grid: GridSection { extent: 8.0, points: 32 },
        time: TimeSection { dt: 2e-3, t_end: 0.2, cadence: 5, dealias: true },
        potential: PotentialSection {
            magnetic: MagneticSection::Linear { strength: 1.0 },
            electric: ElectricSection::InverseQuadratic { strength: 1.0 },
            taper: TaperSection::Keyword("auto".into()),
            regularization: None,
        },
        initial: InitialSection::Random { amplitude: 1.0 },
        monitor: Default::default(),
        hypotheses: Default::default(),
        output: Default::default(),
        seed,
        scan: None,
    }
}

pub fn determinism(scale: f64) -> Result<Vec<Check>> {
    let mut c = Checks::new(10, scale);
    let base = std::env::temp_dir().join(format!("magvirial-determinism-{}", std::process::id()));
    let cfg = determinism_config(7);
    let read = |dir: &std::path::Path| -> Result<(Vec<u8>, Vec<u8>)> {
        Ok((std::fs::read(dir.join("series.csv"))?, std::fs::read(dir.join("summary.json"))?))
    };
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = base.join(k.to_string());
        run_to_dir(&cfg, &dir)?;
        outputs.push(read(&dir)?);
    }
    let other = base.join("other-seed");
    run_to_dir(&determinism_config(8), &other)?;
    let different = read(&other)?;
    std::fs::remove_dir_all(&base)?;
    c.holds("series.csv byte-identical across runs", outputs[0].0 == outputs[1].0);
    c.holds("summary.json byte-identical across runs", outputs[0].1 == outputs[1].1);
    c.holds("a different seed changes the series", outputs[0].0 != different.0);
    Ok(c.out)
}
