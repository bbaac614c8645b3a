//! Method-of-lines time integration (classical RK4) of the focusing magnetic
//! Schrödinger and wave equations, with blow-up detection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, SeriesMeta, TimeSeries};
use crate::error::{Error, Result};
use crate::grid::{dealias_spectrum, gradient_from_spectrum, make_grid, ComplexField, Grid};
use crate::operators::{
    covariant_gradient_norm_sq, energy_schrodinger, energy_wave, h1a_norm, potential_integral,
    DiscreteHamiltonian, Nonlinearity,
};
use crate::potentials::PotentialSpec;

/// Largest dimension the time stepper accepts.
pub const MAX_DYNAMIC_DIM: usize = 3;

/// Bound on `dt · λ_max` for the Schrödinger flow and `dt · √λ_max` for the wave flow.
/// RK4 is stable on the imaginary axis up to `2√2`.
pub const STABILITY_LIMIT: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Schrodinger,
    Wave,
}

/// `a exp(−|x−x₀|²/(2σ²)) exp(i ξ·x + i β|x−x₀|²)`; wave data use `g = ratio · f`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub velocity: Vec<f64>,
    pub chirp: f64,
    pub wave_velocity_ratio: f64,
}

impl GaussianProfile {
    pub fn centered(dim: usize, amplitude: f64, width: f64) -> Self {
        Self {
            amplitude,
            width,
            center: vec![0.0; dim],
            velocity: vec![0.0; dim],
            chirp: 0.0,
            wave_velocity_ratio: 0.2,
        }
    }

    pub fn sample(&self, grid: &Grid) -> ComplexField {
        let s2 = 2.0 * self.width * self.width;
        ComplexField::from_fn(grid, |x| {
            let mut d2 = 0.0;
            let mut phase = 0.0;
            for (j, xj) in x.iter().enumerate() {
                let d = xj - self.center[j];
                d2 += d * d;
                phase += self.velocity[j] * xj;
            }
            phase += self.chirp * d2;
            Complex64::from_polar(self.amplitude * (-d2 / s2).exp(), phase)
        })
    }
}

#[derive(Clone, Debug)]
pub enum InitialData {
    Zero,
    Gaussian(GaussianProfile),
    /// Explicit samples; `v` is required for the wave equation.
    Fields { u: ComplexField, v: Option<ComplexField> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupThresholds {
    pub sup_factor: f64,
    pub h1a_factor: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self { sup_factor: 1e3, h1a_factor: 1e4 }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub equation: Equation,
    pub dim: usize,
    pub nonlinearity: Nonlinearity,
    pub potential: PotentialSpec,
    pub extent: f64,
    pub points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub blowup: BlowupThresholds,
    pub boundary_warn: f64,
    pub initial: InitialData,
    pub cadence: usize,
}

impl SimConfig {
    /// Focusing cubic Schrödinger run with default monitoring settings.
    pub fn schrodinger(potential: PotentialSpec, extent: f64, points: usize) -> Self {
        Self {
            equation: Equation::Schrodinger,
            dim: potential.dim(),
            nonlinearity: Nonlinearity::focusing(3.0),
            potential,
            extent,
            points,
            dt: 1e-3,
            t_end: 1.0,
            dealias: true,
            blowup: BlowupThresholds::default(),
            boundary_warn: 1e-6,
            initial: InitialData::Zero,
            cadence: 10,
        }
    }

    pub fn wave(potential: PotentialSpec, extent: f64, points: usize) -> Self {
        Self { equation: Equation::Wave, ..Self::schrodinger(potential, extent, points) }
    }

    /// `1 + 4/(n−2)`, infinite for `n = 2`.
    pub fn energy_critical_exponent(&self) -> f64 {
        if self.dim <= 2 {
            f64::INFINITY
        } else {
            1.0 + 4.0 / (self.dim as f64 - 2.0)
        }
    }

    /// True when `p ≥ 1 + 4/n` (mass-critical or supercritical).
    pub fn mass_critical_or_above(&self) -> bool {
        self.nonlinearity.exponent >= 1.0 + 4.0 / self.dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.nonlinearity.exponent;
        if self.dim < 2 || self.dim > MAX_DYNAMIC_DIM {
            return Err(Error::Config(format!(
                "time stepping supports dimensions 2..={MAX_DYNAMIC_DIM}, got {}",
                self.dim
            )));
        }
        if self.potential.dim() != self.dim {
            return Err(Error::Config("potential dimension does not match run dimension".into()));
        }
        if self.equation == Equation::Wave && self.dim < 3 {
            return Err(Error::Config("the wave equation requires n >= 3".into()));
        }
        if !(p > 1.0 && p < self.energy_critical_exponent()) {
            return Err(Error::Config(format!(
                "exponent {p} outside the energy-subcritical range (1, {})",
                self.energy_critical_exponent()
            )));
        }
        if !self.nonlinearity.coupling.is_finite() || self.nonlinearity.coupling < 0.0 {
            return Err(Error::Config("coupling must be finite and >= 0".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end {} must be >= 0", self.t_end)));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be >= 1".into()));
        }
        if !(self.blowup.sup_factor > 1.0 && self.blowup.h1a_factor > 1.0) {
            return Err(Error::Config("blow-up factors must exceed 1".into()));
        }
        if !(self.boundary_warn >= 0.0) {
            return Err(Error::Config("boundary warning level must be >= 0".into()));
        }
        if let InitialData::Gaussian(g) = &self.initial {
            if g.center.len() != self.dim || g.velocity.len() != self.dim {
                return Err(Error::Config("Gaussian center/velocity dimension mismatch".into()));
            }
            if !(g.width > 0.0) || !g.amplitude.is_finite() {
                return Err(Error::Config("Gaussian width must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Evolving state. `v` holds `u_t` for the wave equation.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub u: ComplexField,
    pub v: Option<ComplexField>,
    pub diverged: bool,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.as_ref().map_or(true, |v| v.is_finite())
    }
}

fn hamiltonian_minus_nonlinear(
    u: &ComplexField,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
    dealias: bool,
) -> ComplexField {
    let grid = h.grid();
    let s = u.spectrum();
    let mut lin: Vec<Complex64> = s.iter().zip(h.k_sq()).map(|(c, k2)| c * k2).collect();
    if !nl.is_linear() {
        let mut ns = nl.apply(u).spectrum();
        if dealias {
            dealias_spectrum(grid, &mut ns);
        }
        for (l, n) in lin.iter_mut().zip(&ns) {
            *l -= n;
        }
    }
    let mut out = ComplexField::from_spectrum(grid, lin);
    let grad = h.has_magnetic().then(|| gradient_from_spectrum(grid, &s));
    h.add_pointwise_terms(u.values(), grad.as_deref(), out.values_mut());
    out
}

/// `u_t = −i (H u − c|u|^{p−1}u)`, nonlinearity optionally projected by the 2/3 rule.
pub fn nls_rhs(u: &ComplexField, h: &DiscreteHamiltonian, nl: &Nonlinearity, dealias: bool) -> Result<ComplexField> {
    if u.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let out = hamiltonian_minus_nonlinear(u, h, nl, dealias);
    Ok(out.map(|z| Complex64::new(z.im, -z.re)))
}

/// `(u_t, v_t) = (v, −H u + c|u|^{p−1}u)`.
pub fn nlw_rhs(
    u: &ComplexField,
    v: &ComplexField,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
    dealias: bool,
) -> Result<(ComplexField, ComplexField)> {
    if u.grid() != h.grid() || v.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let out = hamiltonian_minus_nonlinear(u, h, nl, dealias);
    Ok((v.clone(), out.map(|z| -z)))
}

fn combine(base: &ComplexField, dt: f64, k: &ComplexField) -> ComplexField {
    base.add_scaled(Complex64::new(dt, 0.0), k)
}

fn rk4_sum(base: &ComplexField, dt: f64, k: [&ComplexField; 4]) -> ComplexField {
    let w = dt / 6.0;
    let mut out = base.clone();
    let vals = out.values_mut();
    for i in 0..vals.len() {
        vals[i] += (k[0].values()[i] + 2.0 * k[1].values()[i] + 2.0 * k[2].values()[i] + k[3].values()[i]) * w;
    }
    out
}

/// One classical RK4 step of size `dt` (negative `dt` integrates backwards).
pub fn rk4_step(
    state: &SimState,
    equation: Equation,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
    dealias: bool,
    dt: f64,
) -> Result<SimState> {
    let (u, v) = match equation {
        Equation::Schrodinger => {
            let f = |u: &ComplexField| nls_rhs(u, h, nl, dealias);
            let k1 = f(&state.u)?;
            let k2 = f(&combine(&state.u, 0.5 * dt, &k1))?;
            let k3 = f(&combine(&state.u, 0.5 * dt, &k2))?;
            let k4 = f(&combine(&state.u, dt, &k3))?;
            (rk4_sum(&state.u, dt, [&k1, &k2, &k3, &k4]), None)
        }
        Equation::Wave => {
            let v0 = state
                .v
                .as_ref()
                .ok_or_else(|| Error::Config("wave state needs a velocity field".into()))?;
            let f = |u: &ComplexField, v: &ComplexField| nlw_rhs(u, v, h, nl, dealias);
            let (a1, b1) = f(&state.u, v0)?;
            let (a2, b2) = f(&combine(&state.u, 0.5 * dt, &a1), &combine(v0, 0.5 * dt, &b1))?;
            let (a3, b3) = f(&combine(&state.u, 0.5 * dt, &a2), &combine(v0, 0.5 * dt, &b2))?;
            let (a4, b4) = f(&combine(&state.u, dt, &a3), &combine(v0, dt, &b3))?;
            (
                rk4_sum(&state.u, dt, [&a1, &a2, &a3, &a4]),
                Some(rk4_sum(v0, dt, [&b1, &b2, &b3, &b4])),
            )
        }
    };
    let mut next = SimState { t: state.t + dt, step: state.step + 1, u, v, diverged: false };
    next.diverged = !next.is_finite();
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    SupNorm,
    H1a,
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected { t_detect: f64, trigger: Trigger },
    Diverged { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected { .. } => "blowup_detected",
            Termination::Diverged { .. } => "diverged",
        }
    }

    pub fn detection_time(&self) -> Option<f64> {
        match self {
            Termination::BlowupDetected { t_detect, .. } => Some(*t_detect),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TerminationReport {
    pub termination: Termination,
    /// Detection happened in `(t_detect − uncertainty, t_detect]`.
    pub uncertainty: f64,
    pub t_final: f64,
    pub steps: usize,
    pub initial_sup_norm: f64,
    pub initial_h1a: f64,
    pub max_boundary_fraction: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub series: TimeSeries,
    pub report: TerminationReport,
    pub final_state: SimState,
}

/// A validated configuration together with its grid and sampled operator.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SimConfig,
    grid: Grid,
    hamiltonian: DiscreteHamiltonian,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = make_grid(config.dim, config.extent, config.points)?;
        let hamiltonian = DiscreteHamiltonian::new(&config.potential, &grid)?;
        let sim = Self { config, grid, hamiltonian };
        let s = sim.stability_number();
        if s > STABILITY_LIMIT {
            return Err(Error::Config(format!(
                "dt = {} is outside the RK4 stability region (stability number {s:.3} > {STABILITY_LIMIT})",
                sim.config.dt
            )));
        }
        if let InitialData::Fields { u, v } = &sim.config.initial {
            if u.grid() != &sim.grid || v.as_ref().is_some_and(|v| v.grid() != &sim.grid) {
                return Err(Error::Config("initial fields do not match the configured grid".into()));
            }
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.hamiltonian
    }

    /// `dt λ_max` (Schrödinger) or `dt √λ_max` (wave), with
    /// `λ_max = (|k|_max + sup|A|)² + sup|V|` bounding the spectrum of `H`.
    pub fn stability_number(&self) -> f64 {
        let kmax = self.grid.max_wavenumber() * (self.grid.dim() as f64).sqrt();
        let lambda = (kmax + self.hamiltonian.sup_a()).powi(2) + self.hamiltonian.sup_v();
        match self.config.equation {
            Equation::Schrodinger => self.config.dt * lambda,
            Equation::Wave => self.config.dt * lambda.sqrt(),
        }
    }

    pub fn initial_state(&self) -> Result<SimState> {
        let (u, v) = match &self.config.initial {
            InitialData::Zero => (ComplexField::zeros(&self.grid), None),
            InitialData::Gaussian(g) => {
                let u = g.sample(&self.grid);
                let v = u.scaled(Complex64::new(g.wave_velocity_ratio, 0.0));
                (u, Some(v))
            }
            InitialData::Fields { u, v } => (u.clone(), v.clone()),
        };
        let v = match self.config.equation {
            Equation::Schrodinger => None,
            Equation::Wave => Some(v.unwrap_or_else(|| ComplexField::zeros(&self.grid))),
        };
        let mut s = SimState { t: 0.0, step: 0, u, v, diverged: false };
        s.diverged = !s.is_finite();
        Ok(s)
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        self.step_with(state, self.config.dt)
    }

    pub fn step_with(&self, state: &SimState, dt: f64) -> Result<SimState> {
        if state.diverged {
            return Err(Error::Config("cannot step a diverged state".into()));
        }
        rk4_step(
            state,
            self.config.equation,
            &self.hamiltonian,
            &self.config.nonlinearity,
            self.config.dealias,
            dt,
        )
    }

    pub fn energy(&self, state: &SimState) -> Result<f64> {
        match (&self.config.equation, &state.v) {
            (Equation::Wave, Some(v)) => {
                energy_wave(&state.u, v, &self.hamiltonian, &self.config.nonlinearity)
            }
            _ => energy_schrodinger(&state.u, &self.hamiltonian, &self.config.nonlinearity),
        }
    }

    pub fn record(&self, state: &SimState) -> Result<DiagnosticsRecord> {
        diagnostics::record(state, &self.hamiltonian, &self.config)
    }

    pub fn series_meta(&self) -> SeriesMeta {
        SeriesMeta::from_config(&self.config, &self.grid, &self.hamiltonian)
    }

    /// Integrates to `t_end` or until blow-up is detected, recording every `cadence` steps.
    pub fn run(&self) -> Result<RunOutcome> {
        let cfg = &self.config;
        let mut state = self.initial_state()?;
        let sup0 = state.u.sup_norm();
        let h1a0 = h1a_norm(&state.u, &self.hamiltonian)?;
        let active = sup0 > 0.0;
        let mut series = TimeSeries::new(self.series_meta());
        let mut warnings = Vec::new();
        let mut max_boundary: f64 = 0.0;
        let mut warned = false;
        let mut push = |rec: DiagnosticsRecord, warnings: &mut Vec<String>, series: &mut TimeSeries| {
            max_boundary = max_boundary.max(rec.boundary_mass_fraction);
            if rec.boundary_warning && !warned {
                warned = true;
                warnings.push(format!(
                    "boundary mass fraction {:e} exceeded {:e} at t = {}",
                    rec.boundary_mass_fraction, cfg.boundary_warn, rec.t
                ));
            }
            series.records.push(rec);
        };
        if state.diverged {
            let report = TerminationReport {
                termination: Termination::Diverged { t: 0.0 },
                uncertainty: 0.0,
                t_final: 0.0,
                steps: 0,
                initial_sup_norm: sup0,
                initial_h1a: h1a0,
                max_boundary_fraction: 0.0,
                warnings,
            };
            return Ok(RunOutcome { series, report, final_state: state });
        }
        push(self.record(&state)?, &mut warnings, &mut series);

        let total = cfg.steps();
        let mut termination = Termination::Completed;
        for k in 1..=total {
            let mut next = self.step(&state)?;
            next.t = k as f64 * cfg.dt;
            if next.diverged {
                let sup_prev = state.u.sup_norm();
                termination = if active && sup_prev > 2.0 * sup0 {
                    Termination::BlowupDetected { t_detect: next.t, trigger: Trigger::NonFinite }
                } else {
                    Termination::Diverged { t: next.t }
                };
                break;
            }
            let mut trigger = None;
            if active {
                if next.u.sup_norm() > cfg.blowup.sup_factor * sup0 {
                    trigger = Some(Trigger::SupNorm);
                } else if h1a_norm(&next.u, &self.hamiltonian)? > cfg.blowup.h1a_factor * h1a0 {
                    trigger = Some(Trigger::H1a);
                }
            }
            state = next;
            if state.step % cfg.cadence == 0 {
                push(self.record(&state)?, &mut warnings, &mut series);
            }
            if let Some(trigger) = trigger {
                termination = Termination::BlowupDetected { t_detect: state.t, trigger };
                break;
            }
        }
        diagnostics::finalize(&mut series);
        let report = TerminationReport {
            termination,
            uncertainty: cfg.dt,
            t_final: state.t,
            steps: state.step,
            initial_sup_norm: sup0,
            initial_h1a: h1a0,
            max_boundary_fraction: max_boundary,
            warnings,
        };
        Ok(RunOutcome { series, report, final_state: state })
    }
}

/// Result of the amplitude search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TunedAmplitude {
    pub amplitude: f64,
    pub energy: f64,
    pub margin: f64,
    /// Quadratic energy of the unit-amplitude profile.
    pub scale: f64,
}

/// Default energy margin as a fraction of the quadratic energy scale.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.1;

/// Smallest Gaussian amplitude in `[lo, hi]` (up to bisection tolerance) whose
/// initial energy is at most `−margin_fraction · scale`.
pub fn tune_amplitude(config: &SimConfig, lo: f64, hi: f64, margin_fraction: f64) -> Result<TunedAmplitude> {
    let InitialData::Gaussian(profile) = &config.initial else {
        return Err(Error::Config("amplitude tuning needs Gaussian initial data".into()));
    };
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid amplitude bracket [{lo}, {hi}]")));
    }
    let grid = make_grid(config.dim, config.extent, config.points)?;
    let h = DiscreteHamiltonian::new(&config.potential, &grid)?;
    let nl = config.nonlinearity;
    let unit = GaussianProfile { amplitude: 1.0, ..profile.clone() }.sample(&grid);
    let ratio = match config.equation {
        Equation::Schrodinger => 0.0,
        Equation::Wave => profile.wave_velocity_ratio,
    };
    let scale = 0.5 * covariant_gradient_norm_sq(&unit, &h)?
        + 0.5 * potential_integral(&unit, &h)?
        + 0.5 * ratio * ratio * unit.mass();
    let margin = margin_fraction * scale.abs();
    let energy = |a: f64| -> Result<f64> {
        let u = unit.scaled(Complex64::new(a, 0.0));
        match config.equation {
            Equation::Schrodinger => energy_schrodinger(&u, &h, &nl),
            Equation::Wave => energy_wave(&u, &u.scaled(Complex64::new(ratio, 0.0)), &h, &nl),
        }
    };
    let e_lo = energy(lo)?;
    if e_lo <= -margin {
        return Ok(TunedAmplitude { amplitude: lo, energy: e_lo, margin, scale });
    }
    let e_hi = energy(hi)?;
    if e_hi > -margin {
        return Err(Error::BracketFailure { lo, hi, margin });
    }
    let (mut a, mut b) = (lo, hi);
    let mut eb = e_hi;
    for _ in 0..200 {
        if b - a <= 1e-12 * b {
            break;
        }
        let m = 0.5 * (a + b);
        let em = energy(m)?;
        if em <= -margin {
            b = m;
            eb = em;
        } else {
            a = m;
        }
    }
    Ok(TunedAmplitude { amplitude: b, energy: eb, margin, scale })
}
