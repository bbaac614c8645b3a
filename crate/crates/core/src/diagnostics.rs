//! Conserved quantities, virial quantities and concavity quantities recorded along a run.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{Equation, SimConfig, SimState};
use crate::error::{Error, Result};
use crate::grid::{neumaier_sum, ComplexField, Grid};
use crate::operators::{
    covariant_gradient, energy_schrodinger, energy_wave, hamiltonian_apply, power_integral,
    DiscreteHamiltonian, Nonlinearity,
};

/// Inner radius of the boundary shell, as a fraction of the box half-width.
pub const BOUNDARY_SHELL: f64 = 0.9;

/// Terms of `Q̈` for the Schrödinger variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VirialTerms {
    /// `8 ‖∇_A u‖²`
    pub gradient: f64,
    /// `−4 ∫ |x| ∂_r V |u|²`
    pub electric: f64,
    /// `8 Im ∫ |x| u B_τ · conj(∇_A u)`
    pub magnetic: f64,
    /// `−4n(p−1)/(p+1) c ∫ |u|^{p+1}`
    pub nonlinear: f64,
    pub total: f64,
    /// Same quantity written through the energy.
    pub energy_form: f64,
}

/// Terms of the wave virial right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveVirialTerms {
    /// `2 (‖u_t‖² + ‖∇_A u‖²)`
    pub kinetic: f64,
    /// `−2 ∫ |x| ∂_r V |u|²`
    pub electric_radial: f64,
    /// `−2 ∫ V |u|²`
    pub electric: f64,
    /// `4 Im ∫ |x| u B_τ · conj(∇_A u)`
    pub magnetic: f64,
    /// `2 (1 − n(p−1)/(p+1)) c ∫ |u|^{p+1}`
    pub nonlinear: f64,
    pub total: f64,
}

/// Quantities of the concavity argument for `F = ‖u‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevineQuantities {
    pub f: f64,
    /// `2 Re⟨u_t, u⟩`
    pub f_dot: f64,
    /// `2‖u_t‖² + 2 Re⟨u_tt, u⟩` with `u_tt` taken from the equation.
    pub f_ddot: f64,
    /// `−‖∇_A u‖² − ∫V|u|² + c∫|u|^{p+1} − (2α+1)‖u_t‖²`
    pub hfun: f64,
    /// `4(α+1)(‖u_t‖²‖u‖² − (Re⟨u_t,u⟩)²) + 2 F Hfun`, equal to `F F'' − (α+1) F'²`.
    pub wedge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub mass: f64,
    pub energy: f64,
    pub q: f64,
    pub q_dot: Option<f64>,
    pub q_ddot_rhs: f64,
    pub virial_residual: Option<f64>,
    pub sup_norm: f64,
    pub h1a: f64,
    pub boundary_mass_fraction: f64,
    pub boundary_warning: bool,
    pub nls_terms: Option<VirialTerms>,
    pub wave_terms: Option<WaveVirialTerms>,
    pub levine: Option<LevineQuantities>,
    /// `∫ |x|² |u|^{p+1}`
    pub nonlinear_moment: f64,
}

/// Run parameters echoed next to the records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesMeta {
    pub equation: Equation,
    pub dim: usize,
    pub exponent: f64,
    pub coupling: f64,
    pub extent: f64,
    pub points: usize,
    pub spacing: f64,
    pub dt: f64,
    pub cadence: usize,
    pub dealias: bool,
    pub regularization: f64,
    pub taper: Option<(f64, f64)>,
    pub coulomb_residual: f64,
    pub config_hash: Option<String>,
}

impl SeriesMeta {
    pub fn from_config(cfg: &SimConfig, grid: &Grid, h: &DiscreteHamiltonian) -> Self {
        Self {
            equation: cfg.equation,
            dim: cfg.dim,
            exponent: cfg.nonlinearity.exponent,
            coupling: cfg.nonlinearity.coupling,
            extent: cfg.extent,
            points: cfg.points,
            spacing: grid.spacing(),
            dt: cfg.dt,
            cadence: cfg.cadence,
            dealias: cfg.dealias,
            regularization: h.spec().effective_regularization(grid),
            taper: cfg.potential.taper().map(|t| (t.inner, t.outer)),
            coulomb_residual: h.divergence_residual(),
            config_hash: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSeries {
    pub meta: SeriesMeta,
    pub records: Vec<DiagnosticsRecord>,
}

impl TimeSeries {
    pub fn new(meta: SeriesMeta) -> Self {
        Self { meta, records: Vec::new() }
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

fn weighted_integral<F: Fn(f64, Complex64) -> f64>(u: &ComplexField, f: F) -> f64 {
    let r = u.grid().radius();
    u.grid().cell_volume() * neumaier_sum(u.values().iter().zip(r).map(|(z, r)| f(*r, *z)))
}

/// `∫ |x|² |u|²`.
pub fn variance_q(u: &ComplexField) -> f64 {
    weighted_integral(u, |r, z| r * r * z.norm_sqr())
}

/// `∫ |x|² |u|^{p+1}`.
pub fn nonlinear_moment(u: &ComplexField, p: f64) -> f64 {
    weighted_integral(u, |r, z| r * r * z.norm().powf(p + 1.0))
}

/// `∫ |x|² (|u_t|² + |∇_A u|² + V|u|²) − (n−1)|u|²`.
pub fn wave_q(u: &ComplexField, v: &ComplexField, h: &DiscreteHamiltonian) -> Result<f64> {
    let grad = covariant_gradient(u, h)?;
    let n = h.grid().dim() as f64;
    let r = h.grid().radius();
    let vv = h.electric_potential().values();
    let vals = (0..u.values().len()).map(|i| {
        let g2: f64 = grad.iter().map(|g| g.values()[i].norm_sqr()).sum();
        let u2 = u.values()[i].norm_sqr();
        r[i] * r[i] * (v.values()[i].norm_sqr() + g2 + vv[i] * u2) - (n - 1.0) * u2
    });
    Ok(h.grid().cell_volume() * neumaier_sum(vals))
}

/// `4 Im ∫ ū ∇_A u · x`.
pub fn q_dot_nls(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<f64> {
    let grad = covariant_gradient(u, h)?;
    Ok(4.0 * radial_flux(u, &grad, h.grid()))
}

/// `Im ∫ ū ∇_A u · x`
fn radial_flux(u: &ComplexField, grad: &[ComplexField], grid: &Grid) -> f64 {
    let n = grid.dim();
    let mut x = vec![0.0; n];
    let mut vals = Vec::with_capacity(grid.len());
    for (i, z) in u.values().iter().enumerate() {
        grid.coords(i, &mut x);
        let mut dot = Complex64::new(0.0, 0.0);
        for (g, xj) in grad.iter().zip(&x) {
            dot += g.values()[i] * xj;
        }
        vals.push((z.conj() * dot).im);
    }
    grid.cell_volume() * neumaier_sum(vals)
}

/// `Im ∫ |x| u B_τ · conj(∇_A u)`.
fn magnetic_flux(u: &ComplexField, grad: &[ComplexField], h: &DiscreteHamiltonian) -> f64 {
    if !h.has_magnetic() {
        return 0.0;
    }
    let r = h.grid().radius();
    let bt = h.trapping().components();
    let vals = u.values().iter().enumerate().map(|(i, z)| {
        let mut s = Complex64::new(0.0, 0.0);
        for (b, g) in bt.iter().zip(grad) {
            s += g.values()[i].conj() * b[i];
        }
        (z * s).im * r[i]
    });
    h.grid().cell_volume() * neumaier_sum(vals)
}

/// `∫ |x| ∂_r V |u|²`.
fn radial_force(u: &ComplexField, h: &DiscreteHamiltonian) -> f64 {
    if !h.has_electric() {
        return 0.0;
    }
    let r = h.grid().radius();
    let vr = h.radial_derivative_v().values();
    h.grid().cell_volume()
        * neumaier_sum(u.values().iter().enumerate().map(|(i, z)| r[i] * vr[i] * z.norm_sqr()))
}

fn electric_integral(u: &ComplexField, h: &DiscreteHamiltonian) -> f64 {
    if !h.has_electric() {
        return 0.0;
    }
    let v = h.electric_potential().values();
    h.grid().cell_volume() * neumaier_sum(u.values().iter().zip(v).map(|(z, v)| v * z.norm_sqr()))
}

fn nonlinear_integral(u: &ComplexField, nl: &Nonlinearity) -> f64 {
    if nl.is_linear() {
        0.0
    } else {
        nl.coupling * power_integral(u, nl.exponent)
    }
}

/// Right-hand side of the Schrödinger variance identity, term by term.
pub fn q_ddot_rhs_nls(u: &ComplexField, h: &DiscreteHamiltonian, nl: &Nonlinearity) -> Result<VirialTerms> {
    let grad = covariant_gradient(u, h)?;
    let n = h.grid().dim() as f64;
    let p = nl.exponent;
    let grad_sq: f64 = grad.iter().map(|g| g.mass()).sum();
    let force = radial_force(u, h);
    let mag = magnetic_flux(u, &grad, h);
    let pot = nonlinear_integral(u, nl);
    let gradient = 8.0 * grad_sq;
    let electric = -4.0 * force;
    let magnetic = 8.0 * mag;
    let nonlinear = -4.0 * n * (p - 1.0) / (p + 1.0) * pot;
    let energy = energy_schrodinger(u, h, nl)?;
    let energy_form = 16.0 * energy - 8.0 * electric_integral(u, h) - 4.0 * force
        + 8.0 * mag
        + (16.0 - 4.0 * n * (p - 1.0)) / (p + 1.0) * pot;
    Ok(VirialTerms {
        gradient,
        electric,
        magnetic,
        nonlinear,
        total: gradient + electric + magnetic + nonlinear,
        energy_form,
    })
}

/// Right-hand side of the wave virial identity, term by term.
pub fn q_ddot_rhs_wave(
    u: &ComplexField,
    v: &ComplexField,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
) -> Result<WaveVirialTerms> {
    let grad = covariant_gradient(u, h)?;
    let n = h.grid().dim() as f64;
    let p = nl.exponent;
    let grad_sq: f64 = grad.iter().map(|g| g.mass()).sum();
    let kinetic = 2.0 * (v.mass() + grad_sq);
    let electric_radial = -2.0 * radial_force(u, h);
    let electric = -2.0 * electric_integral(u, h);
    let magnetic = 4.0 * magnetic_flux(u, &grad, h);
    let nonlinear = 2.0 * (1.0 - n * (p - 1.0) / (p + 1.0)) * nonlinear_integral(u, nl);
    Ok(WaveVirialTerms {
        kinetic,
        electric_radial,
        electric,
        magnetic,
        nonlinear,
        total: kinetic + electric_radial + electric + magnetic + nonlinear,
    })
}

/// `α = (p−1)/4`, from `2(2α+1) = p+1`.
pub fn levine_alpha(p: f64) -> f64 {
    (p - 1.0) / 4.0
}

/// Concavity quantities at one instant of a wave run.
pub fn levine_quantities(
    u: &ComplexField,
    v: &ComplexField,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
) -> Result<LevineQuantities> {
    let alpha = levine_alpha(nl.exponent);
    let f = u.mass();
    let vv = v.mass();
    let re_vu = v.inner(u).re;
    let grad_sq: f64 = covariant_gradient(u, h)?.iter().map(|g| g.mass()).sum();
    let hfun = -grad_sq - electric_integral(u, h) + nonlinear_integral(u, nl) - (2.0 * alpha + 1.0) * vv;
    let mut utt = hamiltonian_apply(u, h)?;
    for (o, z) in utt.values_mut().iter_mut().zip(u.values()) {
        *o = nl.term(*z) - *o;
    }
    let f_ddot = 2.0 * vv + 2.0 * utt.inner(u).re;
    let wedge = 4.0 * (alpha + 1.0) * (vv * f - re_vu * re_vu) + 2.0 * f * hfun;
    Ok(LevineQuantities { f, f_dot: 2.0 * re_vu, f_ddot, hfun, wedge })
}

/// Mass fraction in `|x| > 0.9 R`.
pub fn boundary_mass_fraction(u: &ComplexField) -> f64 {
    let total = u.mass();
    if total == 0.0 {
        return 0.0;
    }
    let cut = BOUNDARY_SHELL * u.grid().extent();
    weighted_integral(u, |r, z| if r > cut { z.norm_sqr() } else { 0.0 }) / total
}

/// Full diagnostics record for one state.
pub fn record(state: &SimState, h: &DiscreteHamiltonian, cfg: &SimConfig) -> Result<DiagnosticsRecord> {
    let u = &state.u;
    let nl = &cfg.nonlinearity;
    let grad = covariant_gradient(u, h)?;
    let grad_sq: f64 = grad.iter().map(|g| g.mass()).sum();
    let mass = u.mass();
    let boundary = boundary_mass_fraction(u);
    let mut rec = DiagnosticsRecord {
        t: state.t,
        step: state.step,
        mass,
        energy: 0.0,
        q: 0.0,
        q_dot: None,
        q_ddot_rhs: 0.0,
        virial_residual: None,
        sup_norm: u.sup_norm(),
        h1a: (mass + grad_sq).sqrt(),
        boundary_mass_fraction: boundary,
        boundary_warning: boundary > cfg.boundary_warn,
        nls_terms: None,
        wave_terms: None,
        levine: None,
        nonlinear_moment: nonlinear_moment(u, nl.exponent),
    };
    match cfg.equation {
        Equation::Schrodinger => {
            rec.energy = energy_schrodinger(u, h, nl)?;
            rec.q = variance_q(u);
            rec.q_dot = Some(4.0 * radial_flux(u, &grad, h.grid()));
            let terms = q_ddot_rhs_nls(u, h, nl)?;
            rec.q_ddot_rhs = terms.total;
            rec.nls_terms = Some(terms);
        }
        Equation::Wave => {
            let v = state
                .v
                .as_ref()
                .ok_or_else(|| Error::Config("wave state needs a velocity field".into()))?;
            rec.energy = energy_wave(u, v, h, nl)?;
            rec.q = wave_q(u, v, h)?;
            let terms = q_ddot_rhs_wave(u, v, h, nl)?;
            rec.q_ddot_rhs = terms.total;
            rec.wave_terms = Some(terms);
            rec.levine = Some(levine_quantities(u, v, h, nl)?);
        }
    }
    Ok(rec)
}

/// Second central differences of `values` at interior samples of a uniform series.
pub fn second_differences(times: &[f64], values: &[f64]) -> Vec<Option<f64>> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n {
                return None;
            }
            let tau = times[i + 1] - times[i];
            Some((values[i + 1] - 2.0 * values[i] + values[i - 1]) / (tau * tau))
        })
        .collect()
}

/// `|Q''_fd − Q̈_rhs| / max(1, |Q̈_rhs|)` at interior samples.
pub fn virial_residual(series: &TimeSeries) -> Vec<Option<f64>> {
    let t = series.times();
    let q: Vec<f64> = series.records.iter().map(|r| r.q).collect();
    second_differences(&t, &q)
        .into_iter()
        .zip(&series.records)
        .map(|(d, r)| d.map(|d| (d - r.q_ddot_rhs).abs() / r.q_ddot_rhs.abs().max(1.0)))
        .collect()
}

/// Fills the residual column once the whole series is known.
pub fn finalize(series: &mut TimeSeries) {
    let res = virial_residual(series);
    for (r, v) in series.records.iter_mut().zip(res) {
        r.virial_residual = v;
    }
}

/// Upper parabola `Q(t) ≤ C E₀ t² + Q̇₀ t + Q₀` checked along a series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticBound {
    pub coefficient: f64,
    pub applicable: bool,
    pub e0: f64,
    pub q_dot0: f64,
    pub q0: f64,
    /// `bound(t) − Q(t)` at every record.
    #[serde(skip)]
    pub margins: Vec<f64>,
    pub first_violation: Option<f64>,
    pub holds: bool,
    /// Positive root of the parabola when `E₀ < 0`.
    pub root: Option<f64>,
    /// Largest `C` for which the recorded `Q` stays under the parabola (`E₀ < 0`).
    pub fitted_coefficient: Option<f64>,
}

/// Positive root of `c t² + b t + a` with `c < 0`, `a ≥ 0`.
pub fn parabola_root(c: f64, b: f64, a: f64) -> Option<f64> {
    if !(c < 0.0) {
        return None;
    }
    let disc = b * b - 4.0 * c * a;
    if disc < 0.0 {
        return None;
    }
    Some((-b - disc.sqrt()) / (2.0 * c))
}

/// Checks `Q(t) ≤ coefficient · E₀ t² + Q̇₀ t + Q₀ + slack`. The check applies when
/// `E₀ < 0` and the magnetic trapping term is absent.
pub fn quadratic_bound_check(
    series: &TimeSeries,
    e0: f64,
    q_dot0: f64,
    q0: f64,
    coefficient: f64,
    trapping_free: bool,
    slack: f64,
) -> QuadraticBound {
    let margins: Vec<f64> = series
        .records
        .iter()
        .map(|r| coefficient * e0 * r.t * r.t + q_dot0 * r.t + q0 - r.q)
        .collect();
    let first_violation = series
        .records
        .iter()
        .zip(&margins)
        .find(|(_, m)| **m < -slack)
        .map(|(r, _)| r.t);
    let fitted = (e0 < 0.0)
        .then(|| {
            series
                .records
                .iter()
                .filter(|r| r.t > 0.0)
                .map(|r| (r.q - q_dot0 * r.t - q0) / (e0 * r.t * r.t))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|c| c.is_finite());
    QuadraticBound {
        coefficient,
        applicable: e0 < 0.0 && trapping_free,
        e0,
        q_dot0,
        q0,
        margins,
        first_violation,
        holds: first_violation.is_none(),
        root: parabola_root(coefficient * e0, q_dot0, q0),
        fitted_coefficient: fitted,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevineReport {
    pub alpha: f64,
    #[serde(skip)]
    pub f_pow: Vec<f64>,
    /// Second differences of `F^{−α}` (without the `1/τ²` factor) at interior samples.
    #[serde(skip)]
    pub f_pow_second_differences: Vec<f64>,
    pub max_second_difference: f64,
    pub concavity_ok: bool,
    /// `F(0) / (α F'(0))` when `F'(0) > 0`.
    pub t_bound: Option<f64>,
    /// `min_t (Hfun(t) + (p+1) E_W(0))`.
    pub hfun_margin: f64,
    pub hfun_ok: bool,
    pub min_wedge: f64,
}

/// Concavity checks over a wave series. `tolerance` is the absolute allowance on
/// the `Hfun` lower bound; concavity allows `1e-6 |F^{−α}(0)|`.
pub fn levine_diagnostics(series: &TimeSeries, p: f64, tolerance: f64) -> Result<LevineReport> {
    let alpha = levine_alpha(p);
    let lev: Vec<LevineQuantities> = series
        .records
        .iter()
        .map(|r| r.levine.ok_or_else(|| Error::Config("series has no wave records".into())))
        .collect::<Result<_>>()?;
    let first = lev.first().ok_or_else(|| Error::Config("empty series".into()))?;
    let e0 = series.records[0].energy;
    let f_pow: Vec<f64> = lev.iter().map(|l| l.f.powf(-alpha)).collect();
    let d2: Vec<f64> = (1..f_pow.len().saturating_sub(1))
        .map(|i| f_pow[i + 1] - 2.0 * f_pow[i] + f_pow[i - 1])
        .collect();
    let max_d2 = d2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let allowance = 1e-6 * f_pow[0].abs();
    let hfun_margin = lev.iter().map(|l| l.hfun + (p + 1.0) * e0).fold(f64::INFINITY, f64::min);
    Ok(LevineReport {
        alpha,
        f_pow,
        max_second_difference: max_d2,
        concavity_ok: d2.iter().all(|d| *d <= allowance),
        f_pow_second_differences: d2,
        t_bound: (first.f_dot > 0.0).then(|| first.f / (alpha * first.f_dot)),
        hfun_margin,
        hfun_ok: hfun_margin >= -tolerance,
        min_wedge: lev.iter().map(|l| l.wedge).fold(f64::INFINITY, f64::min),
    })
}
