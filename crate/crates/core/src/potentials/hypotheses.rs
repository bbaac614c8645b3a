//! Numeric evaluators for the smallness and sign conditions placed on `(A, V)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use super::{
    check_coulomb_gauge, sample_a, sample_field_strength, sample_radial_derivative_v,
    sample_trapping, sample_v, PotentialSpec,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

/// `π^{n/2} / Γ(n/2 − 1)`, the Kato-norm bound on `V_−`.
pub fn kato_threshold(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidPotential(format!("Kato norm needs n >= 3, got {n}")));
    }
    let half = n as f64 / 2.0;
    Ok(PI.powf(half) / gamma(half - 1.0))
}

/// `2(n−1)(n−3)/3`, the right-hand side of the `n ≥ 4` smallness conditions.
pub fn strichartz_threshold(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n - 1.0) * (n - 3.0) / 3.0
}

/// `sup_x Σ_{0<|x−y|≤r} |V(y)| / |x−y|^{n−2} hⁿ`, with periodic (minimal image) distances.
pub fn kato_norm(v: &RealField, radius: f64) -> Result<f64> {
    let grid = v.grid();
    let n = grid.dim();
    if n < 3 {
        return Err(Error::InvalidPotential(format!("Kato norm needs n >= 3, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidPotential(format!("Kato radius {radius} must be positive")));
    }
    if v.values().iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let np = grid.points_per_axis() as isize;
    let h = grid.spacing();
    let r2max = radius * radius;
    let mut kernel = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, k) in kernel.iter_mut().enumerate() {
        let mut rest = idx as isize;
        let mut d2 = 0.0;
        for _ in 0..n {
            let i = rest % np;
            rest /= np;
            let m = if i < np / 2 { i } else { i - np };
            d2 += (m as f64 * h).powi(2);
        }
        if d2 > 0.0 && d2 <= r2max * (1.0 + 1e-12) {
            k.re = d2.sqrt().powi(-(n as i32 - 2));
        }
    }
    let mut data: Vec<Complex64> = v.values().iter().map(|x| Complex64::new(x.abs(), 0.0)).collect();
    grid.transform(&mut data, false);
    grid.transform(&mut kernel, false);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= k;
    }
    grid.transform(&mut data, true);
    let w = grid.cell_volume();
    Ok(data.iter().map(|c| c.re * w).fold(0.0, f64::max))
}

/// Discrete `∫₀^∞ sup_{|x|=r} |f| dr`: shells of width `h`, sup per shell, sum times `h`.
pub fn radial_tangential_norm(values: &[f64], grid: &Grid) -> f64 {
    let h = grid.spacing();
    let radius = grid.radius();
    let shells = (radius.iter().fold(0.0, |m: f64, r| m.max(*r)) / h) as usize + 1;
    let mut sup = vec![0.0f64; shells];
    for (r, f) in radius.iter().zip(values) {
        let s = (r / h) as usize;
        sup[s] = sup[s].max(f.abs());
    }
    sup.iter().sum::<f64>() * h
}

/// `Σ_j 2^j sup_{C_j}|A| + Σ_j 2^{2j} sup_{C_j}|V|` over dyadic shells `C_j = {2^j ≤ |x| ≤ 2^{j+1}}`.
pub fn dyadic_decay_sum(a_abs: &[f64], v_abs: &[f64], grid: &Grid) -> f64 {
    let radius = grid.radius();
    let mut shells: std::collections::BTreeMap<i32, (f64, f64)> = Default::default();
    for ((r, a), v) in radius.iter().zip(a_abs).zip(v_abs) {
        if *r == 0.0 {
            continue;
        }
        let j = r.log2().floor() as i32;
        // points on a shell boundary belong to both neighbours
        let mut js = vec![j];
        if r.log2() == j as f64 {
            js.push(j - 1);
        }
        for j in js {
            let e = shells.entry(j).or_insert((0.0, 0.0));
            e.0 = e.0.max(a.abs());
            e.1 = e.1.max(v.abs());
        }
    }
    shells
        .iter()
        .map(|(j, (a, v))| 2f64.powi(*j) * a + 4f64.powi(*j) * v)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub passed: bool,
}

impl InequalityCheck {
    /// `lhs < rhs` (strict) or `lhs ≤ rhs`.
    pub fn upper(lhs: f64, rhs: f64, strict: bool) -> Self {
        let passed = if strict { lhs < rhs } else { lhs <= rhs };
        Self { lhs, rhs, strict, passed }
    }

    /// `lhs ≥ rhs`.
    pub fn lower(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, strict: false, passed: lhs >= rhs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisParams {
    /// Free constant `M > 0` of the three-dimensional Schrödinger condition.
    pub strichartz_m: f64,
    /// Kato-norm radius; `None` means `R/4`.
    pub kato_radius: Option<f64>,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        Self { strichartz_m: 1.0, kato_radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub dim: usize,
    pub kato_radius: f64,
    pub kato_norm_v_minus: Option<f64>,
    pub kato: Option<InequalityCheck>,
    /// `‖|x|² B_τ‖_∞`
    pub trapping_sup_weight2: f64,
    /// `‖|x|^{3/2} B_τ‖_∞`
    pub trapping_sup_weight3_2: f64,
    /// `‖|x|³ (∂_r V)₊‖_∞`
    pub repulsive_sup_weight3: f64,
    /// `‖|x|² (∂_r V)₊‖` in radial-tangential form
    pub repulsive_radial_weight2: f64,
    /// `‖|x|³ B‖` in radial-tangential form
    pub field_radial_weight3: f64,
    /// `‖|x|³ B_τ‖` in radial-tangential form
    pub trapping_radial_weight3: f64,
    pub dyadic_decay_sum: f64,
    pub strichartz_m: f64,
    /// Schrödinger smallness condition (three-dimensional form or `n ≥ 4` form).
    pub schrodinger_smallness: Option<InequalityCheck>,
    /// Wave smallness condition (three-dimensional form or `n ≥ 4` form).
    pub wave_smallness: Option<InequalityCheck>,
    /// `min_x (V + ½ |x| ∂_r V) ≥ 0`
    pub virial_condition: InequalityCheck,
    /// `min_x V ≥ 0`
    pub nonnegative_v: InequalityCheck,
    pub coulomb_residual: f64,
}

fn sup_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| m.max(v.abs()))
}

/// Evaluates every hypothesis inequality on the grid samples of `spec`.
pub fn hypothesis_report(spec: &PotentialSpec, grid: &Grid, params: HypothesisParams) -> Result<AssumptionReport> {
    if !(params.strichartz_m > 0.0) {
        return Err(Error::InvalidPotential("Strichartz constant M must be positive".into()));
    }
    let n = grid.dim();
    let radius = grid.radius();
    let bt = sample_trapping(spec, grid)?;
    let vr = sample_radial_derivative_v(spec, grid)?;
    let v = sample_v(spec, grid)?;
    let b = sample_field_strength(spec, grid)?;
    let a = sample_a(spec, grid)?;

    let bt_abs: Vec<f64> = (0..grid.len())
        .map(|i| bt.components().iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect();
    let weighted = |w: f64, f: &[f64]| -> Vec<f64> {
        radius.iter().zip(f).map(|(r, f)| r.powf(w) * f).collect()
    };
    let vr_plus: Vec<f64> = vr.values().iter().map(|x| x.max(0.0)).collect();

    let trapping_sup_weight2 = sup_abs(weighted(2.0, &bt_abs).into_iter());
    let trapping_sup_weight3_2 = sup_abs(weighted(1.5, &bt_abs).into_iter());
    let repulsive_sup_weight3 = sup_abs(weighted(3.0, &vr_plus).into_iter());
    let repulsive_radial_weight2 = radial_tangential_norm(&weighted(2.0, &vr_plus), grid);
    let field_radial_weight3 = radial_tangential_norm(&weighted(3.0, b.values()), grid);
    let trapping_radial_weight3 = radial_tangential_norm(&weighted(3.0, &bt_abs), grid);

    let a_abs: Vec<f64> = (0..grid.len())
        .map(|i| a.components().iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect();
    let dyadic = dyadic_decay_sum(&a_abs, v.values(), grid);

    let kato_radius = params.kato_radius.unwrap_or(grid.extent() / 4.0);
    let (kato_norm_v_minus, kato) = if n >= 3 {
        let vminus = RealField::from_values(grid, v.values().iter().map(|x| (-x).max(0.0)).collect())?;
        let k = kato_norm(&vminus, kato_radius)?;
        (Some(k), Some(InequalityCheck::upper(k, kato_threshold(n)?, true)))
    } else {
        (None, None)
    };

    let m = params.strichartz_m;
    let (schrodinger_smallness, wave_smallness) = match n {
        2 => (None, None),
        3 => (
            Some(InequalityCheck::upper(
                (m + 0.5).powi(2) / m * trapping_sup_weight3_2.powi(2)
                    + (2.0 * m + 1.0) * repulsive_radial_weight2,
                0.5,
                true,
            )),
            // measured with the trapping component, so fields with B_τ = 0 are admissible
            Some(InequalityCheck::upper(trapping_radial_weight3 + repulsive_radial_weight2, 0.5, false)),
        ),
        _ => {
            let lhs = trapping_sup_weight2.powi(2) + 2.0 * repulsive_sup_weight3;
            (
                Some(InequalityCheck::upper(lhs, strichartz_threshold(n), true)),
                Some(InequalityCheck::upper(lhs, strichartz_threshold(n), false)),
            )
        }
    };

    let cond = v
        .values()
        .iter()
        .zip(vr.values())
        .zip(radius)
        .map(|((v, vr), r)| v + 0.5 * r * vr)
        .fold(f64::INFINITY, f64::min);
    let vmin = v.values().iter().copied().fold(f64::INFINITY, f64::min);

    Ok(AssumptionReport {
        dim: n,
        kato_radius,
        kato_norm_v_minus,
        kato,
        trapping_sup_weight2,
        trapping_sup_weight3_2,
        repulsive_sup_weight3,
        repulsive_radial_weight2,
        field_radial_weight3,
        trapping_radial_weight3,
        dyadic_decay_sum: dyadic,
        strichartz_m: m,
        schrodinger_smallness,
        wave_smallness,
        virial_condition: InequalityCheck::lower(cond, 0.0),
        nonnegative_v: InequalityCheck::lower(vmin, 0.0),
        coulomb_residual: check_coulomb_gauge(spec, grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potentials::{build_m, ElectricPotential, MagneticPotential};

    #[test]
    fn thresholds() {
        assert_eq!(strichartz_threshold(4), 2.0);
        assert_eq!(strichartz_threshold(5), 16.0 / 3.0);
        assert_eq!(strichartz_threshold(6), 10.0);
        assert!((kato_threshold(3).unwrap() - PI).abs() < 1e-12);
        // Γ(1) = 1
        assert!((kato_threshold(4).unwrap() - PI * PI).abs() < 1e-12);
        assert!(kato_threshold(2).is_err());
    }

    #[test]
    fn m_coefficient() {
        let m: f64 = 1.0;
        assert_eq!((m + 0.5).powi(2) / m, 2.25);
    }

    #[test]
    fn radial_tangential_of_indicator() {
        let g = make_grid(2, 4.0, 64).unwrap();
        let f: Vec<f64> = g.radius().iter().map(|r| if *r < 1.0 { 2.0 } else { 0.0 }).collect();
        let norm = radial_tangential_norm(&f, &g);
        assert!((norm - 2.0).abs() < 2.0 * g.spacing() + 1e-12);
    }

    #[test]
    fn zero_potential_kato() {
        let g = make_grid(3, 4.0, 16).unwrap();
        assert_eq!(kato_norm(&RealField::zeros(&g), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kato_norm_of_small_bump_matches_direct_sum() {
        let g = make_grid(3, 3.0, 16).unwrap();
        let v = RealField::from_fn(&g, |x| (-2.0 * x.iter().map(|t| t * t).sum::<f64>()).exp());
        let fast = kato_norm(&v, 1.2).unwrap();
        let slow = crate::oracle::kato_norm_direct(&v, 1.2).unwrap();
        assert!((fast - slow).abs() < 1e-12 * slow, "{fast} vs {slow}");
    }

    #[test]
    fn report_dimensions() {
        let g4 = make_grid(4, 4.0, 8).unwrap();
        let spec = PotentialSpec::new(4, MagneticPotential::LinearM(build_m(4).unwrap()), ElectricPotential::Zero)
            .unwrap();
        let rep = hypothesis_report(&spec, &g4, HypothesisParams::default()).unwrap();
        assert_eq!(rep.schrodinger_smallness.unwrap().rhs, 2.0);
        assert_eq!(rep.wave_smallness.unwrap().rhs, 2.0);

        let g2 = make_grid(2, 4.0, 16).unwrap();
        let rep = hypothesis_report(&PotentialSpec::zero(2).unwrap(), &g2, HypothesisParams::default()).unwrap();
        assert!(rep.kato.is_none() && rep.schrodinger_smallness.is_none());
        assert!(rep.virial_condition.passed && rep.nonnegative_v.passed);
    }

    #[test]
    fn singular_spherical_passes_trapping_tests() {
        let g = make_grid(3, 4.0, 16).unwrap();
        let spec = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero).unwrap();
        let rep = hypothesis_report(&spec, &g, HypothesisParams::default()).unwrap();
        assert!(rep.trapping_sup_weight2 < 1e-12);
        assert!(rep.trapping_sup_weight3_2 < 1e-12);
        assert!(rep.schrodinger_smallness.unwrap().passed);
        assert!(rep.wave_smallness.unwrap().passed);
        assert!(rep.field_radial_weight3 > 1.0);
        assert!(rep.kato.unwrap().passed);
        assert!(rep.coulomb_residual <= 1e-12);
    }

    #[test]
    fn negative_potential_fails_kato() {
        let g = make_grid(3, 4.0, 32).unwrap();
        let spec = PotentialSpec::new(3, MagneticPotential::Zero, ElectricPotential::InverseQuadratic { strength: -5.0 })
            .unwrap();
        let rep = hypothesis_report(&spec, &g, HypothesisParams { strichartz_m: 1.0, kato_radius: Some(1.0) }).unwrap();
        assert!(!rep.kato.unwrap().passed);
        assert!(!rep.nonnegative_v.passed);
    }
}
