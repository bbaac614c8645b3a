//! Covariant calculus for `∇_A = ∇ − iA`, the Hamiltonian `H = −∇_A² + V`,
//! and the Schrödinger and wave energies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    gradient_from_spectrum, laplacian_from_spectrum, neumaier_sum, spectral_divergence,
    wavenumber_sq, ComplexField, Grid, RealField, VectorField,
};
use crate::potentials::{
    check_coulomb_gauge, sample_a, sample_radial_derivative_v, sample_trapping, sample_v,
    MagneticPotential, PotentialSpec,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Focusing power nonlinearity `c |u|^{p−1} u`; `c = 0` gives the linear problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nonlinearity {
    pub exponent: f64,
    pub coupling: f64,
}

impl Nonlinearity {
    pub fn focusing(exponent: f64) -> Self {
        Self { exponent, coupling: 1.0 }
    }

    pub fn linear(exponent: f64) -> Self {
        Self { exponent, coupling: 0.0 }
    }

    pub fn is_linear(&self) -> bool {
        self.coupling == 0.0
    }

    /// `c |z|^{p−1} z`.
    #[inline]
    pub fn term(&self, z: Complex64) -> Complex64 {
        if self.exponent == 3.0 {
            z * (self.coupling * z.norm_sqr())
        } else {
            let a = z.norm();
            if a == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z * (self.coupling * a.powf(self.exponent - 1.0))
            }
        }
    }

    pub fn apply(&self, u: &ComplexField) -> ComplexField {
        u.map(|z| self.term(z))
    }
}

/// `∫ |u|^{p+1}`.
pub fn power_integral(u: &ComplexField, p: f64) -> f64 {
    let w = u.grid().cell_volume();
    if p == 3.0 {
        w * neumaier_sum(u.values().iter().map(|z| z.norm_sqr() * z.norm_sqr()))
    } else {
        w * neumaier_sum(u.values().iter().map(|z| z.norm().powf(p + 1.0)))
    }
}

/// Sampled, time-independent `H = −∇_A² + V` on a grid.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    grid: Grid,
    spec: PotentialSpec,
    a: VectorField,
    v: RealField,
    a_sq: Vec<f64>,
    trapping: VectorField,
    radial_v: RealField,
    k_sq: Vec<f64>,
    magnetic: bool,
    electric: bool,
    divergence_residual: f64,
}

impl DiscreteHamiltonian {
    pub fn new(spec: &PotentialSpec, grid: &Grid) -> Result<Self> {
        let spec = spec.resolved_for(grid);
        let a = sample_a(&spec, grid)?;
        let v = sample_v(&spec, grid)?;
        if !a.is_finite() || !v.is_finite() {
            return Err(Error::InvalidPotential("sampled potentials are not finite".into()));
        }
        let trapping = sample_trapping(&spec, grid)?;
        let radial_v = sample_radial_derivative_v(&spec, grid)?;
        let a_sq = (0..grid.len())
            .map(|i| a.components().iter().map(|c| c[i] * c[i]).sum())
            .collect();
        let magnetic = !matches!(spec.magnetic(), MagneticPotential::Zero)
            && a.components().iter().flatten().any(|x| *x != 0.0);
        let electric = v.values().iter().any(|x| *x != 0.0);
        let divergence_residual = check_coulomb_gauge(&spec, grid)?;
        Ok(Self {
            grid: grid.clone(),
            spec,
            a,
            v,
            a_sq,
            trapping,
            radial_v,
            k_sq: wavenumber_sq(grid),
            magnetic,
            electric,
            divergence_residual,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Potential description with the regularization resolved for this grid.
    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn magnetic_potential(&self) -> &VectorField {
        &self.a
    }

    pub fn electric_potential(&self) -> &RealField {
        &self.v
    }

    pub fn trapping(&self) -> &VectorField {
        &self.trapping
    }

    pub fn radial_derivative_v(&self) -> &RealField {
        &self.radial_v
    }

    pub fn has_magnetic(&self) -> bool {
        self.magnetic
    }

    pub fn has_electric(&self) -> bool {
        self.electric
    }

    pub fn divergence_residual(&self) -> f64 {
        self.divergence_residual
    }

    pub fn sup_a(&self) -> f64 {
        self.a_sq.iter().fold(0.0, |m: f64, v| m.max(*v)).sqrt()
    }

    pub fn sup_v(&self) -> f64 {
        self.v.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub(crate) fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    fn check(&self, u: &ComplexField) -> Result<()> {
        if u.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `(2i A·∇u + |A|² u + V u)` added into `out`, given the gradient of `u`.
    pub(crate) fn add_pointwise_terms(
        &self,
        u: &[Complex64],
        grad: Option<&[ComplexField]>,
        out: &mut [Complex64],
    ) {
        if self.magnetic {
            let grad = grad.expect("gradient required for magnetic terms");
            let comps = self.a.components();
            for (idx, o) in out.iter_mut().enumerate() {
                let mut adot = Complex64::new(0.0, 0.0);
                for (c, g) in comps.iter().zip(grad) {
                    adot += g.values()[idx] * c[idx];
                }
                *o += 2.0 * I * adot + u[idx] * self.a_sq[idx];
            }
        }
        if self.electric {
            for ((o, z), v) in out.iter_mut().zip(u).zip(self.v.values()) {
                *o += z * v;
            }
        }
    }
}

/// `(∇_A u)_j = ∂_j u − i A_j u`.
pub fn covariant_gradient(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<Vec<ComplexField>> {
    h.check(u)?;
    let mut grad = gradient_from_spectrum(&h.grid, &u.spectrum());
    if h.magnetic {
        for (g, a) in grad.iter_mut().zip(h.a.components()) {
            for ((gv, z), aj) in g.values_mut().iter_mut().zip(u.values()).zip(a) {
                *gv -= I * aj * z;
            }
        }
    }
    Ok(grad)
}

/// `Δu − 2i A·∇u − |A|² u`.
pub fn magnetic_laplacian(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<ComplexField> {
    h.check(u)?;
    let s = u.spectrum();
    let mut lap = laplacian_from_spectrum(&h.grid, &s);
    if h.magnetic {
        let grad = gradient_from_spectrum(&h.grid, &s);
        let comps = h.a.components();
        for (idx, o) in lap.values_mut().iter_mut().enumerate() {
            let mut adot = Complex64::new(0.0, 0.0);
            for (c, g) in comps.iter().zip(&grad) {
                adot += g.values()[idx] * c[idx];
            }
            *o -= 2.0 * I * adot + u.values()[idx] * h.a_sq[idx];
        }
    }
    Ok(lap)
}

/// `Σ_j (∂_j − i A_j)(∇_A u)_j`, valid without the gauge condition.
pub fn magnetic_laplacian_divergence_form(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<ComplexField> {
    let grad = covariant_gradient(u, h)?;
    let mut out = spectral_divergence(&grad)?;
    if h.magnetic {
        for (g, a) in grad.iter().zip(h.a.components()) {
            for ((o, gv), aj) in out.values_mut().iter_mut().zip(g.values()).zip(a) {
                *o -= I * aj * gv;
            }
        }
    }
    Ok(out)
}

/// `H u = −Δ_A u + V u`.
pub fn hamiltonian_apply(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<ComplexField> {
    h.check(u)?;
    let s = u.spectrum();
    let mut minus_lap = s.clone();
    for (c, k2) in minus_lap.iter_mut().zip(&h.k_sq) {
        *c *= *k2;
    }
    let mut out = ComplexField::from_spectrum(&h.grid, minus_lap);
    let grad = h.magnetic.then(|| gradient_from_spectrum(&h.grid, &s));
    h.add_pointwise_terms(u.values(), grad.as_deref(), out.values_mut());
    Ok(out)
}

/// `‖∇_A u‖²`.
pub fn covariant_gradient_norm_sq(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<f64> {
    Ok(covariant_gradient(u, h)?.iter().map(|g| g.mass()).sum())
}

/// `∫ V |u|²`.
pub fn potential_integral(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<f64> {
    h.check(u)?;
    if !h.electric {
        return Ok(0.0);
    }
    Ok(h.grid.cell_volume()
        * neumaier_sum(u.values().iter().zip(h.v.values()).map(|(z, v)| v * z.norm_sqr())))
}

/// `½‖∇_A u‖² + ½∫V|u|² − c/(p+1) ∫|u|^{p+1}`.
pub fn energy_schrodinger(u: &ComplexField, h: &DiscreteHamiltonian, nl: &Nonlinearity) -> Result<f64> {
    let kinetic = covariant_gradient_norm_sq(u, h)?;
    let potential = potential_integral(u, h)?;
    let nonlinear = if nl.is_linear() {
        0.0
    } else {
        nl.coupling / (nl.exponent + 1.0) * power_integral(u, nl.exponent)
    };
    Ok(0.5 * kinetic + 0.5 * potential - nonlinear)
}

/// `½‖u_t‖² + E_S(u)`.
pub fn energy_wave(
    u: &ComplexField,
    v: &ComplexField,
    h: &DiscreteHamiltonian,
    nl: &Nonlinearity,
) -> Result<f64> {
    h.check(v)?;
    Ok(0.5 * v.mass() + energy_schrodinger(u, h, nl)?)
}

/// `√(‖u‖² + ‖∇_A u‖²)`.
pub fn h1a_norm(u: &ComplexField, h: &DiscreteHamiltonian) -> Result<f64> {
    Ok((u.mass() + covariant_gradient_norm_sq(u, h)?).sqrt())
}
