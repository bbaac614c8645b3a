//! Magnetic and electric potential families, the antisymmetric field matrix
//! `B = DA - DAᵗ`, its trapping row `B_τ = (x/|x|) B`, and `∂_r V`.

mod hypotheses;

pub use hypotheses::{
    dyadic_decay_sum, hypothesis_report, kato_norm, kato_threshold, radial_tangential_norm,
    strichartz_threshold, AssumptionReport, HypothesisParams, InequalityCheck,
};

use crate::error::{Error, Result};
use crate::grid::{real_gradient, Grid, RealField, VectorField};

/// Real antisymmetric `n × n` matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl AntisymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![0.0; dim * dim] }
    }

    /// Validates `M = -Mᵗ` exactly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidPotential("matrix must be square and non-empty".into()));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("matrix entries must be finite".into()));
        }
        for i in 0..dim {
            for j in 0..dim {
                if entries[i * dim + j] != -entries[j * dim + i] {
                    return Err(Error::InvalidPotential(format!(
                        "matrix is not antisymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    fn set_pair(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = -v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|v| v * s).collect() }
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// Row vector `xᵗ M`.
    pub fn left_apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|j| (0..self.dim).map(|i| x[i] * self.get(i, j)).sum()).collect()
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j) == -self.get(j, i)))
    }

    /// Frobenius norm divided by `√2`; equals `|curl A|` in three dimensions.
    pub fn field_strength(&self) -> f64 {
        (self.entries.iter().map(|v| v * v).sum::<f64>() / 2.0).sqrt()
    }

    /// Matrix acting as `v ↦ ω × v`.
    pub fn from_axial(omega: [f64; 3]) -> Self {
        let mut m = Self::zeros(3);
        m.set_pair(0, 1, -omega[2]);
        m.set_pair(0, 2, omega[1]);
        m.set_pair(1, 2, -omega[0]);
        m
    }
}

/// Canonical rotation generator: `Ω₂` for `n = 2`, `diag(Ω_{n-1}, 0)` for odd
/// `n`, `diag(Ω_{n-2}, 0, 0)` for even `n ≥ 4`, where `Ω_{2k}` repeats `Ω₂`.
pub fn build_m(n: usize) -> Result<AntisymMatrix> {
    if n < 2 {
        return Err(Error::InvalidPotential(format!("dimension {n} < 2")));
    }
    let active = if n == 2 {
        2
    } else if n % 2 == 1 {
        n - 1
    } else {
        n - 2
    };
    let mut m = AntisymMatrix::zeros(n);
    for k in (0..active).step_by(2) {
        m.set_pair(k, k + 1, -1.0);
    }
    Ok(m)
}

/// Smooth radial cutoff: 1 inside `inner`, 0 beyond `outer`, quintic smoothstep between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taper {
    pub inner: f64,
    pub outer: f64,
}

impl Taper {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "taper radii must satisfy 0 < inner < outer, got ({inner}, {outer})"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// Radii `0.8 R` and `0.95 R`.
    pub fn for_extent(extent: f64) -> Self {
        Self { inner: 0.8 * extent, outer: 0.95 * extent }
    }

    /// `(χ(r), χ'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.inner {
            return (1.0, 0.0);
        }
        if r >= self.outer {
            return (0.0, 0.0);
        }
        let width = self.outer - self.inner;
        let s = (r - self.inner) / width;
        let smooth = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let slope = 30.0 * s * s * (1.0 - s) * (1.0 - s) / width;
        (1.0 - smooth, -slope)
    }
}

#[derive(Clone, Debug)]
pub enum MagneticPotential {
    Zero,
    /// `A = ½ M x`.
    LinearM(AntisymMatrix),
    /// `A = K x + b` for an arbitrary matrix `K`; used for custom analytic fields.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `A = (-y, x, 0) / |x|²` in three dimensions.
    SingularSpherical,
    /// `A = (-y, x, 0) / (x² + y²)` in three dimensions.
    SingularCylindrical,
    Sampled(VectorField),
}

#[derive(Clone, Debug)]
pub enum ElectricPotential {
    Zero,
    /// `V = c / (1 + |x|²)`.
    InverseQuadratic { strength: f64 },
    Sampled(RealField),
}

/// Declarative `(A, V)` pair.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    dim: usize,
    magnetic: MagneticPotential,
    electric: ElectricPotential,
    taper: Option<Taper>,
    regularization: Option<f64>,
}

impl PotentialSpec {
    pub fn new(dim: usize, magnetic: MagneticPotential, electric: ElectricPotential) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidPotential(format!("dimension {dim} < 2")));
        }
        match &magnetic {
            MagneticPotential::LinearM(m) if m.dim() != dim => {
                return Err(Error::InvalidPotential(format!(
                    "matrix dimension {} does not match {dim}",
                    m.dim()
                )))
            }
            MagneticPotential::Affine { matrix, offset } => {
                if matrix.len() != dim
                    || matrix.iter().any(|r| r.len() != dim)
                    || offset.len() != dim
                {
                    return Err(Error::InvalidPotential(format!(
                        "affine field needs a {dim}×{dim} matrix and a {dim}-vector"
                    )));
                }
            }
            MagneticPotential::SingularSpherical | MagneticPotential::SingularCylindrical
                if dim != 3 =>
            {
                return Err(Error::InvalidPotential(
                    "singular magnetic families are three-dimensional".into(),
                ))
            }
            MagneticPotential::Sampled(a) if a.grid().dim() != dim => {
                return Err(Error::InvalidPotential("sampled A has wrong dimension".into()))
            }
            _ => {}
        }
        match &electric {
            ElectricPotential::InverseQuadratic { strength } if !strength.is_finite() => {
                return Err(Error::InvalidPotential("electric strength must be finite".into()))
            }
            ElectricPotential::Sampled(v) if v.grid().dim() != dim => {
                return Err(Error::InvalidPotential("sampled V has wrong dimension".into()))
            }
            _ => {}
        }
        Ok(Self { dim, magnetic, electric, taper: None, regularization: None })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, MagneticPotential::Zero, ElectricPotential::Zero)
    }

    /// Multiplies the linear family by `taper`; other families are unaffected.
    pub fn with_taper(mut self, taper: Option<Taper>) -> Self {
        self.taper = taper;
        self
    }

    /// Replaces `|x|` by `√(|x|² + ε²)` in singular denominators.
    pub fn with_regularization(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidPotential(format!("regularization {eps} must be >= 0")));
        }
        self.regularization = Some(eps);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn magnetic(&self) -> &MagneticPotential {
        &self.magnetic
    }

    pub fn electric(&self) -> &ElectricPotential {
        &self.electric
    }

    pub fn taper(&self) -> Option<Taper> {
        self.taper
    }

    pub fn regularization(&self) -> Option<f64> {
        self.regularization
    }

    /// `ε` used on `grid`: the explicit value, or `2h` for singular families.
    pub fn effective_regularization(&self, grid: &Grid) -> f64 {
        match (self.regularization, &self.magnetic) {
            (Some(eps), _) => eps,
            (
                None,
                MagneticPotential::SingularSpherical | MagneticPotential::SingularCylindrical,
            ) => 2.0 * grid.spacing(),
            _ => 0.0,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(
            self.magnetic,
            MagneticPotential::SingularSpherical | MagneticPotential::SingularCylindrical
        )
    }

    /// Copy with the grid-dependent default regularization made explicit.
    pub fn resolved_for(&self, grid: &Grid) -> Self {
        let mut out = self.clone();
        out.regularization = Some(self.effective_regularization(grid));
        out
    }

    fn eps(&self) -> f64 {
        self.regularization.unwrap_or(0.0)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidPotential(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Squared singular radius (spherical or cylindrical), regularized.
    fn singular_radius_sq(&self, x: &[f64]) -> Result<f64> {
        let eps = self.eps();
        let base = match self.magnetic {
            MagneticPotential::SingularSpherical => x[0] * x[0] + x[1] * x[1] + x[2] * x[2],
            _ => x[0] * x[0] + x[1] * x[1],
        };
        let rho2 = base + eps * eps;
        if rho2 == 0.0 {
            return Err(Error::SingularPoint(x.to_vec()));
        }
        Ok(rho2)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Magnetic potential at `x`.
pub fn eval_a(spec: &PotentialSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.check_point(x)?;
    let n = spec.dim;
    Ok(match &spec.magnetic {
        MagneticPotential::Zero => vec![0.0; n],
        MagneticPotential::LinearM(m) => {
            let chi = spec.taper.map_or(1.0, |t| t.eval(norm(x)).0);
            m.apply(x).into_iter().map(|v| 0.5 * chi * v).collect()
        }
        MagneticPotential::Affine { matrix, offset } => matrix
            .iter()
            .zip(offset)
            .map(|(row, b)| row.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + b)
            .collect(),
        MagneticPotential::SingularSpherical | MagneticPotential::SingularCylindrical => {
            let rho2 = spec.singular_radius_sq(x)?;
            vec![-x[1] / rho2, x[0] / rho2, 0.0]
        }
        MagneticPotential::Sampled(_) => return Err(Error::NotPointwise("A")),
    })
}

/// Divergence of `A` at `x`, arranged so that exactly divergence-free families give 0.
pub fn divergence_a(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    let n = spec.dim;
    Ok(match &spec.magnetic {
        MagneticPotential::Zero => 0.0,
        MagneticPotential::LinearM(m) => {
            // div(χ ½Mx) = ½χ tr M + (χ'/2r) xᵗMx; pair (i,j) with (j,i) so antisymmetry cancels exactly
            let mut trace = 0.0;
            let mut quad = 0.0;
            for i in 0..n {
                trace += m.get(i, i);
                quad += m.get(i, i) * x[i] * x[i];
                for j in i + 1..n {
                    quad += x[i] * x[j] * (m.get(i, j) + m.get(j, i));
                }
            }
            match spec.taper {
                Some(t) => {
                    let r = norm(x);
                    let (chi, dchi) = t.eval(r);
                    let radial = if r > 0.0 { dchi / (2.0 * r) * quad } else { 0.0 };
                    0.5 * chi * trace + radial
                }
                None => 0.5 * trace,
            }
        }
        MagneticPotential::Affine { matrix, .. } => (0..n).map(|i| matrix[i][i]).sum(),
        MagneticPotential::SingularSpherical | MagneticPotential::SingularCylindrical => {
            let rho2 = spec.singular_radius_sq(x)?;
            // ∂_x(-y/ρ²) + ∂_y(x/ρ²) = 2xy/ρ⁴ - 2xy/ρ⁴
            let a = 2.0 * x[0] * x[1] / (rho2 * rho2);
            a - a
        }
        MagneticPotential::Sampled(_) => return Err(Error::NotPointwise("div A")),
    })
}

/// Field matrix `B_ij = ∂_j A_i - ∂_i A_j` at `x`.
///
/// Singular families use the closed-form field of the unregularized potential
/// with `|x|` replaced by its regularized value.
pub fn eval_b(spec: &PotentialSpec, x: &[f64]) -> Result<AntisymMatrix> {
    spec.check_point(x)?;
    let n = spec.dim;
    Ok(match &spec.magnetic {
        MagneticPotential::Zero => AntisymMatrix::zeros(n),
        MagneticPotential::LinearM(m) => match spec.taper {
            None => m.clone(),
            Some(t) => {
                let r = norm(x);
                let (chi, dchi) = t.eval(r);
                let mut b = m.scaled(chi);
                if dchi != 0.0 {
                    let mx = m.apply(x);
                    let c = dchi / (2.0 * r);
                    for i in 0..n {
                        for j in i + 1..n {
                            let v = b.get(i, j) + c * (mx[i] * x[j] - x[i] * mx[j]);
                            b.set_pair(i, j, v);
                        }
                    }
                }
                b
            }
        },
        MagneticPotential::Affine { matrix, .. } => {
            let mut b = AntisymMatrix::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    b.set_pair(i, j, matrix[i][j] - matrix[j][i]);
                }
            }
            b
        }
        MagneticPotential::SingularSpherical => {
            let rho2 = spec.singular_radius_sq(x)?;
            let c = 2.0 * x[2] / (rho2 * rho2);
            AntisymMatrix::from_axial([c * x[0], c * x[1], c * x[2]])
        }
        MagneticPotential::SingularCylindrical => {
            spec.singular_radius_sq(x)?;
            AntisymMatrix::zeros(3)
        }
        MagneticPotential::Sampled(_) => return Err(Error::NotPointwise("B")),
    })
}

/// Row vector `(x/|x|) B(x)`.
pub fn trapping_component(spec: &PotentialSpec, x: &[f64]) -> Result<Vec<f64>> {
    let r = {
        spec.check_point(x)?;
        norm(x)
    };
    if r == 0.0 {
        if spec.is_singular() && spec.eps() > 0.0 {
            return Ok(vec![0.0; spec.dim]);
        }
        return Err(Error::SingularPoint(x.to_vec()));
    }
    let b = eval_b(spec, x)?;
    Ok(b.left_apply(x).into_iter().map(|v| v / r).collect())
}

/// Electric potential at `x`.
pub fn eval_v(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    Ok(match &spec.electric {
        ElectricPotential::Zero => 0.0,
        ElectricPotential::InverseQuadratic { strength } => {
            strength / (1.0 + x.iter().map(|v| v * v).sum::<f64>())
        }
        ElectricPotential::Sampled(_) => return Err(Error::NotPointwise("V")),
    })
}

/// `∇V · x/|x|`; zero at the origin.
pub fn radial_derivative_v(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    Ok(match &spec.electric {
        ElectricPotential::Zero => 0.0,
        ElectricPotential::InverseQuadratic { strength } => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            -2.0 * strength * r2.sqrt() / ((1.0 + r2) * (1.0 + r2))
        }
        ElectricPotential::Sampled(_) => return Err(Error::NotPointwise("∂_r V")),
    })
}

/// Samples `A` on `grid` using the resolved regularization.
pub fn sample_a(spec: &PotentialSpec, grid: &Grid) -> Result<VectorField> {
    check_dim(spec, grid)?;
    if let MagneticPotential::Sampled(a) = &spec.magnetic {
        return same_grid(a.grid(), grid).map(|_| a.clone());
    }
    let spec = spec.resolved_for(grid);
    sample_vector(grid, |x| eval_a(&spec, x))
}

/// Samples `V` on `grid`.
pub fn sample_v(spec: &PotentialSpec, grid: &Grid) -> Result<RealField> {
    check_dim(spec, grid)?;
    if let ElectricPotential::Sampled(v) = &spec.electric {
        return same_grid(v.grid(), grid).map(|_| v.clone());
    }
    sample_scalar(grid, |x| eval_v(spec, x))
}

/// Samples `B_τ`; the origin sample is set to 0 (it only enters with a factor `|x|`).
pub fn sample_trapping(spec: &PotentialSpec, grid: &Grid) -> Result<VectorField> {
    check_dim(spec, grid)?;
    let spec = spec.resolved_for(grid);
    if let MagneticPotential::Sampled(a) = &spec.magnetic {
        same_grid(a.grid(), grid)?;
        let jac: Vec<VectorField> =
            a.components().iter().map(|c| real_gradient(&RealField::from_values(grid, c.clone()).unwrap())).collect();
        let n = grid.dim();
        let mut out = vec![vec![0.0; grid.len()]; n];
        grid.for_each_point(|idx, x| {
            let r = norm(x);
            if r == 0.0 {
                return;
            }
            for (j, o) in out.iter_mut().enumerate() {
                // Σ_i x_i (∂_j A_i − ∂_i A_j)
                o[idx] = (0..n)
                    .map(|i| x[i] * (jac[i].component(j)[idx] - jac[j].component(i)[idx]))
                    .sum::<f64>()
                    / r;
            }
        });
        return VectorField::from_components(grid, out);
    }
    sample_vector(grid, |x| {
        if norm(x) == 0.0 {
            Ok(vec![0.0; x.len()])
        } else {
            trapping_component(&spec, x)
        }
    })
}

/// Field matrix of a sampled potential via the antisymmetrized spectral Jacobian.
/// Entry `[i][j]` holds the samples of `B_ij`.
pub fn sampled_field_matrix(a: &VectorField) -> Vec<Vec<Vec<f64>>> {
    let grid = a.grid();
    let n = grid.dim();
    let jac: Vec<VectorField> = a
        .components()
        .iter()
        .map(|c| real_gradient(&RealField::from_values(grid, c.clone()).unwrap()))
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    jac[i].component(j).iter().zip(jac[j].component(i)).map(|(a, b)| a - b).collect()
                })
                .collect()
        })
        .collect()
}

/// Samples `|B|` (Frobenius norm over `√2`).
pub fn sample_field_strength(spec: &PotentialSpec, grid: &Grid) -> Result<RealField> {
    check_dim(spec, grid)?;
    let spec = spec.resolved_for(grid);
    if let MagneticPotential::Sampled(a) = &spec.magnetic {
        same_grid(a.grid(), grid)?;
        let b = sampled_field_matrix(a);
        let n = grid.dim();
        let vals = (0..grid.len())
            .map(|idx| {
                let s: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| b[i][j][idx].powi(2)).sum();
                (s / 2.0).sqrt()
            })
            .collect();
        return RealField::from_values(grid, vals);
    }
    sample_scalar(grid, |x| eval_b(&spec, x).map(|b| b.field_strength()))
}

/// Samples `∂_r V`. Sampled potentials use centered differences on the lattice axes.
pub fn sample_radial_derivative_v(spec: &PotentialSpec, grid: &Grid) -> Result<RealField> {
    check_dim(spec, grid)?;
    if let ElectricPotential::Sampled(v) = &spec.electric {
        same_grid(v.grid(), grid)?;
        let n = grid.dim();
        let np = grid.points_per_axis();
        let h = grid.spacing();
        let vals = v.values();
        let mut out = vec![0.0; grid.len()];
        grid.for_each_point(|idx, x| {
            let r = norm(x);
            if r == 0.0 {
                return;
            }
            let mut acc = 0.0;
            for axis in 0..n {
                let stride = np.pow((n - 1 - axis) as u32);
                let i = (idx / stride) % np;
                let up = idx - i * stride + ((i + 1) % np) * stride;
                let down = idx - i * stride + ((i + np - 1) % np) * stride;
                acc += (vals[up] - vals[down]) / (2.0 * h) * x[axis] / r;
            }
            out[idx] = acc;
        });
        return RealField::from_values(grid, out);
    }
    sample_scalar(grid, |x| radial_derivative_v(spec, x))
}

/// Sup over the grid of `|div A|`: analytic for built-in families, spectral for sampled ones.
pub fn check_coulomb_gauge(spec: &PotentialSpec, grid: &Grid) -> Result<f64> {
    check_dim(spec, grid)?;
    if let MagneticPotential::Sampled(a) = &spec.magnetic {
        same_grid(a.grid(), grid)?;
        let mut div = vec![0.0; grid.len()];
        for (j, c) in a.components().iter().enumerate() {
            let g = real_gradient(&RealField::from_values(grid, c.clone())?);
            for (d, v) in div.iter_mut().zip(g.component(j)) {
                *d += v;
            }
        }
        return Ok(div.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    }
    let spec = spec.resolved_for(grid);
    let mut sup: f64 = 0.0;
    let mut err = None;
    grid.for_each_point(|_, x| {
        if err.is_some() {
            return;
        }
        match divergence_a(&spec, x) {
            Ok(v) => sup = sup.max(v.abs()),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(sup),
    }
}

fn check_dim(spec: &PotentialSpec, grid: &Grid) -> Result<()> {
    if spec.dim != grid.dim() {
        return Err(Error::InvalidPotential(format!(
            "potential dimension {} does not match grid dimension {}",
            spec.dim,
            grid.dim()
        )));
    }
    Ok(())
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn sample_vector<F: FnMut(&[f64]) -> Result<Vec<f64>>>(grid: &Grid, mut f: F) -> Result<VectorField> {
    let n = grid.dim();
    let mut comps = vec![vec![0.0; grid.len()]; n];
    let mut err = None;
    grid.for_each_point(|idx, x| {
        if err.is_some() {
            return;
        }
        match f(x) {
            Ok(v) => {
                for (c, val) in comps.iter_mut().zip(v) {
                    c[idx] = val;
                }
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => VectorField::from_components(grid, comps),
    }
}

fn sample_scalar<F: FnMut(&[f64]) -> Result<f64>>(grid: &Grid, mut f: F) -> Result<RealField> {
    let mut vals = vec![0.0; grid.len()];
    let mut err = None;
    grid.for_each_point(|idx, x| {
        if err.is_some() {
            return;
        }
        match f(x) {
            Ok(v) => vals[idx] = v,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => RealField::from_values(grid, vals),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn linear(n: usize) -> PotentialSpec {
        PotentialSpec::new(n, MagneticPotential::LinearM(build_m(n).unwrap()), ElectricPotential::Zero)
            .unwrap()
    }

    #[test]
    fn canonical_matrices() {
        assert_eq!(build_m(2).unwrap().rows(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert_eq!(
            build_m(3).unwrap().rows(),
            vec![vec![0.0, -1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]
        );
        let m4 = build_m(4).unwrap().rows();
        assert_eq!(m4[0], vec![0.0, -1.0, 0.0, 0.0]);
        assert_eq!(m4[1], vec![1.0, 0.0, 0.0, 0.0]);
        assert!(m4[2].iter().chain(&m4[3]).all(|v| *v == 0.0));
        let m6 = build_m(6).unwrap();
        assert_eq!(m6.get(2, 3), -1.0);
        assert_eq!(m6.get(4, 5), 0.0);
        assert!(build_m(1).is_err());
    }

    #[test]
    fn null_vectors_match_zero_blocks() {
        for n in 2..=7 {
            let m = build_m(n).unwrap();
            let rank = match n {
                2 => 2,
                _ if n % 2 == 1 => n - 1,
                _ => n - 2,
            };
            for k in 0..n {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                let killed = m.apply(&e).iter().all(|v| *v == 0.0);
                assert_eq!(killed, k >= rank, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn rejects_non_antisymmetric_input() {
        assert!(AntisymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(AntisymMatrix::from_rows(&[vec![0.0, 2.0], vec![-2.0, 0.0]]).is_ok());
    }

    #[test]
    fn potential_values() {
        assert_eq!(eval_a(&linear(3), &[1.0, 2.0, 3.0]).unwrap(), vec![-1.0, 0.5, 0.0]);
        let s = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero)
            .unwrap();
        assert_eq!(eval_a(&s, &[1.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(matches!(eval_a(&s, &[0.0, 0.0, 0.0]), Err(Error::SingularPoint(_))));
        let c = PotentialSpec::new(3, MagneticPotential::SingularCylindrical, ElectricPotential::Zero)
            .unwrap();
        assert!(eval_a(&c, &[0.0, 0.0, 2.0]).is_err());
        let c = c.with_regularization(0.1).unwrap();
        assert!(eval_a(&c, &[0.0, 0.0, 2.0]).is_ok());

        let b = 1.7;
        let scaled = PotentialSpec::new(
            3,
            MagneticPotential::LinearM(build_m(3).unwrap().scaled(b)),
            ElectricPotential::Zero,
        )
        .unwrap();
        let x = [0.3, -1.2, 2.0];
        let a = eval_a(&scaled, &x).unwrap();
        assert_eq!(a, vec![b / 2.0 * 1.2, b / 2.0 * 0.3, 0.0]);
    }

    #[test]
    fn singular_families_need_three_dimensions() {
        assert!(PotentialSpec::new(2, MagneticPotential::SingularSpherical, ElectricPotential::Zero).is_err());
        assert!(PotentialSpec::new(3, MagneticPotential::LinearM(build_m(2).unwrap()), ElectricPotential::Zero).is_err());
    }

    #[test]
    fn linear_field_and_trapping_row() {
        assert_eq!(eval_b(&linear(3), &[0.4, 1.0, -2.0]).unwrap(), build_m(3).unwrap());
        let bt = trapping_component(&linear(2), &[1.0, 0.0]).unwrap();
        assert_eq!(bt, vec![0.0, -1.0]);
        assert!(trapping_component(&linear(2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn spherical_field_is_radial_and_closed_form() {
        let s = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero)
            .unwrap();
        let x = [0.5, -0.7, 1.1];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let b = eval_b(&s, &x).unwrap();
        // B acts as ω × v with ω = 2z x / |x|⁴
        let c = 2.0 * x[2] / (r2 * r2);
        assert!((b.get(2, 1) - c * x[0]).abs() < 1e-15);
        assert!((b.get(0, 2) - c * x[1]).abs() < 1e-15);
        assert!((b.get(1, 0) - c * x[2]).abs() < 1e-15);
        let bt = trapping_component(&s, &x).unwrap();
        assert!(bt.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn spherical_closed_form_matches_finite_difference_curl() {
        let s = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero)
            .unwrap();
        let x = [0.8, 0.3, -0.6];
        let h = 1e-5;
        let d = |i: usize, j: usize| {
            let mut p = x;
            let mut m = x;
            p[j] += h;
            m[j] -= h;
            (eval_a(&s, &p).unwrap()[i] - eval_a(&s, &m).unwrap()[i]) / (2.0 * h)
        };
        let b = eval_b(&s, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b.get(i, j) - (d(i, j) - d(j, i))).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn electric_family() {
        let c = 0.7;
        let spec = PotentialSpec::new(2, MagneticPotential::Zero, ElectricPotential::InverseQuadratic { strength: c })
            .unwrap();
        for x in [[0.3, 0.4], [2.0, -1.0], [0.0, 5.0]] {
            let r2: f64 = x[0] * x[0] + x[1] * x[1];
            let r = r2.sqrt();
            let vr = radial_derivative_v(&spec, &x).unwrap();
            assert!((vr + 2.0 * c * r / (1.0 + r2).powi(2)).abs() < 1e-15);
            let cond = eval_v(&spec, &x).unwrap() + 0.5 * r * vr;
            assert!((cond - c / (1.0 + r2).powi(2)).abs() < 1e-15);
        }
        assert_eq!(radial_derivative_v(&PotentialSpec::zero(2).unwrap(), &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn sampled_radial_derivative_approximates_analytic() {
        let g = make_grid(2, 8.0, 128).unwrap();
        let spec = PotentialSpec::new(2, MagneticPotential::Zero, ElectricPotential::InverseQuadratic { strength: 1.0 })
            .unwrap();
        let v = sample_v(&spec, &g).unwrap();
        let sampled = PotentialSpec::new(2, MagneticPotential::Zero, ElectricPotential::Sampled(v)).unwrap();
        let fd = sample_radial_derivative_v(&sampled, &g).unwrap();
        let exact = sample_radial_derivative_v(&spec, &g).unwrap();
        let err = fd.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-2, "err {err}");
    }

    #[test]
    fn coulomb_gauge_residuals() {
        let g = make_grid(3, 6.0, 16).unwrap();
        assert_eq!(check_coulomb_gauge(&linear(3), &g).unwrap(), 0.0);
        let tapered = linear(3).with_taper(Some(Taper::for_extent(6.0)));
        assert_eq!(check_coulomb_gauge(&tapered, &g).unwrap(), 0.0);
        let s = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero).unwrap();
        assert!(check_coulomb_gauge(&s, &g).unwrap() <= 1e-12);
        let aff = PotentialSpec::new(
            3,
            MagneticPotential::Affine {
                matrix: vec![vec![1.0, 0.0, 0.0], vec![0.0; 3], vec![0.0; 3]],
                offset: vec![0.0; 3],
            },
            ElectricPotential::Zero,
        )
        .unwrap();
        assert_eq!(check_coulomb_gauge(&aff, &g).unwrap(), 1.0);
    }

    #[test]
    fn unregularized_singular_sampling_fails_at_origin() {
        let g = make_grid(3, 4.0, 8).unwrap();
        let s = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero)
            .unwrap()
            .with_regularization(0.0)
            .unwrap();
        assert!(matches!(sample_a(&s, &g), Err(Error::SingularPoint(_))));
        let d = PotentialSpec::new(3, MagneticPotential::SingularSpherical, ElectricPotential::Zero).unwrap();
        assert_eq!(d.effective_regularization(&g), 2.0);
        assert!(sample_a(&d, &g).unwrap().is_finite());
    }

    #[test]
    fn taper_profile() {
        let t = Taper::for_extent(10.0);
        assert_eq!(t.eval(7.9), (1.0, 0.0));
        assert_eq!(t.eval(9.6), (0.0, 0.0));
        let (mid, dmid) = t.eval(8.75);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!((dmid + 30.0 / 16.0 / 1.5).abs() < 1e-12);
        let h = 1e-6;
        let fd = (t.eval(8.3 + h).0 - t.eval(8.3 - h).0) / (2.0 * h);
        assert!((fd - t.eval(8.3).1).abs() < 1e-7);
    }

    #[test]
    fn tapered_field_matches_finite_differences() {
        let spec = linear(3).with_taper(Some(Taper::new(1.0, 2.0).unwrap()));
        let x = [0.9, 0.7, 0.4];
        let h = 1e-5;
        let d = |i: usize, j: usize| {
            let mut p = x;
            let mut m = x;
            p[j] += h;
            m[j] -= h;
            (eval_a(&spec, &p).unwrap()[i] - eval_a(&spec, &m).unwrap()[i]) / (2.0 * h)
        };
        let b = eval_b(&spec, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b.get(i, j) - (d(i, j) - d(j, i))).abs() < 1e-8);
            }
        }
        let bt = trapping_component(&spec, &x).unwrap();
        let dot: f64 = bt.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-14);
    }
}
