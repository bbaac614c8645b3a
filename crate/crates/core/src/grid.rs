//! Periodic lattice on the centered box `[-R, R)^n`, sampled fields, and the
//! transform-based calculus used by every other module.
//!
//! Samples are stored row-major with axis 0 varying slowest. Forward
//! transforms are unnormalized; inverse transforms divide by `N^n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported dimension. The memory guard already implies it for `N >= 8`.
pub const MAX_DIM: usize = 8;

/// Upper bound on `n * log2(N)`, i.e. at most `2^24` lattice points.
pub const MEMORY_GUARD_LOG2: u32 = 24;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct GridInner {
    dim: usize,
    extent: f64,
    points: usize,
    spacing: f64,
    axis: Vec<f64>,
    freq: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    radius: OnceLock<Vec<f64>>,
}

/// Uniform periodic lattice with its frequency lattice. Cheap to clone.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("extent", &self.inner.extent)
            .field("points", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.extent.to_bits() == other.inner.extent.to_bits())
    }
}

/// Builds the lattice `x_i = -R + i h`, `h = 2R/N`, with wavenumbers
/// `(pi/R) m`, `m in {-N/2, ..., N/2 - 1}`.
pub fn make_grid(dim: usize, extent: f64, points: usize) -> Result<Grid> {
    if dim < 2 {
        return Err(Error::InvalidGrid(format!("dimension {dim} < 2")));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::InvalidGrid(format!("extent {extent} must be positive")));
    }
    if points < 8 || !points.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "points per axis {points} must be a power of two >= 8"
        )));
    }
    let log2 = points.trailing_zeros();
    if dim as u32 * log2 > MEMORY_GUARD_LOG2 {
        return Err(Error::InvalidGrid(format!(
            "{points}^{dim} lattice exceeds the memory guard of 2^{MEMORY_GUARD_LOG2} points"
        )));
    }
    let spacing = 2.0 * extent / points as f64;
    let axis = (0..points).map(|i| -extent + i as f64 * spacing).collect();
    let base = PI / extent;
    let half = points / 2;
    let freq = (0..points)
        .map(|j| {
            let m = if j < half { j as f64 } else { j as f64 - points as f64 };
            base * m
        })
        .collect();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(points);
    let inverse = planner.plan_fft_inverse(points);
    Ok(Grid {
        inner: Arc::new(GridInner {
            dim,
            extent,
            points,
            spacing,
            axis,
            freq,
            forward,
            inverse,
            radius: OnceLock::new(),
        }),
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn extent(&self) -> f64 {
        self.inner.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of lattice points `N^n`.
    pub fn len(&self) -> usize {
        self.inner.points.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Physical coordinates along one axis.
    pub fn axis_coords(&self) -> &[f64] {
        &self.inner.axis
    }

    /// Wavenumbers in transform order (`0, 1, ..., N/2-1, -N/2, ..., -1` times `pi/R`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.freq
    }

    /// Largest `|k_j|` on one axis, `(pi/R) N/2`.
    pub fn max_wavenumber(&self) -> f64 {
        PI / self.inner.extent * (self.inner.points / 2) as f64
    }

    /// Index of the lattice point `x = 0`.
    pub fn origin_index(&self) -> usize {
        let half = self.inner.points / 2;
        (0..self.inner.dim).fold(0, |acc, _| acc * self.inner.points + half)
    }

    /// Writes the coordinates of lattice point `idx` into `out[..dim]`.
    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let n = self.inner.points;
        let mut rest = idx;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = self.inner.axis[rest % n];
            rest /= n;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.inner.dim];
        self.coords(idx, &mut out);
        out
    }

    /// Writes the wavevector of transform index `idx` into `out[..dim]`.
    pub fn wavevector(&self, idx: usize, out: &mut [f64]) {
        let n = self.inner.points;
        let mut rest = idx;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = self.inner.freq[rest % n];
            rest /= n;
        }
    }

    /// Visits every lattice point in storage order.
    pub fn for_each_point<F: FnMut(usize, &[f64])>(&self, mut f: F) {
        let dim = self.inner.dim;
        let n = self.inner.points;
        let mut multi = [0usize; MAX_DIM];
        let mut x = [0.0; MAX_DIM];
        x[..dim].fill(self.inner.axis[0]);
        for idx in 0..self.len() {
            f(idx, &x[..dim]);
            let mut axis = dim;
            while axis > 0 {
                axis -= 1;
                multi[axis] += 1;
                if multi[axis] < n {
                    x[axis] = self.inner.axis[multi[axis]];
                    break;
                }
                multi[axis] = 0;
                x[axis] = self.inner.axis[0];
            }
        }
    }

    /// Visits every frequency-lattice point in transform order.
    pub fn for_each_wavevector<F: FnMut(usize, &[f64])>(&self, mut f: F) {
        let dim = self.inner.dim;
        let n = self.inner.points;
        let mut multi = [0usize; MAX_DIM];
        let mut k = [0.0; MAX_DIM];
        for idx in 0..self.len() {
            f(idx, &k[..dim]);
            let mut axis = dim;
            while axis > 0 {
                axis -= 1;
                multi[axis] += 1;
                if multi[axis] < n {
                    k[axis] = self.inner.freq[multi[axis]];
                    break;
                }
                multi[axis] = 0;
                k[axis] = 0.0;
            }
        }
    }

    /// `|x|` at every lattice point (untapered, cached).
    pub fn radius(&self) -> &[f64] {
        self.inner.radius.get_or_init(|| {
            let mut r = vec![0.0; self.len()];
            self.for_each_point(|idx, x| {
                r[idx] = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            });
            r
        })
    }

    fn check(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// In-place n-dimensional transform. The inverse includes the `1/N^n` factor.
    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len(), "buffer length does not match grid");
        let n = self.inner.points;
        let dim = self.inner.dim;
        let fft = if inverse { &self.inner.inverse } else { &self.inner.forward };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        let mut buf: Vec<Complex64> = Vec::new();
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            buf.resize(block, ZERO);
            for chunk in data.chunks_exact_mut(block) {
                for j in 0..n {
                    let row = &chunk[j * stride..(j + 1) * stride];
                    for (i, &c) in row.iter().enumerate() {
                        buf[i * n + j] = c;
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..n {
                    let row = &mut chunk[j * stride..(j + 1) * stride];
                    for (i, c) in row.iter_mut().enumerate() {
                        *c = buf[i * n + j];
                    }
                }
            }
        }
        if inverse {
            let norm = 1.0 / self.len() as f64;
            for c in data.iter_mut() {
                *c *= norm;
            }
        }
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Complex samples on a grid.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Real scalar samples on a grid.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

/// Real vector samples on a grid, one component array per axis.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![ZERO; grid.len()] }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(grid: &Grid, mut f: F) -> Self {
        let mut values = vec![ZERO; grid.len()];
        grid.for_each_point(|idx, x| values[idx] = f(x));
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// True when any sample is non-finite.
    pub fn diverged(&self) -> bool {
        !self.is_finite()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| {
            let a = c.norm();
            if a.is_nan() || a > m {
                if a.is_nan() {
                    f64::NAN
                } else {
                    a
                }
            } else {
                m
            }
        })
    }

    /// `∫ |u|^2`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * neumaier_sum(self.values.iter().map(|c| c.norm_sqr()))
    }

    /// `∫ u dx`.
    pub fn integral(&self) -> Complex64 {
        let w = self.grid.cell_volume();
        Complex64::new(
            w * neumaier_sum(self.values.iter().map(|c| c.re)),
            w * neumaier_sum(self.values.iter().map(|c| c.im)),
        )
    }

    /// `⟨u, v⟩ = ∫ u conj(v)`.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        debug_assert!(self.grid == other.grid);
        let w = self.grid.cell_volume();
        let prods: Vec<Complex64> =
            self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).collect();
        Complex64::new(
            w * neumaier_sum(prods.iter().map(|c| c.re)),
            w * neumaier_sum(prods.iter().map(|c| c.im)),
        )
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|c| c * s).collect() }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: Complex64, other: &ComplexField) -> Self {
        debug_assert!(self.grid == other.grid);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn map<F: FnMut(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().copied().map(f).collect() }
    }

    /// Unnormalized forward transform.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.values.clone();
        self.grid.transform(&mut s, false);
        s
    }

    /// Field whose forward transform is `spectrum`.
    pub fn from_spectrum(grid: &Grid, mut spectrum: Vec<Complex64>) -> Self {
        grid.transform(&mut spectrum, true);
        Self { grid: grid.clone(), values: spectrum }
    }
}

impl RealField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: &Grid, mut f: F) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|idx, x| values[idx] = f(x));
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * neumaier_sum(self.values.iter().copied())
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), components: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    /// Samples `f(x, out)` where `out` has one slot per component.
    pub fn from_fn<F: FnMut(&[f64], &mut [f64])>(grid: &Grid, mut f: F) -> Self {
        let dim = grid.dim();
        let mut components = vec![vec![0.0; grid.len()]; dim];
        let mut out = vec![0.0; dim];
        grid.for_each_point(|idx, x| {
            out.iter_mut().for_each(|o| *o = 0.0);
            f(x, &mut out);
            for (c, o) in components.iter_mut().zip(&out) {
                c[idx] = *o;
            }
        });
        Self { grid: grid.clone(), components }
    }

    pub fn from_components(grid: &Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid(format!(
                "vector field needs {} components of {} samples",
                grid.dim(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), components })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Component-wise sum.
    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.grid.check(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self { grid: self.grid.clone(), components })
    }
}

/// Field data that can be integrated with the lattice rule.
pub trait Quadrature {
    type Output;
    fn quadrature(&self) -> Self::Output;
}

impl Quadrature for RealField {
    type Output = f64;
    fn quadrature(&self) -> f64 {
        self.integral()
    }
}

impl Quadrature for ComplexField {
    type Output = Complex64;
    fn quadrature(&self) -> Complex64 {
        self.integral()
    }
}

/// `h^n * Σ samples`.
pub fn quadrature<F: Quadrature>(f: &F) -> F::Output {
    f.quadrature()
}

/// `h^n / N^n * Σ |û|^2`, the spectral side of Parseval's identity.
pub fn spectral_mass(u: &ComplexField) -> f64 {
    let s = u.spectrum();
    u.grid.cell_volume() / u.grid.len() as f64 * neumaier_sum(s.iter().map(|c| c.norm_sqr()))
}

/// Multiplies each spectral coefficient by `i k_axis` in place.
pub(crate) fn apply_derivative(grid: &Grid, spectrum: &mut [Complex64], axis: usize) {
    let n = grid.points_per_axis();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    let freq = grid.wavenumbers();
    for (idx, c) in spectrum.iter_mut().enumerate() {
        let k = freq[(idx / stride) % n];
        *c = Complex64::new(-k * c.im, k * c.re);
    }
}

/// `|k|^2` in transform order.
pub(crate) fn wavenumber_sq(grid: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    grid.for_each_wavevector(|idx, k| out[idx] = k.iter().map(|v| v * v).sum());
    out
}

/// Gradient from an already transformed field.
pub(crate) fn gradient_from_spectrum(grid: &Grid, spectrum: &[Complex64]) -> Vec<ComplexField> {
    (0..grid.dim())
        .map(|axis| {
            let mut s = spectrum.to_vec();
            apply_derivative(grid, &mut s, axis);
            ComplexField::from_spectrum(grid, s)
        })
        .collect()
}

/// Laplacian from an already transformed field.
pub(crate) fn laplacian_from_spectrum(grid: &Grid, spectrum: &[Complex64]) -> ComplexField {
    let mut s = spectrum.to_vec();
    grid.for_each_wavevector(|i, k| {
        let k2: f64 = k.iter().map(|v| v * v).sum();
        s[i] *= -k2;
    });
    ComplexField::from_spectrum(grid, s)
}

/// Component `j` is the inverse transform of `i k_j û`.
pub fn spectral_gradient(u: &ComplexField) -> Vec<ComplexField> {
    gradient_from_spectrum(&u.grid, &u.spectrum())
}

/// Inverse transform of `-|k|^2 û`.
pub fn spectral_laplacian(u: &ComplexField) -> ComplexField {
    laplacian_from_spectrum(&u.grid, &u.spectrum())
}

/// `Σ_j ∂_j w_j` computed spectrally.
pub fn spectral_divergence(w: &[ComplexField]) -> Result<ComplexField> {
    let grid = w
        .first()
        .map(|f| f.grid.clone())
        .ok_or_else(|| Error::InvalidGrid("empty vector field".into()))?;
    if w.len() != grid.dim() {
        return Err(Error::InvalidGrid(format!(
            "divergence needs {} components, got {}",
            grid.dim(),
            w.len()
        )));
    }
    let mut total = vec![ZERO; grid.len()];
    for (axis, f) in w.iter().enumerate() {
        grid.check(&f.grid)?;
        let mut s = f.spectrum();
        apply_derivative(&grid, &mut s, axis);
        for (t, c) in total.iter_mut().zip(&s) {
            *t += c;
        }
    }
    Ok(ComplexField::from_spectrum(&grid, total))
}

/// Spectral gradient of a real field; imaginary parts are round-off and dropped.
pub fn real_gradient(f: &RealField) -> VectorField {
    let grads = spectral_gradient(&f.to_complex());
    VectorField {
        grid: f.grid.clone(),
        components: grads.into_iter().map(|g| g.values.iter().map(|c| c.re).collect()).collect(),
    }
}

/// Largest retained `|m|` per axis under the 2/3 rule.
pub fn dealias_cutoff(grid: &Grid) -> f64 {
    2.0 / 3.0 * grid.max_wavenumber()
}

/// Zeroes every coefficient with some `|k_j|` above 2/3 of the axis maximum.
pub fn dealias_spectrum(grid: &Grid, spectrum: &mut [Complex64]) {
    let cut = dealias_cutoff(grid) * (1.0 + 1e-12);
    let keep: Vec<bool> = grid.wavenumbers().iter().map(|k| k.abs() <= cut).collect();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    for (idx, c) in spectrum.iter_mut().enumerate() {
        let mut rest = idx;
        let mut ok = true;
        for _ in 0..dim {
            if !keep[rest % n] {
                ok = false;
                break;
            }
            rest /= n;
        }
        if !ok {
            *c = ZERO;
        }
    }
}

pub fn dealias(u: &ComplexField) -> ComplexField {
    let mut s = u.spectrum();
    dealias_spectrum(&u.grid, &mut s);
    ComplexField::from_spectrum(&u.grid, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lattice_definition() {
        let g = make_grid(2, 10.0, 8).unwrap();
        assert_eq!(g.spacing(), 2.5);
        assert_eq!(g.axis_coords(), &[-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5]);
        let g = make_grid(2, PI, 8).unwrap();
        let smallest = g.wavenumbers().iter().copied().filter(|k| *k > 0.0).fold(f64::MAX, f64::min);
        assert_eq!(smallest, 1.0);
        assert_eq!(g.wavenumbers()[4], -4.0);
    }

    #[test]
    fn rejects_bad_lattices() {
        assert!(matches!(make_grid(3, 10.0, 7), Err(Error::InvalidGrid(_))));
        assert!(make_grid(3, 10.0, 4).is_err());
        assert!(make_grid(1, 10.0, 8).is_err());
        assert!(make_grid(2, -1.0, 8).is_err());
        assert!(make_grid(4, 1.0, 128).is_err());
        assert!(make_grid(3, 1.0, 256).is_ok());
    }

    #[test]
    fn point_iteration_matches_coords() {
        let g = make_grid(3, 2.0, 8).unwrap();
        let mut buf = [0.0; 3];
        g.for_each_point(|idx, x| {
            g.coords(idx, &mut buf);
            assert_eq!(x, &buf[..]);
        });
        assert_eq!(g.point(g.origin_index()), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_of_constant_and_plane_wave() {
        let g = make_grid(2, 10.0, 32).unwrap();
        let one = ComplexField::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        for d in spectral_gradient(&one) {
            assert!(d.sup_norm() < 1e-14);
        }
        assert!(spectral_laplacian(&one).sup_norm() < 1e-14);

        let k = PI / 10.0;
        let u = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, k * x[0]));
        let du = spectral_gradient(&u);
        let expect = u.scaled(Complex64::new(0.0, k));
        let err = du[0].add_scaled(Complex64::new(-1.0, 0.0), &expect).sup_norm();
        assert!(err < 1e-13, "err {err}");
        assert!(du[1].sup_norm() < 1e-13);
    }

    #[test]
    fn laplacian_of_lattice_mode() {
        let g = make_grid(2, 3.0, 16).unwrap();
        let (k0, k1) = (3.0 * PI / 3.0, -2.0 * PI / 3.0);
        let u = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, k0 * x[0] + k1 * x[1]));
        let lap = spectral_laplacian(&u);
        let expect = u.scaled(Complex64::new(-(k0 * k0 + k1 * k1), 0.0));
        assert!(lap.add_scaled(Complex64::new(-1.0, 0.0), &expect).sup_norm() < 1e-11);
    }

    #[test]
    fn laplacian_equals_divergence_of_gradient() {
        let g = make_grid(2, 8.0, 64).unwrap();
        let u = ComplexField::from_fn(&g, |x| {
            let r2 = x[0] * x[0] + 2.0 * x[1] * x[1];
            Complex64::from_polar((-r2).exp(), 0.3 * x[0])
        });
        let lap = spectral_laplacian(&u);
        let div = spectral_divergence(&spectral_gradient(&u)).unwrap();
        let rel = lap.add_scaled(Complex64::new(-1.0, 0.0), &div).sup_norm() / lap.sup_norm();
        assert!(rel < 1e-10, "rel {rel}");
    }

    #[test]
    fn quadrature_of_box_and_gaussians() {
        let g = make_grid(2, 3.0, 8).unwrap();
        assert_relative_eq!(RealField::from_fn(&g, |_| 1.0).integral(), 36.0, max_relative = 1e-15);

        let g2 = make_grid(2, 10.0, 128).unwrap();
        let f = RealField::from_fn(&g2, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        assert_relative_eq!(quadrature(&f), PI, max_relative = 1e-10);

        let g3 = make_grid(3, 10.0, 64).unwrap();
        let f = RealField::from_fn(&g3, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        assert_relative_eq!(quadrature(&f), PI.powf(1.5), max_relative = 1e-10);
    }

    #[test]
    fn dealias_projection() {
        let g = make_grid(2, 5.0, 16).unwrap();
        let k = PI / 5.0;
        // |m| <= 5 = floor(16/3) is retained
        let low = ComplexField::from_fn(&g, |x| {
            Complex64::from_polar(1.0, 5.0 * k * x[0]) + Complex64::from_polar(0.5, -3.0 * k * x[1])
        });
        let d = dealias(&low);
        assert!(d.add_scaled(Complex64::new(-1.0, 0.0), &low).sup_norm() < 1e-13);

        let top = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, -8.0 * k * x[0]));
        assert!(dealias(&top).sup_norm() < 1e-13);
        let cut = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, 6.0 * k * x[1]));
        assert!(dealias(&cut).sup_norm() < 1e-13);
    }
}
