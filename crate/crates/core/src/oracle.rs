//! Slow, independent reference computations used to validate the transform-based paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, RealField, VectorField};

/// Default accuracy order of [`fd_gradient`].
pub const FD_DEFAULT_ORDER: usize = 4;

/// Weights `c_j` of the order-`2m` central first derivative
/// `f' ≈ Σ_j c_j (f_{+j} − f_{−j}) / (2h)`.
pub fn fd_weights(order: usize) -> Result<Vec<f64>> {
    if order == 0 || order % 2 == 1 || order > 40 {
        return Err(Error::Config(format!("finite-difference order {order} must be even, 2..=40")));
    }
    let m = order / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, b| a * b as f64);
    Ok((1..=m)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * fact(m) * fact(m) / (j as f64 * fact(m - j) * fact(m + j))
        })
        .collect())
}

/// Fourth-order periodic central differences along every axis.
pub fn fd_gradient(u: &ComplexField) -> Vec<ComplexField> {
    fd_gradient_order(u, FD_DEFAULT_ORDER).expect("default order is valid")
}

/// Periodic central differences of accuracy `order` along every axis.
pub fn fd_gradient_order(u: &ComplexField, order: usize) -> Result<Vec<ComplexField>> {
    let grid = u.grid();
    let weights = fd_weights(order)?;
    let n = grid.dim();
    let np = grid.points_per_axis();
    if weights.len() >= np {
        return Err(Error::Config("stencil wider than the grid".into()));
    }
    let h = grid.spacing();
    let vals = u.values();
    let mut out = Vec::with_capacity(n);
    for axis in 0..n {
        let stride = np.pow((n - 1 - axis) as u32);
        let mut d = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, o) in d.iter_mut().enumerate() {
            let i = (idx / stride) % np;
            let base = idx - i * stride;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, c) in weights.iter().enumerate() {
                let s = j + 1;
                let up = base + ((i + s) % np) * stride;
                let down = base + ((i + np - s) % np) * stride;
                acc += (vals[up] - vals[down]) * *c;
            }
            *o = acc / (2.0 * h);
        }
        out.push(ComplexField::from_values(grid, d)?);
    }
    Ok(out)
}

/// Exact free Schrödinger evolution of `exp(−|x|²/2)` and its moments.
#[derive(Clone, Debug)]
pub struct GaussianReference {
    pub u: ComplexField,
    pub mass: f64,
    pub variance: f64,
    pub variance_ddot: f64,
}

/// `u(t,x) = (1+2it)^{−n/2} exp(−|x|²/(2(1+2it)))`, mass `π^{n/2}`,
/// `Q(t) = (n/2) π^{n/2} (1 + 4t²)`, `Q̈ = 4n π^{n/2}`.
pub fn gaussian_free_reference(grid: &Grid, t: f64) -> GaussianReference {
    let n = grid.dim() as f64;
    let denom = Complex64::new(1.0, 2.0 * t);
    let pref = denom.powf(-n / 2.0);
    let u = ComplexField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        pref * (-(r2 / (2.0 * denom))).exp()
    });
    let pn = PI.powf(n / 2.0);
    GaussianReference {
        u,
        mass: pn,
        variance: n / 2.0 * pn * (1.0 + 4.0 * t * t),
        variance_ddot: 4.0 * n * pn,
    }
}

/// Real trigonometric polynomial `Σ a_m cos(k_m·x) + b_m sin(k_m·x)`, periodic on the grid box.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    /// Integer mode vectors `m`; the wavevector is `(π/R) m`.
    pub modes: Vec<Vec<i32>>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    /// Random coefficients of size `amplitude` on all modes with `|m_j| ≤ max_mode`.
    pub fn random(dim: usize, max_mode: i32, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = vec![vec![]];
        for _ in 0..dim {
            modes = modes
                .into_iter()
                .flat_map(|m: Vec<i32>| {
                    (-max_mode..=max_mode).map(move |k| {
                        let mut m = m.clone();
                        m.push(k);
                        m
                    })
                })
                .collect();
        }
        let scale = amplitude / modes.len() as f64;
        let cos = modes.iter().map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let sin = modes.iter().map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        Self { modes, cos, sin }
    }

    fn phase(&self, m: &[i32], x: &[f64], base: f64) -> f64 {
        m.iter().zip(x).map(|(mi, xi)| base * *mi as f64 * xi).sum()
    }

    pub fn eval(&self, x: &[f64], extent: f64) -> f64 {
        let base = PI / extent;
        self.modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let th = self.phase(m, x, base);
                self.cos[i] * th.cos() + self.sin[i] * th.sin()
            })
            .sum()
    }

    /// Analytic gradient.
    pub fn gradient(&self, x: &[f64], extent: f64) -> Vec<f64> {
        let base = PI / extent;
        let mut g = vec![0.0; x.len()];
        for (i, m) in self.modes.iter().enumerate() {
            let th = self.phase(m, x, base);
            let d = -self.cos[i] * th.sin() + self.sin[i] * th.cos();
            for (gj, mj) in g.iter_mut().zip(m) {
                *gj += d * base * *mj as f64;
            }
        }
        g
    }

    pub fn sample(&self, grid: &Grid) -> RealField {
        RealField::from_fn(grid, |x| self.eval(x, grid.extent()))
    }

    pub fn sample_gradient(&self, grid: &Grid) -> VectorField {
        VectorField::from_fn(grid, |x, out| out.copy_from_slice(&self.gradient(x, grid.extent())))
    }
}

/// `(e^{iψ} u, A + ∇ψ)` with the gradient taken analytically.
pub fn gauge_transform(
    u: &ComplexField,
    a: &VectorField,
    psi: &TrigPolynomial,
) -> Result<(ComplexField, VectorField)> {
    let grid = u.grid();
    if a.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let phase = psi.sample(grid);
    let mut out = u.clone();
    for (z, p) in out.values_mut().iter_mut().zip(phase.values()) {
        *z *= Complex64::from_polar(1.0, *p);
    }
    let a2 = a.add(&psi.sample_gradient(grid))?;
    Ok((out, a2))
}

/// Sum of a few randomly placed, randomly chirped Gaussians; decays well inside the box.
pub fn random_smooth_field(grid: &Grid, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let r = grid.extent();
    let bumps: Vec<(Vec<f64>, f64, Complex64, Vec<f64>)> = (0..3)
        .map(|_| {
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2 * r..0.2 * r)).collect();
            let w = rng.gen_range(0.8..1.5);
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (c, w, amp, k)
        })
        .collect();
    ComplexField::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, w, amp, k)| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                let ph: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                amp * Complex64::from_polar((-d2 / (w * w)).exp(), ph)
            })
            .sum()
    })
}

/// Direct double sum for the Kato norm (periodic minimal-image distances).
pub fn kato_norm_direct(v: &RealField, radius: f64) -> Result<f64> {
    let grid = v.grid();
    let n = grid.dim();
    if n < 3 {
        return Err(Error::InvalidPotential(format!("Kato norm needs n >= 3, got {n}")));
    }
    let len = grid.points_per_axis() as f64 * grid.spacing();
    let pts: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let w = grid.cell_volume();
    let mut best = 0.0f64;
    for x in &pts {
        let mut s = 0.0;
        for (y, vy) in pts.iter().zip(v.values()) {
            if *vy == 0.0 {
                continue;
            }
            let d2: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let mut d = (a - b).abs();
                    if d > len / 2.0 {
                        d = len - d;
                    }
                    d * d
                })
                .sum();
            if d2 > 0.0 && d2 <= radius * radius * (1.0 + 1e-12) {
                s += vy.abs() / d2.sqrt().powi(n as i32 - 2);
            }
        }
        best = best.max(s * w);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, spectral_gradient};

    #[test]
    fn weights_match_textbook_stencils() {
        assert_eq!(fd_weights(2).unwrap(), vec![1.0]);
        let w = fd_weights(4).unwrap();
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-15 && (w[1] + 1.0 / 6.0).abs() < 1e-15);
        assert!(fd_weights(3).is_err());
        // consistency: Σ j c_j = 1
        for order in [2, 4, 8, 16] {
            let s: f64 = fd_weights(order).unwrap().iter().enumerate().map(|(j, c)| (j + 1) as f64 * c).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_of_constant_and_sine() {
        let g = make_grid(2, 5.0, 64).unwrap();
        let c = ComplexField::from_fn(&g, |_| Complex64::new(2.0, -1.0));
        assert!(fd_gradient(&c).iter().all(|d| d.sup_norm() < 1e-13));
        let k = PI / 5.0;
        let s = ComplexField::from_fn(&g, |x| Complex64::new((k * x[0]).sin(), 0.0));
        let d = fd_gradient(&s);
        let exact = ComplexField::from_fn(&g, |x| Complex64::new(k * (k * x[0]).cos(), 0.0));
        let err = d[0].add_scaled(Complex64::new(-1.0, 0.0), &exact).sup_norm();
        let h = g.spacing();
        assert!(err < k.powi(5) * h.powi(4));
    }

    #[test]
    fn fd_converges_at_fourth_order() {
        let errs: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| {
                let g = make_grid(2, 6.0, n).unwrap();
                let u = ComplexField::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
                let d = fd_gradient(&u);
                let ex = ComplexField::from_fn(&g, |x| Complex64::new(-2.0 * x[0] * (-x[0] * x[0]).exp(), 0.0));
                d[0].add_scaled(Complex64::new(-1.0, 0.0), &ex).sup_norm()
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 3.7, "rate {rate}");
    }

    #[test]
    fn high_order_fd_agrees_with_spectral() {
        let g = make_grid(2, 10.0, 128).unwrap();
        let u = ComplexField::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let fd = fd_gradient_order(&u, 16).unwrap();
        let sp = spectral_gradient(&u);
        assert!(fd[0].add_scaled(Complex64::new(-1.0, 0.0), &sp[0]).sup_norm() < 1e-6);
    }

    #[test]
    fn gaussian_reference_moments() {
        let g = make_grid(2, 10.0, 128).unwrap();
        let r0 = gaussian_free_reference(&g, 0.0);
        assert!((r0.variance - PI).abs() < 1e-14);
        assert!((r0.variance_ddot - 8.0 * PI).abs() < 1e-14);
        assert!((r0.u.mass() - PI).abs() < 1e-10);
        let r1 = gaussian_free_reference(&g, 0.4);
        assert!((r1.u.mass() - PI).abs() < 1e-9);
    }

    #[test]
    fn trig_gradient_matches_spectral() {
        let g = make_grid(2, 4.0, 32).unwrap();
        let psi = TrigPolynomial::random(2, 2, 1.0, 7);
        let sp = spectral_gradient(&psi.sample(&g).to_complex());
        let an = psi.sample_gradient(&g);
        for j in 0..2 {
            let err = sp[j].values().iter().zip(an.component(j)).map(|(a, b)| (a.re - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn zero_gauge_is_identity() {
        let g = make_grid(2, 4.0, 16).unwrap();
        let psi = TrigPolynomial { modes: vec![vec![1, 0]], cos: vec![0.0], sin: vec![0.0] };
        let u = random_smooth_field(&g, 3);
        let a = VectorField::zeros(&g);
        let (u2, a2) = gauge_transform(&u, &a, &psi).unwrap();
        assert_eq!(u2.values(), u.values());
        assert!(a2.sup_norm() == 0.0);
    }

    #[test]
    fn random_fields_are_seeded() {
        let g = make_grid(2, 4.0, 16).unwrap();
        assert_eq!(random_smooth_field(&g, 5).values(), random_smooth_field(&g, 5).values());
        assert_ne!(random_smooth_field(&g, 5).values(), random_smooth_field(&g, 6).values());
    }
}
