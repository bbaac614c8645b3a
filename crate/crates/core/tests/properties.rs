use num_complex::Complex64;
use proptest::prelude::*;

use magvirial::grid::{dealias, make_grid, spectral_mass, ComplexField};
use magvirial::operators::{hamiltonian_apply, DiscreteHamiltonian};
use magvirial::potentials::{
    build_m, eval_a, trapping_component, AntisymMatrix, ElectricPotential, MagneticPotential,
    PotentialSpec, Taper,
};

fn field(values: &[(f64, f64)]) -> ComplexField {
    let g = make_grid(2, 4.0, 8).unwrap();
    ComplexField::from_values(&g, values.iter().map(|(a, b)| Complex64::new(*a, *b)).collect()).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 64)
}

fn antisym(n: usize) -> impl Strategy<Value = AntisymMatrix> {
    prop::collection::vec(-3.0..3.0f64, n * (n - 1) / 2).prop_map(move |upper| {
        let mut rows = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                rows[i][j] = upper[k];
                rows[j][i] = -upper[k];
                k += 1;
            }
        }
        AntisymMatrix::from_rows(&rows).unwrap()
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..20.0f64, n).prop_filter("away from the origin", |x| {
        x.iter().map(|t| t * t).sum::<f64>() > 1e-6
    })
}

proptest! {
    #[test]
    fn parseval_holds_for_any_samples(v in samples()) {
        let u = field(&v);
        let m = u.mass();
        prop_assert!((spectral_mass(&u) - m).abs() <= 1e-12 * m.max(1e-300));
    }

    #[test]
    fn dealias_is_idempotent(v in samples()) {
        let once = dealias(&field(&v));
        let twice = dealias(&once);
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn hamiltonian_is_linear(v in samples(), w in samples(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let g = make_grid(2, 4.0, 8).unwrap();
        let spec = PotentialSpec::new(2, MagneticPotential::LinearM(build_m(2).unwrap()), ElectricPotential::InverseQuadratic { strength: 1.0 })
            .unwrap()
            .with_taper(Some(Taper::for_extent(4.0)));
        let h = DiscreteHamiltonian::new(&spec, &g).unwrap();
        let (u, z) = (field(&v), field(&w));
        let c = Complex64::new(re, im);
        let lhs = hamiltonian_apply(&z.add_scaled(c, &u), &h).unwrap();
        let rhs = hamiltonian_apply(&z, &h).unwrap().add_scaled(c, &hamiltonian_apply(&u, &h).unwrap());
        let scale = lhs.sup_norm().max(1.0);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn trapping_component_is_tangential_and_matches_potential(
        (m, x) in (2usize..6).prop_flat_map(|n| (antisym(n), point(n)))
    ) {
        let n = x.len();
        let spec = PotentialSpec::new(n, MagneticPotential::LinearM(m), ElectricPotential::Zero).unwrap();
        let bt = trapping_component(&spec, &x).unwrap();
        let a = eval_a(&spec, &x).unwrap();
        let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let dot: f64 = bt.iter().zip(&x).map(|(b, x)| b * x).sum();
        prop_assert!(dot.abs() <= 1e-12 * (1.0 + r * r));
        for (b, a) in bt.iter().zip(&a) {
            prop_assert!((r * b + 2.0 * a).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn singular_families_have_no_trapping_component(x in point(3), eps in 0.0..1.0f64) {
        for family in [MagneticPotential::SingularSpherical, MagneticPotential::SingularCylindrical] {
            let spec = PotentialSpec::new(3, family, ElectricPotential::Zero).unwrap().with_regularization(eps).unwrap();
            if x[0].abs() + x[1].abs() < 1e-3 && eps == 0.0 {
                continue;
            }
            let bt = trapping_component(&spec, &x).unwrap();
            prop_assert!(bt.iter().all(|b| b.abs() <= 1e-12));
        }
    }
}
