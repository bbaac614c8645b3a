use num_complex::Complex64;

use magvirial::diagnostics::{quadratic_bound_check, second_differences};
use magvirial::dynamics::{nls_rhs, nlw_rhs, GaussianProfile, InitialData, SimConfig, Simulation, Termination, Trigger};
use magvirial::grid::{make_grid, ComplexField};
use magvirial::operators::{energy_schrodinger, energy_wave, h1a_norm, DiscreteHamiltonian, Nonlinearity};
use magvirial::potentials::PotentialSpec;
use magvirial::verify::{free_blowup_config, magnetic_spec, virial_free_config, with_tuned_amplitude};

fn gaussian_run(mut cfg: SimConfig, amplitude: f64) -> magvirial::dynamics::RunOutcome {
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(cfg.dim, amplitude, 1.0));
    Simulation::new(cfg).unwrap().run().unwrap()
}

#[test]
fn free_linear_virial_residual_is_small() {
    let mut cfg = SimConfig::schrodinger(PotentialSpec::zero(2).unwrap(), 10.0, 128);
    cfg.nonlinearity = Nonlinearity::linear(3.0);
    cfg.t_end = 1.0;
    let out = gaussian_run(cfg, 1.0);
    let worst = out
        .series
        .records
        .iter()
        .filter(|r| r.t >= 0.1 - 1e-12 && r.t <= 0.9 + 1e-12)
        .filter_map(|r| r.virial_residual)
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "residual {worst}");
}

#[test]
fn residual_shrinks_with_sampling_interval() {
    // linear flow with both potentials, so Q is not a polynomial in t
    let run = |cadence| {
        let mut cfg = SimConfig::schrodinger(magnetic_spec(2, 8.0, 1.0).unwrap(), 8.0, 64);
        cfg.nonlinearity = Nonlinearity::linear(3.0);
        cfg.dt = 1e-3;
        cfg.t_end = 0.4;
        cfg.cadence = cadence;
        cfg.initial = InitialData::Gaussian(GaussianProfile { velocity: vec![0.8, 0.0], ..GaussianProfile::centered(2, 1.0, 1.0) });
        let out = Simulation::new(cfg).unwrap().run().unwrap();
        out.series.records.iter().filter_map(|r| r.virial_residual).fold(0.0, f64::max)
    };
    let (coarse, fine) = (run(40), run(20));
    assert!(fine <= 0.35 * coarse, "fine {fine} coarse {coarse}");
}

#[test]
fn recorded_q_dot_matches_centered_difference() {
    let out = Simulation::new(virial_free_config().unwrap()).unwrap().run().unwrap();
    let recs = &out.series.records;
    for w in recs.windows(3) {
        let fd = (w[2].q - w[0].q) / (w[2].t - w[0].t);
        let qd = w[1].q_dot.unwrap();
        assert!((fd - qd).abs() <= 1e-4 * qd.abs().max(1.0), "t={} fd={fd} qdot={qd}", w[1].t);
    }
}

#[test]
fn second_differences_recover_free_gaussian_acceleration() {
    let out = Simulation::new(virial_free_config().unwrap()).unwrap().run().unwrap();
    let q: Vec<f64> = out.series.records.iter().map(|r| r.q).collect();
    let d2 = second_differences(&out.series.times(), &q);
    assert!(d2.first().unwrap().is_none() && d2.last().unwrap().is_none());
    for v in d2.into_iter().flatten() {
        assert!((v - 8.0 * std::f64::consts::PI).abs() < 1e-6);
    }
}

#[test]
fn negative_energy_gaussian_triggers_on_sup_norm() {
    let out = gaussian_run(free_blowup_config(128, 1e-3, 10).unwrap(), 2.1);
    assert!(out.series.records[0].energy < 0.0);
    match out.report.termination {
        Termination::BlowupDetected { trigger, t_detect } => {
            assert_eq!(trigger, Trigger::SupNorm);
            assert!(t_detect > 0.0);
            assert_eq!(out.report.uncertainty, 1e-3);
        }
        other => panic!("expected detection, got {other:?}"),
    }
    let r0 = &out.series.records[0];
    let bound = quadratic_bound_check(&out.series, r0.energy, r0.q_dot.unwrap(), r0.q, 16.0, true, 1e-6 * r0.q);
    assert!(bound.applicable);
    // Q follows Q0 + Q'0 t + 8 E t², so with E < 0 the 16 parabola lies below it
    assert!(!bound.holds);
    let fitted = bound.fitted_coefficient.unwrap();
    assert!((fitted - 8.0).abs() <= 0.16, "fitted {fitted}");
}

#[test]
fn small_data_subcritical_run_completes_and_conserves() {
    let mut cfg = SimConfig::schrodinger(PotentialSpec::zero(2).unwrap(), 10.0, 64);
    cfg.nonlinearity = Nonlinearity::focusing(2.0);
    let out = gaussian_run(cfg, 0.1);
    assert_eq!(out.report.termination, Termination::Completed);
    let r0 = &out.series.records[0];
    assert!(r0.energy > 0.0);
    for r in &out.series.records {
        assert!((r.mass - r0.mass).abs() <= 1e-8 * r0.mass);
        assert!((r.energy - r0.energy).abs() <= 1e-6 * r0.energy.abs());
    }
    let bound = quadratic_bound_check(&out.series, r0.energy, r0.q_dot.unwrap(), r0.q, 16.0, true, 0.0);
    assert!(!bound.applicable && bound.root.is_none());
}

#[test]
fn tuned_magnetic_data_has_negative_energy() {
    let mut cfg = SimConfig::schrodinger(magnetic_spec(2, 10.0, 0.5).unwrap(), 10.0, 64);
    cfg.initial = InitialData::Gaussian(GaussianProfile::centered(2, 1.0, 1.0));
    let (cfg, a) = with_tuned_amplitude(cfg).unwrap();
    assert!(a > 2.0);
    let sim = Simulation::new(cfg).unwrap();
    let s = sim.initial_state().unwrap();
    assert!(sim.energy(&s).unwrap() < 0.0);
}

/// `(E(w + εf) − E(w − εf)) / 2ε` along the flow direction `f`.
fn energy_rate(e: impl Fn(f64) -> f64, eps: f64) -> f64 {
    (e(eps) - e(-eps)) / (2.0 * eps)
}

#[test]
fn energy_is_stationary_along_the_vector_field() {
    let g = make_grid(2, 8.0, 64).unwrap();
    let h = DiscreteHamiltonian::new(&magnetic_spec(2, 8.0, 1.0).unwrap(), &g).unwrap();
    let nl = Nonlinearity::focusing(3.0);
    let moving = |amp: f64, vel: f64| GaussianProfile { velocity: vec![vel, -0.5 * vel], ..GaussianProfile::centered(2, amp, 1.0) }.sample(&g);
    let u = moving(1.5, 0.7);
    let v = moving(0.8, -0.3);
    let shift = |a: &ComplexField, s: f64, d: &ComplexField| a.add_scaled(Complex64::new(s, 0.0), d);

    let (du, dv) = nlw_rhs(&u, &v, &h, &nl, false).unwrap();
    let rate = energy_rate(|s| energy_wave(&shift(&u, s, &du), &shift(&v, s, &dv), &h, &nl).unwrap(), 1e-4);
    let scale = h1a_norm(&u, &h).unwrap().powi(2) + v.mass();
    assert!(rate.abs() <= 1e-8 * scale, "wave rate {rate}, scale {scale}");

    let du = nls_rhs(&u, &h, &nl, false).unwrap();
    let rate = energy_rate(|s| energy_schrodinger(&shift(&u, s, &du), &h, &nl).unwrap(), 1e-4);
    let scale = h1a_norm(&u, &h).unwrap().powi(2);
    assert!(rate.abs() <= 1e-8 * scale, "schrodinger rate {rate}, scale {scale}");
}

#[test]
fn wave_virial_gap_is_the_nonlinear_moment_term() {
    let mut cfg = SimConfig::wave(PotentialSpec::zero(3).unwrap(), 8.0, 64);
    cfg.dt = 0.005;
    cfg.t_end = 0.3;
    cfg.cadence = 4;
    let p = cfg.nonlinearity.exponent;
    let out = gaussian_run(cfg, 1.5);
    let recs = &out.series.records;
    let t = out.series.times();
    let q: Vec<f64> = recs.iter().map(|r| r.q).collect();
    let g: Vec<f64> = recs.iter().map(|r| r.nonlinear_moment).collect();
    let (q2, g2) = (second_differences(&t, &q), second_differences(&t, &g));
    let mut worst_gap: f64 = 0.0;
    let mut worst_fixed: f64 = 0.0;
    for i in 0..recs.len() {
        if let (Some(a), Some(b)) = (q2[i], g2[i]) {
            let gap = a - recs[i].q_ddot_rhs;
            worst_gap = worst_gap.max(gap.abs());
            worst_fixed = worst_fixed.max((gap - 2.0 / (p + 1.0) * b).abs());
        }
    }
    assert!(worst_gap > 1e-2, "gap {worst_gap}");
    assert!(worst_fixed <= 1e-2 * worst_gap, "gap {worst_gap}, corrected {worst_fixed}");
}
