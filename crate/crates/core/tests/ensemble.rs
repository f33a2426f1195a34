use bathlab::covariance::abc_closed_form;
use bathlab::ensemble::{
    deterministic_runaway, integrate_symplectic, max_symplectic_step, run_ensemble, sample_bath_initials, sample_rng,
    trajectory_solution_formula, BathInitials, EnsembleConfig, FormulaPlan, Method,
};
use bathlab::response::{
    build_response, characteristic_roots, discretize_bath, solve_volterra_finite, stability_bound, ModelParams,
};
use bathlab::spectral::SpectralDensity;

fn reference() -> (SpectralDensity, ModelParams) {
    let sd = SpectralDensity::new(9.0, 1.0).unwrap();
    let mp = ModelParams::from_coupling_rhs(&sd, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.5).unwrap();
    (sd, mp)
}

#[test]
fn formula_agrees_with_symplectic_on_small_bath() {
    let (sd, mp) = reference();
    let bath = discretize_bath(&sd, 64, 50.0 * sd.kappa()).unwrap();
    let times: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let samples = solve_volterra_finite(&bath, &mp, 5.0, 5e-4).unwrap();
    for seed in 0..3 {
        let init = sample_bath_initials(&bath, mp.kt(), &mut sample_rng(seed, 0));
        let a = trajectory_solution_formula(&bath, &mp, &init, &samples, &times).unwrap();
        let b = integrate_symplectic(&bath, &mp, &init, &times, 0.25 * max_symplectic_step(&bath, &mp)).unwrap();
        for (x, y) in a.iter().zip(&b.points) {
            assert!((x.q - y.q).abs() <= 1e-4 && (x.p - y.p).abs() <= 1e-4, "{x:?} vs {y:?}");
        }
    }
}

#[test]
fn energy_is_conserved() {
    let sd = SpectralDensity::new(9.0, 1.0).unwrap();
    let omega = (1.0f64 / 3.0).sqrt();
    let bound = stability_bound(&sd, &ModelParams::new(omega, 0.0, 1.0, 0.0, 0.0).unwrap());
    let mp = ModelParams::new(omega, (0.5 * bound.critical_eps_sq).sqrt(), 1.0, 1.0, 0.0).unwrap();
    let bath = discretize_bath(&sd, 64, 50.0 * sd.kappa()).unwrap();
    let init = sample_bath_initials(&bath, 1.0, &mut sample_rng(9, 0));
    let run = integrate_symplectic(&bath, &mp, &init, &[100.0 / omega], max_symplectic_step(&bath, &mp)).unwrap();
    assert!(run.relative_energy_drift <= 1e-6, "{}", run.relative_energy_drift);
}

#[test]
fn runaway_rate_and_sign() {
    let (sd, mp) = reference();
    let roots = characteristic_roots(&sd, &mp);
    let (_, _, l3) = roots.lambdas().unwrap();
    let t_max = 20.0;
    let bath = discretize_bath(&sd, 2000, std::f64::consts::PI * 2000.0 / t_max).unwrap();
    let fit = deterministic_runaway(&bath, &mp, t_max).unwrap();
    assert!(((fit.rate - l3) / l3).abs() < 0.02, "{} vs {l3}", fit.rate);
    let rs = build_response(roots).unwrap();
    let c3 = rs.coefficients()[2].re;
    assert_eq!(fit.q_final.signum(), (c3 * (mp.q0() * l3 + mp.p0())).signum());

    // q0 l3 + p0 = 0 removes the growing component
    let quiet = mp.with_initial(1.0, -l3).unwrap();
    let q_quiet = FormulaPlan::with_default_step(&bath, &quiet, &[t_max]).unwrap().deterministic()[0].q;
    assert!(q_quiet.abs() < 1e-2 * fit.q_final.abs(), "{q_quiet} vs {}", fit.q_final);
}

#[test]
fn finite_bath_law_approaches_continuum() {
    let (sd, mp) = reference();
    let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
    let times = [1.0, 2.0, 3.0];
    let mut errors = Vec::new();
    for n in [500, 1000, 2000] {
        let bath = discretize_bath(&sd, n, n as f64).unwrap();
        let plan = FormulaPlan::with_default_step(&bath, &mp, &times).unwrap();
        let mut worst = 0.0_f64;
        for (&t, (a, b, c)) in times.iter().zip(plan.exact_covariance(mp.kt())) {
            let e = abc_closed_form(&sd, &mp, rs.roots(), t).unwrap();
            worst = worst
                .max(((a - e.a_coef) / e.a_coef).abs())
                .max(((b - e.b_coef) / (e.a_coef * e.c_coef).sqrt()).abs())
                .max(((c - e.c_coef) / e.c_coef).abs());
        }
        errors.push(worst);
    }
    assert!(errors[2] < 1e-2, "{errors:?}");
    assert!(errors[2] < errors[0], "{errors:?}");
}

#[test]
fn samples_are_gaussian() {
    let (sd, mp) = reference();
    let bath = discretize_bath(&sd, 2000, 2000.0).unwrap();
    let cfg = EnsembleConfig {
        bath,
        mp,
        sample_count: 10_000,
        times: vec![2.0],
        seed: 2024,
        method: Method::SolutionFormula,
        step: None,
    };
    let m = run_ensemble(&cfg).unwrap().moments[0];
    for (v, se) in [(m.skew_q, m.se_skew), (m.skew_p, m.se_skew), (m.kurt_q, m.se_kurt), (m.kurt_p, m.se_kurt)] {
        assert!(v.abs() < 4.0 * se, "{v} vs {se}");
    }
}

#[test]
fn bath_at_rest_gives_mean_trajectory() {
    let (sd, mp) = reference();
    let bath = discretize_bath(&sd, 200, 200.0).unwrap();
    let plan = FormulaPlan::new(&bath, &mp, &[1.5], 0.001).unwrap();
    let at_rest = plan.trajectory(&BathInitials::at_rest(bath.n()))[0];
    assert_eq!(at_rest, plan.deterministic()[0]);
}
