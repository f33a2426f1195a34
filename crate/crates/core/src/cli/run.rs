use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::config::{CovarianceMethod, ExperimentConfig, Kind};
use super::table::Table;
use crate::covariance::{abc_closed_form, abc_numeric, covariance_at, default_covariance_quadrature, stationary_covariance};
use crate::density::{fit_line, gibbs_distance, log_density_at, normalization, DiagnosticGrid, GaussianState};
use crate::ensemble::{deterministic_runaway, run_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::response::{
    build_response, characteristic_roots, discretize_bath, max_finite_step, solve_volterra_finite, sylvester_check,
    stability_bound, CubicRoots, ModelParams, ResponseSolution,
};
use crate::spectral::{q_kernel_numeric, QuadratureSpec, SpectralDensity};

/// Artifacts of one run, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub kind: Kind,
    pub csv: String,
    pub summary: Value,
}

impl RunOutput {
    pub fn checks(&self) -> &Map<String, Value> {
        self.summary["checks"].as_object().expect("summary always has checks")
    }

    pub fn checks_passed(&self) -> bool {
        self.checks().values().all(|v| v.as_bool() == Some(true))
    }

    pub fn summary_text(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary is plain JSON") + "\n"
    }
}

struct Checks(Map<String, Value>);

impl Checks {
    fn set(&mut self, name: &str, pass: bool) {
        self.0.insert(name.to_string(), Value::Bool(pass));
    }
}

fn model_json(sd: &SpectralDensity, mp: &ModelParams) -> Value {
    let bound = stability_bound(sd, mp);
    json!({
        "a": sd.a(),
        "b": sd.b(),
        "kappa": sd.kappa(),
        "omega": mp.omega(),
        "epsilon": mp.epsilon(),
        "eps_sq": mp.eps_sq(),
        "coupling_rhs": mp.coupling_rhs(sd),
        "kT": mp.kt(),
        "q0": mp.q0(),
        "p0": mp.p0(),
        "critical_eps_sq": bound.critical_eps_sq,
        "positive_definite": bound.positive_definite,
    })
}

fn complex_list(values: &[Complex64], all_real: bool) -> Value {
    if all_real {
        json!(values.iter().map(|z| z.re).collect::<Vec<_>>())
    } else {
        json!(values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
    }
}

fn lambdas_json(roots: &CubicRoots) -> Value {
    match roots.lambdas() {
        Some((l1, l2, l3)) => json!({"lambda1": l1, "lambda2": l2, "lambda3": l3}),
        None => Value::Null,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut checks = Checks(Map::new());
    let (csv, results) = match cfg.kind {
        Kind::Roots => roots(cfg, &mut checks)?,
        Kind::Kernel => kernel(cfg, &mut checks)?,
        Kind::Covariance => covariance(cfg, &mut checks)?,
        Kind::Density => density(cfg, &mut checks)?,
        Kind::DecayFit => decay_fit(cfg, &mut checks)?,
        Kind::Ensemble => ensemble(cfg, &mut checks)?,
        Kind::RegimeScan => regime_scan(cfg, &mut checks)?,
        Kind::Runaway => runaway(cfg, &mut checks)?,
    };
    Ok(RunOutput {
        kind: cfg.kind,
        csv,
        summary: json!({
            "config": cfg.to_json(),
            "results": results,
            "checks": Value::Object(checks.0),
        }),
    })
}

/// Relative residuals of the three Vieta identities.
pub fn vieta_residuals(roots: &CubicRoots) -> [f64; 3] {
    let r = roots.roots();
    let c = roots.cubic();
    let sum = r[0] + r[1] + r[2];
    let pair = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
    let prod = r[0] * r[1] * r[2];
    let n: [f64; 3] = std::array::from_fn(|i| r[i].norm());
    let scale = |x: f64| x.max(f64::MIN_POSITIVE);
    [
        (sum + c.c2).norm() / scale(n[0] + n[1] + n[2]),
        (pair - c.c1).norm() / scale(n[0] * n[1] + n[0] * n[2] + n[1] * n[2]),
        (prod + c.c0).norm() / scale(n[0] * n[1] * n[2]),
    ]
}

fn roots(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let roots = characteristic_roots(&sd, &mp);
    let mut table = Table::new(&["index", "re", "im"]);
    for (i, z) in roots.roots().iter().enumerate() {
        table.row(vec![(i as f64 + 1.0).into(), z.re.into(), z.im.into()]);
    }
    let vieta = vieta_residuals(&roots);
    let coefficients = match build_response(roots) {
        Ok(rs) => complex_list(&rs.coefficients(), roots.all_real()),
        Err(_) => Value::Null,
    };
    checks.set("vieta_residuals", vieta.iter().all(|v| *v <= 1e-9));
    let results = json!({
        "model": model_json(&sd, &mp),
        "roots": complex_list(&roots.roots(), roots.all_real()),
        "regime": roots.regime().name(),
        "lambdas": lambdas_json(&roots),
        "coefficients": coefficients,
        "vieta_residuals": vieta,
        "max_residual": roots.max_residual(),
    });
    Ok((table.into_string(), results))
}

fn kernel(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let sd = cfg.model.spectral()?;
    let nu_max = cfg.nu_max.unwrap_or(1e4 * sd.kappa());
    let quad = QuadratureSpec::new(&sd, nu_max, cfg.panels, cfg.tail_tolerance)?;
    let mut table = Table::new(&["t", "Q", "Q_numeric", "error_estimate"]);
    let mut ok = true;
    let mut worst = 0.0_f64;
    for &t in &cfg.times {
        let exact = sd.q_kernel(t);
        let est = q_kernel_numeric(&sd, t, &quad)?;
        let diff = (est.value - exact).abs();
        worst = worst.max(diff);
        ok &= diff <= est.error + 1e-12 * exact.abs().max(1.0);
        table.row(vec![t.into(), exact.into(), est.value.into(), est.error.into()]);
    }
    checks.set("numeric_within_error", ok);
    let results = json!({
        "kappa": sd.kappa(),
        "total_integral": sd.total_integral(),
        "nu_max": nu_max,
        "max_abs_difference": worst,
    });
    Ok((table.into_string(), results))
}

fn covariance_series(
    sd: &SpectralDensity,
    mp: &ModelParams,
    rs: &ResponseSolution,
    method: CovarianceMethod,
    t: f64,
) -> Result<crate::covariance::CovarianceTriple> {
    match method {
        CovarianceMethod::Auto => covariance_at(sd, mp, rs, t),
        CovarianceMethod::ClosedForm => abc_closed_form(sd, mp, rs.roots(), t),
        CovarianceMethod::Numeric => abc_numeric(sd, mp, rs, t, &default_covariance_quadrature(sd, rs.roots())?),
    }
}

fn covariance(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let rs = build_response(characteristic_roots(&sd, &mp))?;
    let mut table = Table::new(&["t", "A", "B", "C", "detACB2"]);
    let mut positive = true;
    for &t in &cfg.times {
        let c = covariance_series(&sd, &mp, &rs, cfg.covariance_method, t)?;
        positive &= t == 0.0 || mp.epsilon() == 0.0 || c.det() > 0.0;
        table.row(vec![t.into(), c.a_coef.into(), c.b_coef.into(), c.c_coef.into(), c.det().into()]);
    }
    checks.set("positive_determinant", positive);
    let stationary = stationary_covariance(&sd, &mp)
        .ok()
        .map(|c| json!({"A": c.a_coef, "B": c.b_coef, "C": c.c_coef}));
    let results = json!({
        "model": model_json(&sd, &mp),
        "regime": rs.roots().regime().name(),
        "shear": crate::covariance::shear_for(rs.roots()),
        "stationary": stationary,
    });
    Ok((table.into_string(), results))
}

fn density(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let rs = build_response(characteristic_roots(&sd, &mp))?;
    let mut table = Table::new(&["t", "q", "p", "density", "gibbs"]);
    let mut per_time = Vec::new();
    let mut normalized = true;
    for &t in &cfg.times {
        let gs = GaussianState::from_response(&rs, &mp, covariance_at(&sd, &mp, &rs, t)?);
        let grid = DiagnosticGrid::around_state(&gs, cfg.grid_n, cfg.sigmas);
        for &q in &grid.q {
            for &p in &grid.p {
                let rho = log_density_at(&gs, q, p)?.exp();
                table.row(vec![t.into(), q.into(), p.into(), rho.into(), crate::density::gibbs_density(&mp, q, p).into()]);
            }
        }
        let norm = normalization(&gs, 8.0, 24)?;
        normalized &= (norm - 1.0).abs() <= 1e-6;
        per_time.push(json!({
            "t": t,
            "q_star": gs.q_star,
            "p_star": gs.p_star,
            "A": gs.cov.a_coef,
            "B": gs.cov.b_coef,
            "C": gs.cov.c_coef,
            "det": gs.cov.det(),
            "normalization": norm,
            "gibbs_distance": gibbs_distance(&gs, &mp, &grid)?,
        }));
    }
    checks.set("normalized", normalized);
    let results = json!({
        "model": model_json(&sd, &mp),
        "regime": rs.roots().regime().name(),
        "states": per_time,
    });
    Ok((table.into_string(), results))
}

fn decay_fit(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let roots = characteristic_roots(&sd, &mp);
    let rs = build_response(roots)?;
    let states: Vec<GaussianState> = cfg
        .times
        .iter()
        .map(|&t| Ok(GaussianState::from_response(&rs, &mp, covariance_at(&sd, &mp, &rs, t)?)))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["t", "q", "p", "density"]);
    let mut fits = Vec::new();
    let mut rates = Vec::new();
    for &[q, p] in &cfg.points {
        let mut logs = Vec::with_capacity(states.len());
        for gs in &states {
            let l = log_density_at(gs, q, p)?;
            table.row(vec![gs.t.into(), q.into(), p.into(), l.exp().into()]);
            logs.push(l);
        }
        let fit = fit_line(&cfg.times, &logs)?;
        rates.push(fit.rate);
        fits.push(json!({"q": q, "p": p, "rate": fit.rate, "intercept": fit.intercept, "r_squared": fit.r_squared}));
    }
    let lambda3 = roots.lambdas().map(|l| l.2);
    if let Some(l3) = lambda3 {
        checks.set("rate_matches_lambda3", rates.iter().all(|r| ((r + l3) / l3).abs() <= 0.02));
    }
    let results = json!({
        "model": model_json(&sd, &mp),
        "regime": roots.regime().name(),
        "lambda3": lambda3,
        "rate": rates[0],
        "fits": fits,
    });
    Ok((table.into_string(), results))
}

/// Default bath cutoff: as high as the recurrence time of the last requested
/// time allows, capped at `1000 kappa`.
pub fn default_nu_max(sd: &SpectralDensity, n: usize, t_last: f64) -> f64 {
    let cap = 1e3 * sd.kappa();
    if t_last > 0.0 {
        (PI * n as f64 / t_last).min(cap)
    } else {
        cap
    }
}

fn ensemble(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let t_last = *cfg.times.last().expect("validated nonempty");
    let nu_max = cfg.nu_max.unwrap_or_else(|| default_nu_max(&sd, cfg.n, t_last));
    let bath = discretize_bath(&sd, cfg.n, nu_max)?;
    let recurrence = bath.recurrence_time();
    let result = run_ensemble(&EnsembleConfig {
        bath,
        mp,
        sample_count: cfg.sample_count,
        times: cfg.times.clone(),
        seed: cfg.seed,
        method: cfg.method,
        step: cfg.step,
    })?;
    let mut table = Table::new(&["t", "mean_q", "se_q", "mean_p", "se_p", "var_q", "var_p", "cov_qp"]);
    for m in &result.moments {
        table.row(vec![
            m.t.into(),
            m.mean_q.into(),
            m.se_q.into(),
            m.mean_p.into(),
            m.se_p.into(),
            m.var_q.into(),
            m.var_p.into(),
            m.cov_qp.into(),
        ]);
    }
    let analytic = build_response(characteristic_roots(&sd, &mp)).ok().map(|rs| {
        result
            .moments
            .iter()
            .map(|m| {
                let Ok(c) = covariance_at(&sd, &mp, &rs, m.t) else {
                    return Value::Null;
                };
                let (q, p) = rs.mean(mp.q0(), mp.p0(), m.t);
                let z = |x: f64, y: f64, se: f64| if se > 0.0 { (x - y) / se } else { 0.0 };
                json!({
                    "t": m.t,
                    "mean_q": q, "mean_p": p, "A": c.a_coef, "B": c.b_coef, "C": c.c_coef,
                    "z_mean_q": z(m.mean_q, q, m.se_q),
                    "z_mean_p": z(m.mean_p, p, m.se_p),
                    "z_var_q": z(m.var_q, c.a_coef, m.se_var_q),
                    "z_cov_qp": z(m.cov_qp, c.b_coef, m.se_cov_qp),
                    "z_var_p": z(m.var_p, c.c_coef, m.se_var_p),
                })
            })
            .collect::<Vec<_>>()
    });
    checks.set(
        "variances_nonnegative",
        result.moments.iter().all(|m| m.var_q >= 0.0 && m.var_p >= 0.0),
    );
    checks.set("within_recurrence_time", result.warnings.is_empty());
    let results = json!({
        "model": model_json(&sd, &mp),
        "nu_max": nu_max,
        "recurrence_time": recurrence,
        "sample_count": result.sample_count,
        "seed": result.seed,
        "moments": serde_json::to_value(&result.moments).expect("plain data"),
        "analytic": analytic,
        "warnings": result.warnings,
    });
    Ok((table.into_string(), results))
}

fn regime_scan(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let sd = cfg.model.spectral()?;
    let m = &cfg.model;
    let mp0 = ModelParams::new(m.omega, 0.0, m.kt, m.q0, m.p0)?;
    let bound = stability_bound(&sd, &mp0).critical_eps_sq;
    let eps_sq_max = cfg.eps_sq_max.unwrap_or(2.0 * bound);
    let nu_max = cfg.nu_max.unwrap_or(1e3 * sd.kappa());
    let bath = discretize_bath(&sd, cfg.n, nu_max)?;
    let mut table = Table::new(&[
        "eps_sq",
        "coupling_rhs",
        "root1",
        "root2",
        "root3",
        "regime",
        "positive_definite",
        "lambda3",
        "root2_im",
        "root3_im",
        "sylvester_positive",
    ]);
    let mut indicator = Vec::with_capacity(cfg.scan_points);
    let mut sylvester_agrees = true;
    let mut indicator_matches_bound = true;
    for i in 0..cfg.scan_points {
        let e2 = eps_sq_max * i as f64 / (cfg.scan_points - 1) as f64;
        let mp = mp0.with_epsilon(e2.sqrt())?;
        let roots = characteristic_roots(&sd, &mp);
        let regime = roots.regime();
        let pd = stability_bound(&sd, &mp).positive_definite;
        let syl = sylvester_check(&bath, &mp).positive_definite;
        let growing = regime.has_positive_root();
        sylvester_agrees &= syl == pd;
        indicator_matches_bound &= growing != pd;
        indicator.push(growing);
        let r = roots.roots();
        let lambda3 = growing.then(|| r.iter().fold(f64::NEG_INFINITY, |a, z| if z.im == 0.0 { a.max(z.re) } else { a }));
        table.row(vec![
            e2.into(),
            mp.coupling_rhs(&sd).into(),
            r[0].re.into(),
            r[1].re.into(),
            r[2].re.into(),
            regime.name().into(),
            pd.into(),
            lambda3.into(),
            r[1].im.into(),
            r[2].im.into(),
            syl.into(),
        ]);
    }
    let flips: Vec<usize> = (1..indicator.len()).filter(|&i| indicator[i] != indicator[i - 1]).collect();
    let step = eps_sq_max / (cfg.scan_points - 1) as f64;
    let expected_index = bound / step;
    if bound < eps_sq_max {
        let single = flips.len() == 1 && (flips[0] as f64 - expected_index).abs() <= 1.0 + 1e-9;
        checks.set("single_flip_at_bound", single);
    }
    checks.set("indicator_matches_bound", indicator_matches_bound);
    checks.set("sylvester_agrees", sylvester_agrees);
    let results = json!({
        "critical_eps_sq": bound,
        "critical_coupling_rhs": bound * PI / (2.0 * sd.b()),
        "eps_sq_max": eps_sq_max,
        "nu_max": nu_max,
        "flip_indices": flips,
        "expected_flip_index": expected_index,
    });
    Ok((table.into_string(), results))
}

fn runaway(cfg: &ExperimentConfig, checks: &mut Checks) -> Result<(String, Value)> {
    let (sd, mp) = cfg.model.params()?;
    let roots = characteristic_roots(&sd, &mp);
    let Some((_, _, l3)) = roots.lambdas() else {
        return Err(Error::RegimeMismatch {
            expected: "LargeCoupling",
            found: roots.regime().name(),
        });
    };
    let rs = build_response(roots)?;
    let t_max = cfg.t_max.unwrap_or(20.0 / l3);
    let nu_max = cfg.nu_max.unwrap_or_else(|| default_nu_max(&sd, cfg.n, t_max));
    let bath = discretize_bath(&sd, cfg.n, nu_max)?;
    let fit = deterministic_runaway(&bath, &mp, t_max)?;
    let samples = solve_volterra_finite(&bath, &mp, t_max, max_finite_step(&bath, &mp))?;
    let mut table = Table::new(&["t", "q_finite", "q_limit"]);
    for k in 0..=100 {
        let t = t_max * k as f64 / 100.0;
        let r = samples.at(t.min(samples.t_end()))?;
        table.row(vec![
            t.into(),
            (mp.q0() * r.v1 + mp.p0() * r.v).into(),
            rs.mean(mp.q0(), mp.p0(), t).0.into(),
        ]);
    }
    let expected_sign = (rs.coefficients()[2].re * (mp.q0() * l3 + mp.p0())).signum();
    let relative_error = (fit.rate - l3) / l3;
    checks.set("rate_matches_lambda3", relative_error.abs() <= 0.02);
    checks.set("sign_matches", fit.q_final.signum() == expected_sign);
    checks.set("within_recurrence_time", t_max <= bath.recurrence_time());
    let results = json!({
        "model": model_json(&sd, &mp),
        "lambda3": l3,
        "rate": fit.rate,
        "relative_error": relative_error,
        "r_squared": fit.r_squared,
        "q_final": fit.q_final,
        "expected_sign": expected_sign,
        "t_max": t_max,
        "nu_max": nu_max,
        "recurrence_time": bath.recurrence_time(),
    });
    Ok((table.into_string(), results))
}
