//! Gaussian law of the system oscillator, its marginals, the Gibbs reference
//! density and fitting helpers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceTriple;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::response::{ModelParams, ResponseSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub t: f64,
    pub q_star: f64,
    pub p_star: f64,
    /// `p* - s q*` for the covariance shear `s`, evaluated without cancellation.
    pub y_star: f64,
    pub cov: CovarianceTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

/// `(q*, p*) = (q0 v' + p0 v, q0 v'' + p0 v')`.
pub fn mean_trajectory(rs: &ResponseSolution, mp: &ModelParams, t: f64) -> (f64, f64) {
    rs.mean(mp.q0(), mp.p0(), t)
}

impl GaussianState {
    pub fn new(t: f64, q_star: f64, p_star: f64, cov: CovarianceTriple) -> Self {
        Self {
            t,
            q_star,
            p_star,
            y_star: p_star - cov.shear * q_star,
            cov,
        }
    }

    /// State at `cov.t` with means taken from the response function.
    pub fn from_response(rs: &ResponseSolution, mp: &ModelParams, cov: CovarianceTriple) -> Self {
        let t = cov.t;
        let (q_star, p_star) = mean_trajectory(rs, mp, t);
        let (w0, w1) = rs.eval_sheared(t, cov.shear);
        Self {
            t,
            q_star,
            p_star,
            y_star: mp.q0() * w1 + mp.p0() * w0,
            cov,
        }
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean_q: self.q_star,
            mean_p: self.p_star,
            var_q: self.cov.a_coef,
            var_p: self.cov.c_coef,
            cov_qp: self.cov.b_coef,
        }
    }

    fn checked_det(&self) -> Result<f64> {
        let det = self.cov.det();
        if !(det > 0.0) || self.cov.a_coef <= 0.0 {
            return Err(Error::DegenerateCovariance { det });
        }
        Ok(det)
    }

    /// `(C xi^2 - 2 B xi eta + A eta^2) / (2 (AC - B^2))` with `xi = q - q*`,
    /// `eta = p - p*`, written in the sheared frame.
    pub fn exponent(&self, q: f64, p: f64) -> Result<f64> {
        let det = self.checked_det()?;
        let c = &self.cov;
        let xi = q - self.q_star;
        let zeta = (p - c.shear * q) - self.y_star;
        Ok((c.var_y * xi * xi - 2.0 * c.cov_qy * xi * zeta + c.a_coef * zeta * zeta) / (2.0 * det))
    }
}

pub fn log_density_at(gs: &GaussianState, q: f64, p: f64) -> Result<f64> {
    let det = gs.checked_det()?;
    Ok(-gs.exponent(q, p)? - (2.0 * PI).ln() - 0.5 * det.ln())
}

/// `exp(-Pi) / (2 pi sqrt(AC - B^2))`.
pub fn density_at(gs: &GaussianState, q: f64, p: f64) -> Result<f64> {
    Ok(log_density_at(gs, q, p)?.exp())
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::DegenerateCovariance { det: var });
    }
    Ok((-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// Marginal in `q`: normal with mean `q*` and variance `A`.
pub fn marginal_q(gs: &GaussianState, q: f64) -> Result<f64> {
    normal_pdf(q, gs.q_star, gs.cov.a_coef)
}

/// Marginal in `p`: normal with mean `p*` and variance `C`.
pub fn marginal_p(gs: &GaussianState, p: f64) -> Result<f64> {
    normal_pdf(p, gs.p_star, gs.cov.c_coef)
}

/// `(omega / 2 pi kT) exp(-(p^2 + omega^2 q^2) / 2kT)`.
pub fn gibbs_density(mp: &ModelParams, q: f64, p: f64) -> f64 {
    let kt = mp.kt();
    mp.omega() / (2.0 * PI * kt) * (-(p * p + mp.omega_sq() * q * q) / (2.0 * kt)).exp()
}

/// The Gibbs law as a [`GaussianState`]: `A = kT / omega^2`, `B = 0`, `C = kT`.
pub fn gibbs_state(mp: &ModelParams) -> GaussianState {
    let cov = CovarianceTriple::from_abc(f64::INFINITY, mp.kt() / mp.omega_sq(), 0.0, mp.kt());
    GaussianState::new(f64::INFINITY, 0.0, 0.0, cov)
}

/// Tensor grid for sup-norm diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

fn linspace(center: f64, half: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    (0..n)
        .map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

impl DiagnosticGrid {
    /// `n x n` points over `(q* +- k sqrt(A)) x (p* +- k sqrt(C))`.
    pub fn around_state(gs: &GaussianState, n: usize, sigmas: f64) -> Self {
        Self {
            q: linspace(gs.q_star, sigmas * gs.cov.a_coef.sqrt(), n),
            p: linspace(gs.p_star, sigmas * gs.cov.c_coef.sqrt(), n),
        }
    }

    /// `n x n` points over the Gibbs box `(+- k sqrt(kT) / omega) x (+- k sqrt(kT))`.
    pub fn gibbs_box(mp: &ModelParams, n: usize, sigmas: f64) -> Self {
        let s = mp.kt().sqrt();
        Self {
            q: linspace(0.0, sigmas * s / mp.omega(), n),
            p: linspace(0.0, sigmas * s, n),
        }
    }

    /// The default 41 x 41, six-sigma grid around a state.
    pub fn standard(gs: &GaussianState) -> Self {
        Self::around_state(gs, 41, 6.0)
    }
}

/// `max |rho_S - rho_Gibbs|` over the grid.
pub fn gibbs_distance(gs: &GaussianState, mp: &ModelParams, grid: &DiagnosticGrid) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &q in &grid.q {
        for &p in &grid.p {
            worst = worst.max((density_at(gs, q, p)? - gibbs_density(mp, q, p)).abs());
        }
    }
    Ok(worst)
}

/// Tensor Gauss-Legendre integral of the density over `+- sigmas` standard
/// deviations in the sheared coordinates `(q, p - s q)`, which has unit Jacobian.
pub fn normalization(gs: &GaussianState, sigmas: f64, panels: usize) -> Result<f64> {
    gs.checked_det()?;
    let (x, w) = gauss_legendre(8);
    let axis = |center: f64, half: f64| -> Vec<(f64, f64)> {
        let width = 2.0 * half / panels as f64;
        let mut out = Vec::with_capacity(panels * x.len());
        for k in 0..panels {
            let mid = center - half + width * (k as f64 + 0.5);
            for (xi, wi) in x.iter().zip(&w) {
                out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
            }
        }
        out
    };
    let qs = axis(gs.q_star, sigmas * gs.cov.a_coef.sqrt());
    let ys = axis(gs.y_star, sigmas * gs.cov.var_y.sqrt());
    let s = gs.cov.shear;
    let mut total = 0.0;
    for &(q, wq) in &qs {
        for &(y, wy) in &ys {
            total += wq * wy * density_at(gs, q, y + s * q)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares fit of `log(values)` against `times`.
pub fn decay_rate_fit(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "length differs from times"));
    }
    if times.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: times.len(),
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveValue { index, value });
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    fit_line(times, &logs)
}

/// Least squares line `y = rate x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<DecayFit> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("times", "must not all coincide"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rate = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DecayFit {
        rate,
        intercept: my - rate * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::abc_closed_form;
    use crate::response::{build_response, characteristic_roots};
    use crate::spectral::SpectralDensity;

    fn reference_state(t: f64) -> (GaussianState, ModelParams) {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.0).unwrap();
        let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
        let cov = abc_closed_form(&sd, &mp, rs.roots(), t).unwrap();
        (GaussianState::from_response(&rs, &mp, cov), mp)
    }

    #[test]
    fn peak_value() {
        let (gs, _) = reference_state(2.0);
        let peak = density_at(&gs, gs.q_star, gs.p_star).unwrap();
        assert!((peak - 1.0 / (2.0 * PI * gs.cov.det().sqrt())).abs() < 1e-12 * peak);
    }

    #[test]
    fn exponent_matches_unsheared_arrangement() {
        let (gs, _) = reference_state(1.5);
        let c = &gs.cov;
        for (q, p) in [(0.3, -0.2), (2.0, 1.0), (-1.0, 4.0)] {
            let (xi, eta) = (q - gs.q_star, p - gs.p_star);
            let literal = (c.c_coef * xi * xi - 2.0 * c.b_coef * xi * eta + c.a_coef * eta * eta) / (2.0 * c.det_naive());
            let got = gs.exponent(q, p).unwrap();
            assert!((got - literal).abs() < 1e-9 * literal.max(1.0), "{got} vs {literal}");
        }
    }

    #[test]
    fn normalizes() {
        for t in [0.5, 3.0, 20.0] {
            let (gs, _) = reference_state(t);
            let total = normalization(&gs, 8.0, 24).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "t={t}: {total}");
        }
    }

    #[test]
    fn marginal_peaks_and_mass() {
        let (gs, _) = reference_state(1.0);
        let peak = marginal_p(&gs, gs.p_star).unwrap();
        assert!((peak - 1.0 / (2.0 * PI * gs.cov.c_coef).sqrt()).abs() < 1e-14);
        let (x, w) = gauss_legendre(40);
        let half = 10.0 * gs.cov.a_coef.sqrt();
        let mass: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * half * marginal_q(&gs, gs.q_star + half * xi).unwrap())
            .sum();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gibbs_reference() {
        let mp = ModelParams::new(2.0, 0.0, 0.5, 0.0, 0.0).unwrap();
        assert!((gibbs_density(&mp, 0.0, 0.0) - 2.0 / (2.0 * PI * 0.5)).abs() < 1e-15);
        let gs = gibbs_state(&mp);
        let grid = DiagnosticGrid::standard(&gs);
        assert!(gibbs_distance(&gs, &mp, &grid).unwrap() < 1e-14);
        assert!((normalization(&gs, 8.0, 16).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_covariance_is_reported() {
        let gs = GaussianState::new(0.0, 1.0, 0.0, CovarianceTriple::zero(0.0, 0.0));
        assert!(matches!(density_at(&gs, 0.0, 0.0), Err(Error::DegenerateCovariance { .. })));
    }

    #[test]
    fn fit_exact_exponential() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let fit = decay_rate_fit(&t, &v).unwrap();
        assert!((fit.rate + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            decay_rate_fit(&t, &[1.0, 2.0, 0.0, 1.0, 1.0]),
            Err(Error::NonPositiveValue { index: 2, .. })
        ));
        assert!(matches!(decay_rate_fit(&t[..4], &[1.0; 4]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn initial_moments() {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, 0.5, 4.0, 1.0, 0.7, -0.3).unwrap();
        let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
        let (q, p) = mean_trajectory(&rs, &mp, 0.0);
        assert!((q - 0.7).abs() < 1e-12 && (p + 0.3).abs() < 1e-12);
    }
}
