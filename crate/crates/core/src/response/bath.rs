use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::spectral::SpectralDensity;

/// Finite bath: mode frequencies `omega_n` and couplings `alpha_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathDiscretization {
    omegas: Vec<f64>,
    alphas: Vec<f64>,
}

impl BathDiscretization {
    pub fn new(omegas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::invalid("n", "bath must contain at least one mode"));
        }
        if omegas.len() != alphas.len() {
            return Err(Error::invalid("alphas", "length differs from omegas"));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("omegas", "frequencies must be finite and positive"));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("omegas", "frequencies must be strictly increasing"));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid("alphas", "couplings must be finite and positive"));
        }
        Ok(Self { omegas, alphas })
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn max_omega(&self) -> f64 {
        *self.omegas.last().expect("bath is nonempty")
    }

    /// `sum alpha_n^2 / omega_n^2`, the discrete analogue of `int J`.
    pub fn weight_sum(&self) -> f64 {
        self.omegas
            .iter()
            .zip(&self.alphas)
            .map(|(w, a)| (a / w).powi(2))
            .sum()
    }

    /// `sum_{omega_n < nu} alpha_n^2 / omega_n^2`.
    pub fn cumulative_weight(&self, nu: f64) -> f64 {
        self.omegas
            .iter()
            .zip(&self.alphas)
            .take_while(|(w, _)| **w < nu)
            .map(|(w, a)| (a / w).powi(2))
            .sum()
    }

    /// Recurrence time `2 pi / delta` of an equally spaced bath, using the
    /// smallest gap for general spacings.
    pub fn recurrence_time(&self) -> f64 {
        let gap = if self.n() == 1 {
            self.omegas[0] * 2.0
        } else {
            self.omegas
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min)
        };
        2.0 * std::f64::consts::PI / gap
    }
}

/// Midpoint grid `omega_k = (k - 1/2) delta` with `alpha_k^2 / omega_k^2 = J(omega_k) delta`.
pub fn discretize_bath(sd: &SpectralDensity, n: usize, nu_max: f64) -> Result<BathDiscretization> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(nu_max.is_finite() && nu_max > 0.0) {
        return Err(Error::invalid("nu_max", format!("must be finite and positive, got {nu_max}")));
    }
    let delta = nu_max / n as f64;
    let omegas: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) * delta).collect();
    let alphas = omegas.iter().map(|&w| w * (sd.eval(w) * delta).sqrt()).collect();
    BathDiscretization::new(omegas, alphas)
}

/// `K_N(t) = sum alpha_n^2 sin(omega_n t) / omega_n`.
pub fn finite_kernel(bath: &BathDiscretization, t: f64) -> f64 {
    bath.omegas
        .iter()
        .zip(&bath.alphas)
        .map(|(w, a)| a * a * (w * t).sin() / w)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    pub critical_eps_sq: f64,
    pub positive_definite: bool,
}

/// Continuum positivity bound `eps^2 <= 2 sqrt(ab) omega^2 / pi`.
pub fn stability_bound(sd: &SpectralDensity, mp: &ModelParams) -> StabilityBound {
    let critical_eps_sq = mp.omega_sq() / sd.total_integral();
    StabilityBound {
        critical_eps_sq,
        positive_definite: mp.eps_sq() <= critical_eps_sq * (1.0 + 1e-12),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SylvesterCheck {
    /// `omega^2 - eps^2 sum alpha_n^2 / omega_n^2`; the full leading minor is
    /// this factor times `prod omega_n^2`.
    pub d_n: f64,
    /// `sum ln omega_n^2`, so that `ln |D_N| = log_mode_product + ln |d_n|`.
    pub log_mode_product: f64,
    pub positive_definite: bool,
}

pub fn sylvester_check(bath: &BathDiscretization, mp: &ModelParams) -> SylvesterCheck {
    let d_n = mp.omega_sq() - mp.eps_sq() * bath.weight_sum();
    SylvesterCheck {
        d_n,
        log_mode_product: bath.omegas.iter().map(|w| 2.0 * w.ln()).sum(),
        positive_definite: d_n > 0.0,
    }
}
