//! Response function `v(t)` of the system oscillator: characteristic roots,
//! the exponential closed form, integro-differential solvers and the
//! discretized bath.

mod bath;
mod roots;
mod solution;
mod volterra;

pub use bath::{discretize_bath, finite_kernel, sylvester_check, stability_bound, BathDiscretization, StabilityBound, SylvesterCheck};
pub use roots::{characteristic_roots, Cubic, CubicRoots, Regime};
pub use solution::{build_response, eval_response, ResponseSolution, ResponseValue};
pub use volterra::{
    max_continuum_step, max_finite_step, richardson, solve_volterra, solve_volterra_finite,
    solve_volterra_kernel, ResponseSamples,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralDensity;

/// System oscillator parameters and initial point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega: f64,
    epsilon: f64,
    kt: f64,
    q0: f64,
    p0: f64,
}

impl ModelParams {
    pub fn new(omega: f64, epsilon: f64, kt: f64, q0: f64, p0: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("omega", format!("must be finite and positive, got {omega}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", format!("must be finite and nonnegative, got {epsilon}")));
        }
        if !(kt.is_finite() && kt > 0.0) {
            return Err(Error::invalid("kT", format!("must be finite and positive, got {kt}")));
        }
        if !q0.is_finite() {
            return Err(Error::invalid("q0", "must be finite"));
        }
        if !p0.is_finite() {
            return Err(Error::invalid("p0", "must be finite"));
        }
        Ok(Self { omega, epsilon, kt, q0, p0 })
    }

    /// Builds the coupling from `eps^2 pi / 2b = rhs`.
    pub fn from_coupling_rhs(sd: &SpectralDensity, omega: f64, rhs: f64, kt: f64, q0: f64, p0: f64) -> Result<Self> {
        if !(rhs.is_finite() && rhs >= 0.0) {
            return Err(Error::invalid("coupling_rhs", format!("must be finite and nonnegative, got {rhs}")));
        }
        Self::new(omega, (2.0 * sd.b() * rhs / PI).sqrt(), kt, q0, p0)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_sq(&self) -> f64 {
        self.omega * self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eps_sq(&self) -> f64 {
        self.epsilon * self.epsilon
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `eps^2 pi / 2b`, the constant term shift of the characteristic cubic.
    pub fn coupling_rhs(&self, sd: &SpectralDensity) -> f64 {
        self.eps_sq() * PI / (2.0 * sd.b())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.omega, epsilon, self.kt, self.q0, self.p0)
    }

    pub fn with_initial(&self, q0: f64, p0: f64) -> Result<Self> {
        Self::new(self.omega, self.epsilon, self.kt, q0, p0)
    }
}
