#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
//! Bogolyubov's oscillator coupled to a heat bath of stochastic oscillators
//! with a Lorentzian spectral density: response function, exact Gaussian law
//! of the system oscillator, coupling regimes and finite-bath Monte Carlo.

pub mod cli;
pub mod covariance;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod quadrature;
pub mod response;
pub mod spectral;

pub use error::{Error, Result};
