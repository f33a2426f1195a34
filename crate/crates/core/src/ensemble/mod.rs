//! Finite-bath Monte Carlo: Gibbs-random bath initials, trajectories through
//! the solution formula or a symplectic integrator, and ensemble moments.

mod formula;
mod initials;
mod stats;
mod symplectic;

pub use formula::{trajectory_solution_formula, FormulaPlan};
pub use initials::{forcing, sample_bath_initials, BathInitials};
pub use stats::{sample_moments, EnsembleMoments};
pub use symplectic::{integrate_symplectic, max_symplectic_step, trajectory_symplectic, SymplecticRun};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{decay_rate_fit, DecayFit};
use crate::error::{Error, Result};
use crate::response::{max_finite_step, solve_volterra_finite, sylvester_check, BathDiscretization, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    SolutionFormula,
    Symplectic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub bath: BathDiscretization,
    pub mp: ModelParams,
    pub sample_count: usize,
    pub times: Vec<f64>,
    pub seed: u64,
    pub method: Method,
    /// Integration step; `None` picks a method-specific default.
    pub step: Option<f64>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 2 {
            return Err(Error::invalid("sample_count", "must be at least 2"));
        }
        if self.times.is_empty() {
            return Err(Error::invalid("times", "must not be empty"));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("times", "must be finite, nonnegative and nondecreasing"));
        }
        if let Some(h) = self.step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid("step", "must be finite and positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub sample_count: usize,
    pub seed: u64,
    pub method: Method,
    pub moments: Vec<EnsembleMoments>,
    pub warnings: Vec<String>,
}

/// Independent substream for sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on a pool sized by `BATHLAB_THREADS` when set, else on the global pool.
pub fn with_worker_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var("BATHLAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let t_last = *cfg.times.last().expect("validated");
    let recurrence = cfg.bath.recurrence_time();
    if t_last > recurrence {
        warnings.push(format!(
            "last time {t_last} exceeds the bath recurrence time {recurrence}; the finite bath no longer mimics the continuum"
        ));
    }
    let kt = cfg.mp.kt();
    let trajectories: Vec<Vec<PhasePoint>> = match cfg.method {
        Method::SolutionFormula => {
            let h = cfg.step.unwrap_or(0.25 * max_finite_step(&cfg.bath, &cfg.mp));
            let plan = FormulaPlan::new(&cfg.bath, &cfg.mp, &cfg.times, h)?;
            with_worker_pool(|| {
                (0..cfg.sample_count)
                    .into_par_iter()
                    .map(|i| {
                        let init = sample_bath_initials(&cfg.bath, kt, &mut sample_rng(cfg.seed, i as u64));
                        plan.trajectory(&init)
                    })
                    .collect()
            })
        }
        Method::Symplectic => {
            let h = cfg.step.unwrap_or(max_symplectic_step(&cfg.bath, &cfg.mp));
            with_worker_pool(|| {
                (0..cfg.sample_count)
                    .into_par_iter()
                    .map(|i| {
                        let init = sample_bath_initials(&cfg.bath, kt, &mut sample_rng(cfg.seed, i as u64));
                        trajectory_symplectic(&cfg.bath, &cfg.mp, &init, &cfg.times, h)
                    })
                    .collect::<Result<_>>()
            })?
        }
    };
    let moments = cfg
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let q: Vec<f64> = trajectories.iter().map(|tr| tr[k].q).collect();
            let p: Vec<f64> = trajectories.iter().map(|tr| tr[k].p).collect();
            sample_moments(t, &q, &p)
        })
        .collect();
    Ok(EnsembleResult {
        sample_count: cfg.sample_count,
        seed: cfg.seed,
        method: cfg.method,
        moments,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunawayFit {
    /// Fitted growth rate of `|q(t)|`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub q_final: f64,
}

/// Fits `log |q(t)|` on `[t_max / 2, t_max]` for the trajectory with the bath at rest.
pub fn deterministic_runaway(bath: &BathDiscretization, mp: &ModelParams, t_max: f64) -> Result<RunawayFit> {
    if sylvester_check(bath, mp).positive_definite {
        return Err(Error::RegimeMismatch {
            expected: "LargeCoupling",
            found: "positive definite",
        });
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid("t_max", "must be finite and positive"));
    }
    let samples = solve_volterra_finite(bath, mp, t_max, max_finite_step(bath, mp))?;
    let count = 64;
    let mut times = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut q_final = 0.0;
    for k in 0..count {
        let t = 0.5 * t_max * (1.0 + k as f64 / (count - 1) as f64);
        let r = samples.at(t.min(samples.t_end()))?;
        let q = mp.q0() * r.v1 + mp.p0() * r.v;
        times.push(t);
        values.push(q.abs());
        q_final = q;
    }
    let DecayFit {
        rate,
        intercept,
        r_squared,
    } = decay_rate_fit(&times, &values)?;
    Ok(RunawayFit {
        rate,
        intercept,
        r_squared,
        q_final,
    })
}
