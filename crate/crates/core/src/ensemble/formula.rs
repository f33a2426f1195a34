use num_complex::Complex64;
use rayon::prelude::*;

use super::initials::BathInitials;
use super::PhasePoint;
use crate::error::{Error, Result};
use crate::response::{max_finite_step, solve_volterra_finite, BathDiscretization, ModelParams, ResponseSamples};

/// `int_0^1 (1 - u) e^{-ixu} du = (1 - ix - e^{-ix}) / x^2`.
fn hat_left(x: f64) -> Complex64 {
    if x.abs() < 1.0 {
        // sum_k (-ix)^k / (k + 2)!
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 1..20 {
            term *= Complex64::new(0.0, -x) / (k + 2) as f64;
            sum += term;
        }
        sum
    } else {
        let e = Complex64::new(0.0, -x).exp();
        (Complex64::new(1.0, -x) - e) / (x * x)
    }
}

/// `int_0^1 u e^{-ixu} du = e^{-ix} conj(hat_left(x))`.
fn hat_right(x: f64) -> Complex64 {
    Complex64::new(0.0, -x).exp() * hat_left(x).conj()
}

/// `e^{i w t} int_0^t g(s) e^{-i w s} ds` for `g` piecewise linear on the grid,
/// closed by a partial panel ending at `(t, g_t)`.
fn filon(g: &[f64], h: f64, w: f64, t: f64, g_t: f64) -> Complex64 {
    let full = ((t / h) * (1.0 + 1e-14)).floor() as usize;
    let full = full.min(g.len() - 1);
    let (el, er) = (hat_left(w * h), hat_right(w * h));
    let mut acc = Complex64::new(0.0, 0.0);
    let step = Complex64::new(0.0, -w * h).exp();
    let mut phase = Complex64::new(1.0, 0.0);
    for j in 0..full {
        if j % 64 == 0 {
            phase = Complex64::new(0.0, -w * h * j as f64).exp();
        }
        acc += phase * (g[j] * el + g[j + 1] * er);
        phase *= step;
    }
    acc *= h;
    let s = h * full as f64;
    let tau = t - s;
    if tau > 0.0 {
        let x = w * tau;
        acc += Complex64::new(0.0, -w * s).exp() * tau * (g[full] * hat_left(x) + g_t * hat_right(x));
    }
    Complex64::new(0.0, w * t).exp() * acc
}

/// Precomputed response and bath convolutions for fixed `(bath, mp, times)`;
/// each sample then costs `O(N)` per time.
#[derive(Debug, Clone)]
pub struct FormulaPlan {
    times: Vec<f64>,
    /// `(q0 v' + p0 v, q0 v'' + p0 v')` at each time.
    deterministic: Vec<PhasePoint>,
    /// Per time: `eps alpha_n G_n` for `v` and for `v'`.
    g_q: Vec<Vec<Complex64>>,
    g_p: Vec<Vec<Complex64>>,
    omegas: Vec<f64>,
}

impl FormulaPlan {
    /// Solves for `v_N` with step `h` (the solver's step bound applies).
    pub fn new(bath: &BathDiscretization, mp: &ModelParams, times: &[f64], h: f64) -> Result<Self> {
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        let samples = solve_volterra_finite(bath, mp, t_max.max(h), h)?;
        Self::from_samples(bath, mp, &samples, times)
    }

    /// Default step: a quarter of the finite solver's bound.
    pub fn with_default_step(bath: &BathDiscretization, mp: &ModelParams, times: &[f64]) -> Result<Self> {
        Self::new(bath, mp, times, 0.25 * max_finite_step(bath, mp))
    }

    pub fn from_samples(bath: &BathDiscretization, mp: &ModelParams, samples: &ResponseSamples, times: &[f64]) -> Result<Self> {
        let eps = mp.epsilon();
        let mut deterministic = Vec::with_capacity(times.len());
        let mut g_q = Vec::with_capacity(times.len());
        let mut g_p = Vec::with_capacity(times.len());
        for &t in times {
            if !(t >= 0.0) {
                return Err(Error::invalid("times", "must be nonnegative"));
            }
            let r = samples.at(t)?;
            deterministic.push(PhasePoint {
                q: mp.q0() * r.v1 + mp.p0() * r.v,
                p: mp.q0() * r.v2 + mp.p0() * r.v1,
            });
            let (gq, gp): (Vec<Complex64>, Vec<Complex64>) = bath
                .omegas()
                .par_iter()
                .zip(bath.alphas())
                .map(|(&w, &a)| {
                    (
                        eps * a * filon(&samples.v, samples.h, w, t, r.v),
                        eps * a * filon(&samples.v1, samples.h, w, t, r.v1),
                    )
                })
                .unzip();
            g_q.push(gq);
            g_p.push(gp);
        }
        Ok(Self {
            times: times.to_vec(),
            deterministic,
            g_q,
            g_p,
            omegas: bath.omegas().to_vec(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Trajectory with `E_n = 0`.
    pub fn deterministic(&self) -> &[PhasePoint] {
        &self.deterministic
    }

    /// `q = q0 v' + p0 v + eps int_0^t v(t - tau) f_N(tau) dtau`, and `p` with `v'`.
    pub fn trajectory(&self, initials: &BathInitials) -> Vec<PhasePoint> {
        let z: Vec<Complex64> = self
            .omegas
            .iter()
            .zip(initials.q.iter().zip(&initials.p))
            .map(|(w, (q, p))| Complex64::new(*q, -p / w))
            .collect();
        self.deterministic
            .iter()
            .zip(self.g_q.iter().zip(&self.g_p))
            .map(|(d, (gq, gp))| {
                let (mut sq, mut sp) = (0.0, 0.0);
                for (zn, (a, b)) in z.iter().zip(gq.iter().zip(gp)) {
                    sq += (zn * a).re;
                    sp += (zn * b).re;
                }
                PhasePoint { q: d.q - sq, p: d.p - sp }
            })
            .collect()
    }

    /// `Var q = eps^2 kT sum alpha_n^2 |G_n|^2 / omega_n^2`, and likewise for
    /// `p` and the cross term: the exact finite-bath law under Gibbs initials.
    pub fn exact_covariance(&self, kt: f64) -> Vec<(f64, f64, f64)> {
        self.g_q
            .iter()
            .zip(&self.g_p)
            .map(|(gq, gp)| {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for (w, (x, y)) in self.omegas.iter().zip(gq.iter().zip(gp)) {
                    // Var(Q) = kT / w^2, Var(P / w) = kT / w^2
                    let s = kt / (w * w);
                    a += s * x.norm_sqr();
                    c += s * y.norm_sqr();
                    b += s * (x * y.conj()).re;
                }
                (a, b, c)
            })
            .collect()
    }
}

/// One trajectory of the finite system through the solution formula, with
/// `v_N` supplied on a grid that must reach the last requested time.
pub fn trajectory_solution_formula(
    bath: &BathDiscretization,
    mp: &ModelParams,
    initials: &BathInitials,
    samples: &ResponseSamples,
    times: &[f64],
) -> Result<Vec<PhasePoint>> {
    Ok(FormulaPlan::from_samples(bath, mp, samples, times)?.trajectory(initials))
}
