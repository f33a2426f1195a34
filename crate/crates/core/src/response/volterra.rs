//! Time-stepping oracles for `v'' + omega^2 v = eps^2 int_0^t K(t - s) v(s) ds`,
//! `v(0) = 0`, `v'(0) = 1`.
//!
//! For the Lorentzian continuum `K = Q'` is a single decaying exponential, so
//! the memory integral `F` obeys `F' = -kappa F + v` and the problem is a
//! local ODE in `(v, v', F)`, integrated with RK4. General kernels use a
//! trapezoidal rule in time with product-integration weights: the
//! convolution is integrated exactly against the piecewise-linear
//! interpolant of `v`, so oscillatory finite-bath kernels need no extra
//! resolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solution::ResponseValue;
use super::{characteristic_roots, BathDiscretization, ModelParams};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral::SpectralDensity;

/// `v, v', v''` on the uniform grid `t_i = i h`, `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSamples {
    pub h: f64,
    pub v: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl ResponseSamples {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.v.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        self.h * self.steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.h * i as f64
    }

    pub fn value(&self, i: usize) -> ResponseValue {
        ResponseValue {
            v: self.v[i],
            v1: self.v1[i],
            v2: self.v2[i],
        }
    }

    /// Interpolated value: cubic Hermite for `v` and `v'`, linear for `v''`.
    pub fn at(&self, t: f64) -> Result<ResponseValue> {
        let t_end = self.t_end();
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
            return Err(Error::GridTooCoarse { t, h: self.h, t_end });
        }
        let x = t / self.h;
        let i = (x.floor() as usize).min(self.steps().saturating_sub(1));
        let s = x - i as f64;
        if s.abs() < 1e-9 {
            return Ok(self.value(i));
        }
        if (s - 1.0).abs() < 1e-9 {
            return Ok(self.value(i + 1));
        }
        let hermite = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * self.h * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * self.h * d1
        };
        Ok(ResponseValue {
            v: hermite(self.v[i], self.v1[i], self.v[i + 1], self.v1[i + 1]),
            v1: hermite(self.v1[i], self.v2[i], self.v1[i + 1], self.v2[i + 1]),
            v2: (1.0 - s) * self.v2[i] + s * self.v2[i + 1],
        })
    }
}

/// Extrapolates two runs with steps `h` and `h/2` at the coarse nodes:
/// `(2^order fine - coarse) / (2^order - 1)`.
pub fn richardson(coarse: &ResponseSamples, fine: &ResponseSamples, order: u32) -> Result<ResponseSamples> {
    if (fine.h * 2.0 - coarse.h).abs() > 1e-12 * coarse.h || fine.steps() != 2 * coarse.steps() {
        return Err(Error::invalid("fine", "must use half the coarse step over the same span"));
    }
    let f = (1u64 << order) as f64;
    let mix = |c: &[f64], x: &[f64]| -> Vec<f64> {
        c.iter()
            .enumerate()
            .map(|(i, &c)| (f * x[2 * i] - c) / (f - 1.0))
            .collect()
    };
    Ok(ResponseSamples {
        h: coarse.h,
        v: mix(&coarse.v, &fine.v),
        v1: mix(&coarse.v1, &fine.v1),
        v2: mix(&coarse.v2, &fine.v2),
    })
}

fn grid(t_max: f64, h: f64) -> Result<(usize, f64)> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid("t_max", format!("must be finite and positive, got {t_max}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h", format!("must be finite and positive, got {h}")));
    }
    let steps = (t_max / h * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, t_max / steps as f64))
}

/// Largest step accepted by [`solve_volterra`] for these parameters.
pub fn max_continuum_step(sd: &SpectralDensity, mp: &ModelParams) -> f64 {
    let roots = characteristic_roots(sd, mp);
    (0.01 / roots.max_modulus()).min(0.01 / sd.kappa())
}

/// Continuum response by RK4 on `(v, v', F)`; the grid step is `h` shrunk to
/// divide `t_max` evenly.
pub fn solve_volterra(sd: &SpectralDensity, mp: &ModelParams, t_max: f64, h: f64) -> Result<ResponseSamples> {
    let max = max_continuum_step(sd, mp);
    if h > max {
        return Err(Error::StepTooLarge { h, max });
    }
    let (steps, h) = grid(t_max, h)?;
    let w2 = mp.omega_sq();
    let g = mp.coupling_rhs(sd);
    let kappa = sd.kappa();
    let rhs = |y: [f64; 3]| [y[1], -w2 * y[0] + g * y[2], -kappa * y[2] + y[0]];

    let mut out = ResponseSamples {
        h,
        v: Vec::with_capacity(steps + 1),
        v1: Vec::with_capacity(steps + 1),
        v2: Vec::with_capacity(steps + 1),
    };
    let mut y = [0.0, 1.0, 0.0];
    let push = |y: &[f64; 3], out: &mut ResponseSamples| {
        out.v.push(y[0]);
        out.v1.push(y[1]);
        out.v2.push(-w2 * y[0] + g * y[2]);
    };
    push(&y, &mut out);
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
        let k3 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
        let k4 = rhs(std::array::from_fn(|i| y[i] + h * k3[i]));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        push(&y, &mut out);
    }
    Ok(out)
}

/// Hat-function weights of a kernel on a grid of step `h`:
/// `plus[k] = int_0^h (1 - s/h) K(kh + s) ds`, `minus[k] = int_0^h (1 - s/h) K(kh - s) ds`.
struct LagWeights {
    plus: Vec<f64>,
    minus: Vec<f64>,
}

/// `int_0^h (1 - s/h) cos(w s) ds` and `int_0^h (1 - s/h) sin(w s) ds`.
fn hat_moments(w: f64, h: f64) -> (f64, f64) {
    let x = w * h;
    if x.abs() < 1e-3 {
        let x2 = x * x;
        let ic = 0.5 - x2 / 24.0 + x2 * x2 / 720.0;
        let is = x / 6.0 - x * x2 / 120.0 + x * x2 * x2 / 5040.0;
        (h * ic, h * is)
    } else {
        let half = (0.5 * x).sin();
        (h * 2.0 * half * half / (x * x), h * (x - x.sin()) / (x * x))
    }
}

fn bath_weights(bath: &BathDiscretization, h: f64, steps: usize) -> LagWeights {
    const BLOCK: usize = 256;
    let modes: Vec<(f64, f64, f64, f64)> = bath
        .omegas()
        .iter()
        .zip(bath.alphas())
        .map(|(&w, &a)| {
            let (ic, is) = hat_moments(w, h);
            (w, a * a / w, ic, is)
        })
        .collect();
    // Blocks of lags in parallel; within a lag the modes are summed in order,
    // so the result does not depend on the thread count.
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..=steps)
        .step_by(BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k0| {
            let len = BLOCK.min(steps + 1 - k0);
            let (mut plus, mut minus) = (vec![0.0; len], vec![0.0; len]);
            for &(w, c, ic, is) in &modes {
                let (ds, dc) = (w * h).sin_cos();
                let (mut s, mut co) = (0.0, 0.0);
                for j in 0..len {
                    if j % 32 == 0 {
                        (s, co) = (w * h * (k0 + j) as f64).sin_cos();
                    }
                    plus[j] += c * (s * ic + co * is);
                    minus[j] += c * (s * ic - co * is);
                    (s, co) = (s * dc + co * ds, co * dc - s * ds);
                }
            }
            (plus, minus)
        })
        .collect();
    let (plus, minus) = blocks.into_iter().fold((Vec::new(), Vec::new()), |(mut p, mut m), (bp, bm)| {
        p.extend(bp);
        m.extend(bm);
        (p, m)
    });
    LagWeights { plus, minus }
}

fn kernel_weights<K: Fn(f64) -> f64>(kernel: &K, h: f64, steps: usize, order: usize) -> LagWeights {
    let (x, w) = gauss_legendre(order);
    let mut plus = vec![0.0; steps + 1];
    let mut minus = vec![0.0; steps + 1];
    for k in 0..=steps {
        let base = h * k as f64;
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * h * (xi + 1.0);
            let wt = 0.5 * h * wi * (1.0 - s / h);
            plus[k] += wt * kernel(base + s);
            if k > 0 {
                minus[k] += wt * kernel(base - s);
            }
        }
    }
    LagWeights { plus, minus }
}

fn step_convolution(w2: f64, e2: f64, h: f64, steps: usize, lw: &LagWeights) -> ResponseSamples {
    // Interior node at lag k carries both half-hats.
    let full: Vec<f64> = (0..=steps).map(|k| lw.plus[k] + lw.minus[k]).collect();
    let g = -w2 + e2 * lw.plus[0];
    let mut v = vec![0.0; steps + 1];
    let mut u = vec![0.0; steps + 1];
    let mut acc = vec![0.0; steps + 1];
    u[0] = 1.0;
    for m in 1..=steps {
        // v_0 = 0, so the endpoint weight at tau = 0 never contributes.
        let hist: f64 = (1..m).map(|j| full[m - j] * v[j]).sum();
        let vm = (v[m - 1] + h * u[m - 1] + 0.25 * h * h * (acc[m - 1] + e2 * hist)) / (1.0 - 0.25 * h * h * g);
        v[m] = vm;
        acc[m] = g * vm + e2 * hist;
        u[m] = u[m - 1] + 0.5 * h * (acc[m - 1] + acc[m]);
    }
    ResponseSamples { h, v, v1: u, v2: acc }
}

/// Largest step accepted by [`solve_volterra_finite`]: `0.01 / sqrt(omega^2 + eps^2 sum alpha^2/omega^2)`.
pub fn max_finite_step(bath: &BathDiscretization, mp: &ModelParams) -> f64 {
    0.01 / (mp.omega_sq() + mp.eps_sq() * bath.weight_sum()).sqrt()
}

/// Finite-bath response with kernel `K_N`; second order in `h`.
pub fn solve_volterra_finite(bath: &BathDiscretization, mp: &ModelParams, t_max: f64, h: f64) -> Result<ResponseSamples> {
    let max = max_finite_step(bath, mp);
    if h > max {
        return Err(Error::StepTooLarge { h, max });
    }
    let (steps, h) = grid(t_max, h)?;
    let lw = bath_weights(bath, h, steps);
    Ok(step_convolution(mp.omega_sq(), mp.eps_sq(), h, steps, &lw))
}

/// Response for an arbitrary smooth kernel, with `order`-point Gauss-Legendre
/// hat weights per step. No step restriction beyond `h > 0`.
pub fn solve_volterra_kernel<K: Fn(f64) -> f64>(
    kernel: K,
    omega: f64,
    epsilon: f64,
    t_max: f64,
    h: f64,
    order: usize,
) -> Result<ResponseSamples> {
    let (steps, h) = grid(t_max, h)?;
    let lw = kernel_weights(&kernel, h, steps, order.max(1));
    Ok(step_convolution(omega * omega, epsilon * epsilon, h, steps, &lw))
}
