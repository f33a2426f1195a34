use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::CubicRoots;
use crate::error::{Error, Result};

/// Minimum relative root separation accepted by [`build_response`].
pub const MIN_ROOT_SEPARATION: f64 = 1e-8;

/// `v(t) = sum_i C_i exp(r_i t)` with `v(0) = 0, v'(0) = 1, v''(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSolution {
    roots: CubicRoots,
    coefficients: [Complex64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseValue {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
}

pub fn build_response(roots: CubicRoots) -> Result<ResponseSolution> {
    let separation = roots.relative_separation();
    if !(separation > MIN_ROOT_SEPARATION) {
        return Err(Error::NearDegenerateRoots { separation });
    }
    let r = roots.roots();
    let mut coefficients = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        coefficients[i] = -(r[j] + r[k]) / ((r[i] - r[j]) * (r[i] - r[k]));
    }
    if !roots.all_real() {
        // The pair must carry conjugate weights for v to be real.
        coefficients[2] = coefficients[1].conj();
        coefficients[0].im = 0.0;
    }
    Ok(ResponseSolution { roots, coefficients })
}

pub fn eval_response(rs: &ResponseSolution, t: f64) -> ResponseValue {
    rs.eval(t)
}

impl ResponseSolution {
    pub fn roots(&self) -> &CubicRoots {
        &self.roots
    }

    pub fn coefficients(&self) -> [Complex64; 3] {
        self.coefficients
    }

    /// Complex partial sums `sum_i C_i r_i^k exp(r_i t)` for `k = 0, 1, 2`.
    pub fn eval_complex(&self, t: f64) -> [Complex64; 3] {
        let r = self.roots.roots();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let term = self.coefficients[i] * (r[i] * t).exp();
            out[0] += term;
            out[1] += term * r[i];
            out[2] += term * r[i] * r[i];
        }
        out
    }

    pub fn eval(&self, t: f64) -> ResponseValue {
        let [v, v1, v2] = self.eval_complex(t);
        ResponseValue {
            v: v.re,
            v1: v1.re,
            v2: v2.re,
        }
    }

    /// `(v' - s v, v'' - s v')` at `t`, summed so that the `exp(s t)` mode
    /// cancels exactly when `s` is a root.
    pub fn eval_sheared(&self, t: f64, s: f64) -> (f64, f64) {
        let r = self.roots.roots();
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w1 = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            let shift = r[i] - s;
            if shift.norm() <= 1e-13 * r[i].norm().max(1.0) {
                continue;
            }
            let term = self.coefficients[i] * shift * (r[i] * t).exp();
            w0 += term;
            w1 += term * r[i];
        }
        (w0.re, w1.re)
    }

    /// Mean trajectory `(q*, p*) = (q0 v' + p0 v, q0 v'' + p0 v')`.
    pub fn mean(&self, q0: f64, p0: f64, t: f64) -> (f64, f64) {
        let e = self.eval(t);
        (q0 * e.v1 + p0 * e.v, q0 * e.v2 + p0 * e.v1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{characteristic_roots, ModelParams};
    use crate::spectral::SpectralDensity;

    fn reference() -> ResponseSolution {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.0).unwrap();
        build_response(characteristic_roots(&sd, &mp)).unwrap()
    }

    #[test]
    fn closed_form_coefficients() {
        let rs = reference();
        let (l1, l2, l3) = rs.roots().lambdas().unwrap();
        let c = rs.coefficients();
        // Three-real-root expressions written with lambda_i > 0.
        let c1 = (l3 - l2) / ((l2 - l1) * (l1 + l3));
        let c2 = (l1 - l3) / ((l2 - l1) * (l2 + l3));
        let c3 = (l1 + l2) / ((l2 + l3) * (l1 + l3));
        assert!((c[0].re - c1).abs() < 1e-13);
        assert!((c[1].re - c2).abs() < 1e-13);
        assert!((c[2].re - c3).abs() < 1e-13);
        assert!((c[0].re - 0.332_395_910).abs() < 1e-8);
        assert!((c[1].re + 0.844_200_839).abs() < 1e-8);
        assert!((c[2].re - 0.511_804_929).abs() < 1e-8);
    }

    #[test]
    fn initial_conditions() {
        let e = reference().eval(0.0);
        assert!(e.v.abs() < 1e-12 && (e.v1 - 1.0).abs() < 1e-12 && e.v2.abs() < 1e-12);
    }

    #[test]
    fn uncoupled_is_sine() {
        let sd = SpectralDensity::new(4.0, 1.0).unwrap();
        let w = 1.3;
        let mp = ModelParams::new(w, 0.0, 1.0, 0.0, 0.0).unwrap();
        let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
        let t = std::f64::consts::PI / (2.0 * w);
        assert!((rs.eval(t).v - 1.0 / w).abs() < 1e-14);
        for t in [0.1, 2.0, 7.5] {
            assert!((rs.eval(t).v - (w * t).sin() / w).abs() < 1e-13);
        }
    }

    #[test]
    fn sheared_cancels_growing_mode() {
        let rs = reference();
        let (_, _, l3) = rs.roots().lambdas().unwrap();
        for t in [1.0, 10.0, 40.0] {
            let e = rs.eval(t);
            let (w0, _) = rs.eval_sheared(t, l3);
            if t < 5.0 {
                assert!((w0 - (e.v1 - l3 * e.v)).abs() < 1e-12);
            }
            assert!(w0.abs() < 1.0);
        }
    }

    #[test]
    fn degenerate_roots_rejected() {
        use crate::response::{Cubic, CubicRoots};
        // (x + 1)^2 (x - 1) = x^3 + x^2 - x - 1
        let cr = CubicRoots::from_cubic(Cubic { c2: 1.0, c1: -1.0, c0: -1.0 });
        assert!(matches!(build_response(cr), Err(Error::NearDegenerateRoots { .. })));
    }
}
