//! Lorentzian bath spectral density `J(nu) = 1 / (a + b nu^2)` and the memory
//! kernel `Q(t) = int_0^inf J(nu) (1 - cos nu t) dnu`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_scalar, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    a: f64,
    b: f64,
}

impl SpectralDensity {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid("a", format!("must be finite and positive, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("b", format!("must be finite and positive, got {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Decay rate `sqrt(a/b)` of the kernel, the pole of J on the imaginary axis.
    pub fn kappa(&self) -> f64 {
        (self.a / self.b).sqrt()
    }

    pub fn eval(&self, nu: f64) -> f64 {
        1.0 / (self.a + self.b * nu * nu)
    }

    pub fn derivative(&self, nu: f64) -> f64 {
        let d = self.a + self.b * nu * nu;
        -2.0 * self.b * nu / (d * d)
    }

    /// `int_0^inf J = pi / (2 sqrt(ab))`.
    pub fn total_integral(&self) -> f64 {
        FRAC_PI_2 / (self.a * self.b).sqrt()
    }

    /// `int_0^x J`.
    pub fn partial_integral(&self, x: f64) -> f64 {
        (x * (self.b / self.a).sqrt()).atan() / (self.a * self.b).sqrt()
    }

    /// `int_m^inf J`, written without cancellation for large `m`.
    pub fn tail_integral(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return self.total_integral() + self.partial_integral(-m);
        }
        (self.a.sqrt() / (self.b.sqrt() * m)).atan() / (self.a * self.b).sqrt()
    }

    /// Closed form `Q(t) = (pi / 2 sqrt(ab)) (1 - exp(-kappa |t|))`.
    pub fn q_kernel(&self, t: f64) -> f64 {
        -self.total_integral() * (-self.kappa() * t.abs()).exp_m1()
    }

    /// `Q'(t) = (pi / 2b) exp(-kappa t)` for `t > 0`; odd in `t`, so the
    /// one-sided limit at zero is `pi / 2b`.
    pub fn q_kernel_derivative(&self, t: f64) -> f64 {
        let v = FRAC_PI_2 / self.b * (-self.kappa() * t.abs()).exp();
        if t < 0.0 {
            -v
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    nu_max: f64,
    panels: usize,
    tail_tolerance: f64,
}

impl QuadratureSpec {
    /// Fails unless the analytic tail `int_{nu_max}^inf J` is within `tail_tolerance`.
    pub fn new(sd: &SpectralDensity, nu_max: f64, panels: usize, tail_tolerance: f64) -> Result<Self> {
        if !(nu_max.is_finite() && nu_max > 0.0) {
            return Err(Error::invalid("nu_max", format!("must be finite and positive, got {nu_max}")));
        }
        if panels == 0 {
            return Err(Error::invalid("panels", "must be at least 1"));
        }
        if !(tail_tolerance > 0.0) {
            return Err(Error::invalid("tail_tolerance", "must be positive"));
        }
        let tail = sd.tail_integral(nu_max);
        if tail > tail_tolerance {
            return Err(Error::invalid(
                "nu_max",
                format!("tail {tail:e} beyond {nu_max} exceeds tolerance {tail_tolerance:e}"),
            ));
        }
        Ok(Self {
            nu_max,
            panels,
            tail_tolerance,
        })
    }

    /// Cutoff `1e4 kappa`, 64 base panels, tolerance equal to the tail it leaves.
    pub fn standard(sd: &SpectralDensity) -> Self {
        let nu_max = 1e4 * sd.kappa();
        Self {
            nu_max,
            panels: 64,
            tail_tolerance: sd.tail_integral(nu_max) * (1.0 + 1e-12),
        }
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_max
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Panel count so that no panel spans more than a quarter oscillation of `cos(nu t)`.
    pub fn panels_for(&self, t: f64) -> usize {
        if t <= 0.0 {
            return self.panels;
        }
        let width = FRAC_PI_4 / t.abs();
        self.panels.max((self.nu_max / width).ceil() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEstimate {
    pub value: f64,
    pub error: f64,
}

/// Quadrature of the defining integral of Q.
///
/// The part beyond `nu_max` is added analytically: `int J` exactly, and the
/// oscillatory `int J cos` by one integration by parts whose remainder is
/// bounded by `2 |J'(nu_max)| / t^2` and reported in `error`.
pub fn q_kernel_numeric(sd: &SpectralDensity, t: f64, quad: &QuadratureSpec) -> Result<KernelEstimate> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(KernelEstimate { value: 0.0, error: 0.0 });
    }
    let m = quad.nu_max();
    let opts = QuadOptions {
        abs_tol: 1e-3 * quad.tail_tolerance(),
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let (body, body_err) = integrate_scalar(
        |nu| sd.eval(nu) * 2.0 * (0.5 * nu * t).sin().powi(2),
        0.0,
        m,
        quad.panels_for(t),
        opts,
    );
    let tail = sd.tail_integral(m) + sd.eval(m) * (m * t).sin() / t;
    let error = body_err + 2.0 * sd.derivative(m).abs() / (t * t);
    if error > quad.tail_tolerance() {
        return Err(Error::QuadratureTolerance {
            estimate: error,
            tolerance: quad.tail_tolerance(),
        });
    }
    Ok(KernelEstimate {
        value: body + tail,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sd(a: f64, b: f64) -> SpectralDensity {
        SpectralDensity::new(a, b).unwrap()
    }

    #[test]
    fn construction_rejects_nonpositive() {
        assert!(SpectralDensity::new(0.0, 1.0).is_err());
        assert!(SpectralDensity::new(1.0, -1.0).is_err());
        assert!(SpectralDensity::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn point_values() {
        assert_eq!(sd(1.0, 1.0).eval(0.0), 1.0);
        assert!((sd(9.0, 1.0).eval(3.0) - 1.0 / 18.0).abs() < 1e-16);
        assert_eq!(sd(4.0, 1.0).eval(-2.0), sd(4.0, 1.0).eval(2.0));
        assert!((sd(4.0, 1.0).eval(2.0) - 0.125).abs() < 1e-16);
    }

    #[test]
    fn total_integral_closed_forms() {
        assert!((sd(1.0, 1.0).total_integral() - PI / 2.0).abs() < 1e-15);
        assert!((sd(9.0, 1.0).total_integral() - PI / 6.0).abs() < 1e-15);
        assert!((sd(4.0, 0.25).total_integral() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn total_integral_against_quadrature() {
        // Substitute nu = tan(s) to map [0, inf) onto [0, pi/2).
        let s = sd(4.0, 0.25);
        let (v, _) = integrate_scalar(
            |x| {
                let nu = x.tan();
                s.eval(nu) / x.cos().powi(2)
            },
            0.0,
            PI / 2.0,
            8,
            QuadOptions::default(),
        );
        assert!((v - s.total_integral()).abs() < 1e-8);
    }

    #[test]
    fn tail_splits_total() {
        let s = sd(3.0, 0.7);
        for m in [0.1, 1.0, 17.0, 1e6] {
            let sum = s.partial_integral(m) + s.tail_integral(m);
            assert!((sum - s.total_integral()).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(sd(2.0, 3.0).q_kernel(0.0), 0.0);
        let q = sd(4.0, 1.0).q_kernel(1.0);
        assert!((q - PI / 4.0 * (1.0 - (-2.0_f64).exp())).abs() < 1e-15);
        assert!((q - 0.6791).abs() < 1e-4);
        let s = sd(9.0, 1.0);
        let t = 50.0 / s.kappa();
        assert!((s.q_kernel(t) - s.total_integral()).abs() < 1e-10);
    }

    #[test]
    fn kernel_slope_matches_derivative() {
        let s = sd(9.0, 2.0);
        for &t in &[0.3, 1.0, 2.5] {
            let h = 1e-4;
            let fd = (s.q_kernel(t + h) - s.q_kernel(t - h)) / (2.0 * h);
            let exact = PI / (2.0 * s.b()) * (-s.kappa() * t).exp();
            assert!((fd - exact).abs() < 1e-7, "t={t}: {fd} vs {exact}");
            assert!((s.q_kernel_derivative(t) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_spec_enforces_tail() {
        let s = sd(1.0, 1.0);
        assert!(QuadratureSpec::new(&s, 10.0, 4, 1e-3).is_err());
        assert!(QuadratureSpec::new(&s, 1e4, 4, 1e-3).is_ok());
        assert!(QuadratureSpec::new(&s, 1e4, 0, 1e-3).is_err());
    }

    #[test]
    fn numeric_kernel_matches_closed_form() {
        let s = sd(4.0, 1.0);
        let quad = QuadratureSpec::new(&s, 2e3, 16, 1e-3).unwrap();
        let k = q_kernel_numeric(&s, 1.0, &quad).unwrap();
        assert!((k.value - s.q_kernel(1.0)).abs() < 1e-6, "{k:?}");

        let s = sd(1.0, 1.0);
        let quad = QuadratureSpec::new(&s, 2e3, 16, 1e-3).unwrap();
        let k = q_kernel_numeric(&s, 10.0, &quad).unwrap();
        assert!((k.value - PI / 2.0 * (1.0 - (-10.0_f64).exp())).abs() < 1e-5);
        assert_eq!(q_kernel_numeric(&s, 0.0, &quad).unwrap().value, 0.0);
    }
}
