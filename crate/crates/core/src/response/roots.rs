use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::spectral::SpectralDensity;

/// Root pattern of the characteristic cubic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Three real roots, exactly one positive.
    LargeCoupling,
    /// One negative real root and a conjugate pair with nonpositive real part.
    SmallCoupling,
    /// A root at zero: the coupling sits exactly on the stability bound.
    Boundary,
    /// Three negative real roots.
    Overdamped,
    /// One positive real root and a damped conjugate pair.
    OscillatoryRunaway,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::LargeCoupling => "LargeCoupling",
            Regime::SmallCoupling => "SmallCoupling",
            Regime::Boundary => "Boundary",
            Regime::Overdamped => "Overdamped",
            Regime::OscillatoryRunaway => "OscillatoryRunaway",
        }
    }

    pub fn has_positive_root(self) -> bool {
        matches!(self, Regime::LargeCoupling | Regime::OscillatoryRunaway)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Monic cubic `x^3 + c2 x^2 + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Cubic {
    pub fn characteristic(sd: &SpectralDensity, mp: &ModelParams) -> Self {
        let kappa = sd.kappa();
        let w2 = mp.omega_sq();
        Self {
            c2: kappa,
            c1: w2,
            c0: kappa * w2 - mp.coupling_rhs(sd),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.c2) * z + self.c1) * z + self.c0
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        (3.0 * z + 2.0 * self.c2) * z + self.c1
    }

    /// Magnitude of the largest term at `z`, the natural scale for residuals.
    pub fn term_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        (r * r * r)
            .max(self.c2.abs() * r * r)
            .max(self.c1.abs() * r)
            .max(self.c0.abs())
    }

    fn newton(&self, mut z: Complex64, iters: usize) -> Complex64 {
        for _ in 0..iters {
            let d = self.deriv(z);
            if d.norm() == 0.0 {
                break;
            }
            let next = z - self.eval(z) / d;
            if !next.re.is_finite() || !next.im.is_finite() {
                break;
            }
            // keep the better of the two iterates
            if self.eval(next).norm() >= self.eval(z).norm() {
                break;
            }
            z = next;
        }
        z
    }

    /// Roots sorted real-ascending, conjugate pair (positive imaginary first) last.
    pub fn solve(&self) -> ([Complex64; 3], bool) {
        let shift = self.c2 / 3.0;
        let p = self.c1 - self.c2 * shift;
        let q = 2.0 * shift.powi(3) - self.c1 * shift + self.c0;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        let scale = (q / 2.0).powi(2).max((p / 3.0).abs().powi(3));

        if p < 0.0 && disc <= 1e-14 * scale {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            let mut r = [0.0; 3];
            for (k, slot) in r.iter_mut().enumerate() {
                let y = m * (theta - 2.0 * PI * k as f64 / 3.0).cos();
                let z = self.newton(Complex64::new(y - shift, 0.0), 3);
                *slot = z.re;
            }
            r.sort_by(f64::total_cmp);
            return (r.map(|x| Complex64::new(x, 0.0)), true);
        }

        let y = if p == 0.0 {
            (-q).cbrt()
        } else if p < 0.0 {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (-3.0 * q.abs() / (p * m)).max(1.0);
            -q.signum() * m * (arg.acosh() / 3.0).cosh()
        } else {
            let m = 2.0 * (p / 3.0).sqrt();
            -m * ((3.0 * q / (p * m)).asinh() / 3.0).sinh()
        };
        let real = self.newton(Complex64::new(y - shift, 0.0), 4).re;
        // Deflate: x^3 + c2 x^2 + c1 x + c0 = (x - real)(x^2 + e1 x + e0).
        let e1 = self.c2 + real;
        let e0 = if real.abs() > 1e-300 && self.c0.abs() > self.c1.abs() * real.abs() {
            -self.c0 / real
        } else {
            self.c1 + real * e1
        };
        let re = -e1 / 2.0;
        let im = (e0 - re * re).max(0.0).sqrt();
        let z = self.newton(Complex64::new(re, im), 3);
        let z = Complex64::new(z.re, z.im.abs());
        ([Complex64::new(real, 0.0), z, z.conj()], false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicRoots {
    roots: [Complex64; 3],
    regime: Regime,
    all_real: bool,
    cubic_coeffs: [f64; 3],
}

/// Roots of `x^3 + kappa x^2 + omega^2 x + kappa omega^2 - eps^2 pi / 2b = 0`.
pub fn characteristic_roots(sd: &SpectralDensity, mp: &ModelParams) -> CubicRoots {
    CubicRoots::from_cubic(Cubic::characteristic(sd, mp))
}

impl CubicRoots {
    pub fn from_cubic(cubic: Cubic) -> Self {
        let (roots, all_real) = cubic.solve();
        let rhs_scale = cubic.c2 * cubic.c1;
        let regime = if cubic.c0.abs() <= 1e-12 * rhs_scale.max(cubic.c0.abs()).max(f64::MIN_POSITIVE) {
            Regime::Boundary
        } else if cubic.c0 < 0.0 {
            if all_real {
                Regime::LargeCoupling
            } else {
                Regime::OscillatoryRunaway
            }
        } else if all_real {
            Regime::Overdamped
        } else {
            Regime::SmallCoupling
        };
        Self {
            roots,
            regime,
            all_real,
            cubic_coeffs: [cubic.c2, cubic.c1, cubic.c0],
        }
    }

    pub fn roots(&self) -> [Complex64; 3] {
        self.roots
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn all_real(&self) -> bool {
        self.all_real
    }

    pub fn cubic(&self) -> Cubic {
        let [c2, c1, c0] = self.cubic_coeffs;
        Cubic { c2, c1, c0 }
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().fold(0.0_f64, |m, r| m.max(r.norm()))
    }

    /// Largest real part; positive iff the response grows.
    pub fn spectral_abscissa(&self) -> f64 {
        self.roots.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.re))
    }

    /// `(lambda1, lambda2, lambda3)` with roots `(-lambda1, -lambda2, +lambda3)`,
    /// available only in the large-coupling regime.
    pub fn lambdas(&self) -> Option<(f64, f64, f64)> {
        (self.regime == Regime::LargeCoupling)
            .then(|| (-self.roots[0].re, -self.roots[1].re, self.roots[2].re))
    }

    /// Smallest pairwise distance relative to the largest root modulus.
    pub fn relative_separation(&self) -> f64 {
        let r = &self.roots;
        let d = (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm());
        d / self.max_modulus().max(f64::MIN_POSITIVE)
    }

    pub fn max_residual(&self) -> f64 {
        let c = self.cubic();
        self.roots.iter().fold(0.0_f64, |m, &z| m.max(c.eval(z).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (SpectralDensity, ModelParams) {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.0).unwrap();
        (sd, mp)
    }

    #[test]
    fn worked_example() {
        let (sd, mp) = reference();
        let cr = characteristic_roots(&sd, &mp);
        assert_eq!(cr.regime(), Regime::LargeCoupling);
        let r = cr.roots();
        for (got, want) in r.iter().zip([-2.272_270_08, -1.569_129_79, 0.841_399_87]) {
            assert!((got.re - want).abs() < 1e-8, "{got} vs {want}");
            assert_eq!(got.im, 0.0);
        }
        assert!(cr.max_residual() < 1e-12);
    }

    #[test]
    fn uncoupled_roots() {
        let sd = SpectralDensity::new(4.0, 1.0).unwrap();
        let mp = ModelParams::new(1.5, 0.0, 1.0, 0.0, 0.0).unwrap();
        let cr = characteristic_roots(&sd, &mp);
        let r = cr.roots();
        assert!((r[0].re + 2.0).abs() < 1e-14 && r[0].im == 0.0);
        assert!(r[1].re.abs() < 1e-14 && (r[1].im - 1.5).abs() < 1e-14);
        assert_eq!(r[2], r[1].conj());
        assert_eq!(cr.regime(), Regime::SmallCoupling);
    }

    #[test]
    fn bisection_deflation_oracle() {
        // a = b = omega = 1, rhs = 1.5: x^3 + x^2 + x - 0.5.
        let sd = SpectralDensity::new(1.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, 1.0, 1.5, 1.0, 0.0, 0.0).unwrap();
        let cr = characteristic_roots(&sd, &mp);
        let f = |x: f64| ((x + 1.0) * x + 1.0) * x - 0.5;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let real = 0.5 * (lo + hi);
        let e1 = 1.0 + real;
        let e0 = 1.0 + real * e1;
        let re = -e1 / 2.0;
        let im = (e0 - re * re).sqrt();
        let r = cr.roots();
        assert!((r[0].re - real).abs() < 1e-9);
        assert!((r[1] - Complex64::new(re, im)).norm() < 1e-9);
        assert_eq!(cr.regime(), Regime::OscillatoryRunaway);
        assert!(cr.regime().has_positive_root());
    }

    #[test]
    fn boundary_is_detected() {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let w = 0.7_f64;
        let mp = ModelParams::from_coupling_rhs(&sd, w, 3.0 * w * w, 1.0, 0.0, 0.0).unwrap();
        let cr = characteristic_roots(&sd, &mp);
        assert_eq!(cr.regime(), Regime::Boundary);
        assert!(cr.roots().iter().any(|r| r.norm() < 1e-12));
    }

    #[test]
    fn overdamped_pattern() {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, 0.2f64.sqrt(), 0.598, 1.0, 0.0, 0.0).unwrap();
        let cr = characteristic_roots(&sd, &mp);
        assert_eq!(cr.regime(), Regime::Overdamped);
        assert!(cr.roots().iter().all(|r| r.re < 0.0 && r.im == 0.0));
    }
}
