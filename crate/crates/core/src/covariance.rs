//! Gaussian coefficients `A(t), B(t), C(t)` of the system oscillator law,
//! defined by
//!
//! `A l^2 + 2 B l m + C m^2 = eps^2 kT int_0^inf J(nu) |int_0^t (l v + m v') e^{-i nu x} dx|^2 dnu`.
//!
//! In the runaway regimes `A, B, C` all grow like `e^{2 lambda3 t}`, so `AC`
//! grows like `e^{4 lambda3 t}` while `AC - B^2` grows only like
//! `e^{2 lambda3 t}`, and the naive determinant cancels catastrophically.
//! Every triple therefore also carries the sheared coordinate `y = p - s q`,
//! with `s` the positive real root (zero otherwise), whose variance stays
//! bounded.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::response::{CubicRoots, ModelParams, Regime, ResponseSolution};
use crate::spectral::{QuadratureSpec, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTriple {
    pub t: f64,
    /// Variance of `q`.
    pub a_coef: f64,
    /// Covariance of `q` and `p`.
    pub b_coef: f64,
    /// Variance of `p`.
    pub c_coef: f64,
    /// Shear `s` of the auxiliary coordinate `y = p - s q`.
    pub shear: f64,
    pub cov_qy: f64,
    pub var_y: f64,
}

impl CovarianceTriple {
    pub fn zero(t: f64, shear: f64) -> Self {
        Self {
            t,
            a_coef: 0.0,
            b_coef: 0.0,
            c_coef: 0.0,
            shear,
            cov_qy: 0.0,
            var_y: 0.0,
        }
    }

    pub fn from_sheared(t: f64, shear: f64, a: f64, cov_qy: f64, var_y: f64) -> Self {
        Self {
            t,
            a_coef: a,
            b_coef: cov_qy + shear * a,
            c_coef: var_y + 2.0 * shear * cov_qy + shear * shear * a,
            shear,
            cov_qy,
            var_y,
        }
    }

    /// Unsheared triple, e.g. an explicitly given Gibbs covariance.
    pub fn from_abc(t: f64, a: f64, b: f64, c: f64) -> Self {
        Self {
            t,
            a_coef: a,
            b_coef: b,
            c_coef: c,
            shear: 0.0,
            cov_qy: b,
            var_y: c,
        }
    }

    /// `AC - B^2`, evaluated as `A Var(y) - Cov(q, y)^2`.
    pub fn det(&self) -> f64 {
        self.a_coef * self.var_y - self.cov_qy * self.cov_qy
    }

    /// `AC - B^2` computed literally; loses all precision once the runaway mode dominates.
    pub fn det_naive(&self) -> f64 {
        self.a_coef * self.c_coef - self.b_coef * self.b_coef
    }
}

/// Shear used for the stable frame: the positive real root if there is one.
pub fn shear_for(roots: &CubicRoots) -> f64 {
    match roots.regime() {
        Regime::LargeCoupling => roots.roots()[2].re,
        Regime::OscillatoryRunaway => roots.roots()[0].re,
        _ => 0.0,
    }
}

fn phi(z: Complex64) -> Complex64 {
    // (e^z - 1) / z without cancellation near zero
    if z.norm() < 0.1 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..12 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Direct quadrature of the defining identity.
///
/// `U(nu)` and `W(nu) - s U(nu)` are exact per-exponential antiderivatives;
/// only the `nu` integral is numerical. The base panels never span more than
/// a quarter period of `e^{-i nu t}`. The tail past `nu_max` is bounded by
/// `4 S^2 / (3 b nu_max^3)` and folded into the error, which must not exceed
/// `tail_tolerance` relative to `A + Var(y)`.
pub fn abc_numeric(
    sd: &SpectralDensity,
    mp: &ModelParams,
    rs: &ResponseSolution,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<CovarianceTriple> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    let s = shear_for(rs.roots());
    if t == 0.0 {
        return Ok(CovarianceTriple::zero(0.0, s));
    }
    let r = rs.roots().roots();
    let c = rs.coefficients();
    let m = quad.nu_max();
    let max_im = r.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    if m < 2.0 * max_im {
        return Err(Error::invalid("nu_max", "must exceed twice the largest root frequency"));
    }
    let growth: [Complex64; 3] = std::array::from_fn(|i| (r[i] * t).exp());
    let shifted: [Complex64; 3] = std::array::from_fn(|i| c[i] * (r[i] - s));

    let integrand = |nu: f64| -> [f64; 3] {
        let mut u = Complex64::new(0.0, 0.0);
        let mut y = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            let f = t * phi((r[i] - Complex64::new(0.0, nu)) * t);
            u += c[i] * f;
            y += shifted[i] * f;
        }
        let j = sd.eval(nu);
        [j * u.norm_sqr(), j * y.norm_sqr(), j * (u * y.conj()).re]
    };
    let res = integrate(
        integrand,
        0.0,
        m,
        quad.panels_for(t),
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_segments: 4_000_000,
        },
    );

    let su: f64 = (0..3).map(|i| c[i].norm() * (1.0 + growth[i].norm())).sum();
    let sy: f64 = (0..3).map(|i| shifted[i].norm() * (1.0 + growth[i].norm())).sum();
    let tail = 4.0 / (3.0 * sd.b() * m.powi(3));
    let scale = mp.eps_sq() * mp.kt();
    let a = scale * res.value[0];
    let var_y = scale * res.value[1];
    let cov_qy = scale * res.value[2];
    let error = scale * (res.error + tail * (su * su + sy * sy + su * sy));
    let magnitude = a + var_y;
    if error > quad.tail_tolerance() * magnitude && scale > 0.0 {
        return Err(Error::QuadratureTolerance {
            estimate: error / magnitude,
            tolerance: quad.tail_tolerance(),
        });
    }
    Ok(CovarianceTriple::from_sheared(t, s, a, cov_qy, var_y))
}

/// The six scalar factors `P_1 .. P_6` at time `t`, normalized so that
/// `A / (eps^2 kT) = sum P_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTerms {
    pub t: f64,
    pub p: [f64; 6],
    pub lambdas: (f64, f64, f64),
}

/// Index pairs `(i, j)` of the signed roots `(-l1, -l2, +l3)` that each `P_k` couples.
pub const P_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

struct ClosedFormInputs {
    l: [f64; 3],
    c: [f64; 3],
    a: f64,
    b: f64,
    kappa: f64,
    den: [f64; 3],
}

fn closed_form_inputs(roots: &CubicRoots, sd: &SpectralDensity) -> Result<ClosedFormInputs> {
    let (l1, l2, l3) = roots.lambdas().ok_or(Error::RegimeMismatch {
        expected: "LargeCoupling",
        found: roots.regime().name(),
    })?;
    let (a, b) = (sd.a(), sd.b());
    let l = [l1, l2, l3];
    const WHICH: [&str; 3] = ["a - b lambda1^2", "a - b lambda2^2", "a - b lambda3^2"];
    let mut den = [0.0; 3];
    for i in 0..3 {
        den[i] = a - b * l[i] * l[i];
        if den[i].abs() < 1e-8 * a {
            return Err(Error::SingularDenominator {
                which: WHICH[i],
                value: den[i],
            });
        }
    }
    for (which, d) in [
        ("lambda2 - lambda1", l2 - l1),
        ("lambda2 - lambda3", l2 - l3),
        ("lambda1 - lambda3", l1 - l3),
    ] {
        if d.abs() < 1e-8 * l1.max(l3) {
            return Err(Error::SingularDenominator { which, value: d });
        }
    }
    let c = [
        (l3 - l2) / ((l2 - l1) * (l1 + l3)),
        (l1 - l3) / ((l2 - l1) * (l2 + l3)),
        (l1 + l2) / ((l2 + l3) * (l1 + l3)),
    ];
    Ok(ClosedFormInputs {
        l,
        c,
        a,
        b,
        kappa: sd.kappa(),
        den,
    })
}

/// `P_1 .. P_6` evaluated term by term from the closed forms as stated.
pub fn p_terms(roots: &CubicRoots, sd: &SpectralDensity, t: f64) -> Result<PTerms> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    let ClosedFormInputs { l, c, a, b, kappa, den } = closed_form_inputs(roots, sd)?;
    let [l1, l2, l3] = l;
    let [c1, c2, c3] = c;
    let rba = (b / a).sqrt();
    let ek = (-kappa * t).exp();
    let e = |x: f64| (x * t).exp();

    // S_1, S_2: decaying modes; S_3: the runaway mode.
    let diag = |ci: f64, li: f64, di: f64| {
        PI * ci * ci / (2.0 * di)
            * ((1.0 + e(-2.0 * li)) * (1.0 / li - rba) - 2.0 * e(-li) * (e(-li) / li - rba * ek))
    };
    let p1 = diag(c1, l1, den[0]);
    let p2 = diag(c2, l2, den[1]);
    let p3 = PI * c3 * c3 / (2.0 * den[2])
        * ((1.0 + e(2.0 * l3)) * (1.0 / l3 - rba) - 2.0 * e(l3) * (e(-l3) / l3 - rba * ek));

    let b32 = b.powf(1.5) / a.sqrt();
    let sab = (a * b).sqrt();
    let p4 = PI * c1 * c2 / (den[0] * den[1])
        * ((1.0 - e(-(l1 + l2))) * (2.0 * a - b * (l1 * l1 + l2 * l2)) / (l1 + l2)
            + (l1 * l2 * b32 - sab) * (1.0 + e(-(l1 + l2)) - e(-(l1 + kappa)) - e(-(l2 + kappa)))
            - b * ek * (e(-l2) - e(-l1)) * (l2 - l1));
    let p5 = PI * c2 * c3 / (den[1] * den[2])
        * ((1.0 - e(l3 - l2)) * (2.0 * a - b * (l2 * l2 + l3 * l3)) / (l2 - l3)
            - (l2 * l3 * b32 + sab) * (1.0 + e(l3 - l2) - e(-(l2 + kappa)) - e(l3 - kappa))
            - b * ek * (e(-l2) - e(l3)) * (l2 + l3));
    let p6 = PI * c1 * c3 / (den[0] * den[2])
        * ((1.0 - e(l3 - l1)) * (2.0 * a - b * (l1 * l1 + l3 * l3)) / (l1 - l3)
            - (l1 * l3 * b32 + sab) * (1.0 + e(l3 - l1) - e(-(l1 + kappa)) - e(l3 - kappa))
            - b * ek * (e(-l1) - e(l3)) * (l1 + l3));

    Ok(PTerms {
        t,
        p: [p1, p2, p3, p4, p5, p6],
        lambdas: (l1, l2, l3),
    })
}

impl PTerms {
    fn signed_roots(&self) -> [f64; 3] {
        let (l1, l2, l3) = self.lambdas;
        [-l1, -l2, l3]
    }

    /// `(A, B, C) / (eps^2 kT)` by the stated linear combinations.
    pub fn abc_normalized(&self) -> (f64, f64, f64) {
        let (l1, l2, l3) = self.lambdas;
        let [p1, p2, p3, p4, p5, p6] = self.p;
        let a = p1 + p2 + p3 + p4 + p5 + p6;
        let b = -l1 * p1 - l2 * p2 + l3 * p3 - 0.5 * (l1 + l2) * p4 - 0.5 * (l2 - l3) * p5 - 0.5 * (l1 - l3) * p6;
        let c = l1 * l1 * p1 + l2 * l2 * p2 + l3 * l3 * p3 + l1 * l2 * p4 - l2 * l3 * p5 - l1 * l3 * p6;
        (a, b, c)
    }

    /// `(A, Cov(q, y), Var(y)) / (eps^2 kT)` in the frame `y = p - s q`.
    pub fn sheared_normalized(&self, s: f64) -> (f64, f64, f64) {
        let r = self.signed_roots();
        let mut out = (0.0, 0.0, 0.0);
        for (k, &(i, j)) in P_PAIRS.iter().enumerate() {
            let (ri, rj) = (r[i] - s, r[j] - s);
            out.0 += self.p[k];
            out.1 += self.p[k] * 0.5 * (ri + rj);
            out.2 += self.p[k] * ri * rj;
        }
        out
    }

    /// The stated expansion of `(AC - B^2) / (eps^2 kT)^2` in products of `P_i`.
    pub fn det_expansion(&self) -> f64 {
        let (l1, l2, l3) = self.lambdas;
        let [p1, p2, p3, p4, p5, p6] = self.p;
        -0.25 * (l1 - l2).powi(2) * p4 * p4 - 0.25 * (l2 + l3).powi(2) * p5 * p5 - 0.25 * (l1 + l3).powi(2) * p6 * p6
            + (l1 - l2).powi(2) * p1 * p2
            + (l1 + l3).powi(2) * p1 * p3
            + (l1 + l3) * (l1 - l2) * p1 * p5
            + (l2 + l3).powi(2) * p2 * p3
            + (l2 + l3) * (l2 - l1) * p2 * p6
            + (l2 + l3) * (l1 + l3) * p3 * p4
            + 0.5 * (l1 - l2) * (l2 + l3) * p4 * p5
            + 0.5 * (l2 - l1) * (l1 + l3) * p4 * p6
            - 0.5 * (l1 + l3) * (l2 + l3) * p5 * p6
    }

    /// `(l1 + l3)^2 P_1 + (l2 + l3)^2 P_2 + (l2 + l3)(l1 + l3) P_4`, the
    /// coefficient of `P_3` in the determinant expansion.
    pub fn alpha(&self) -> f64 {
        let (l1, l2, l3) = self.lambdas;
        let [p1, p2, _, p4, _, _] = self.p;
        (l1 + l3).powi(2) * p1 + (l2 + l3).powi(2) * p2 + (l2 + l3) * (l1 + l3) * p4
    }
}

/// `A, B, C` from the closed-form `P_i` (large-coupling regime only).
pub fn abc_closed_form(sd: &SpectralDensity, mp: &ModelParams, roots: &CubicRoots, t: f64) -> Result<CovarianceTriple> {
    let pt = p_terms(roots, sd, t)?;
    let s = shear_for(roots);
    let scale = mp.eps_sq() * mp.kt();
    let (a, cov_qy, var_y) = pt.sheared_normalized(s);
    Ok(CovarianceTriple::from_sheared(t, s, scale * a, scale * cov_qy, scale * var_y))
}

/// `P_3(t)`, growing like `e^{2 lambda3 t}`.
pub fn p3_growth(roots: &CubicRoots, sd: &SpectralDensity, t: f64) -> Result<f64> {
    Ok(p_terms(roots, sd, t)?.p[2])
}

/// `lim P_3(t) e^{-2 lambda3 t} = pi C_3^2 (1/lambda3 - sqrt(b/a)) / (2 (a - b lambda3^2))`.
pub fn p3_prefactor(roots: &CubicRoots, sd: &SpectralDensity) -> Result<f64> {
    let k = closed_form_inputs(roots, sd)?;
    let (l3, c3) = (k.l[2], k.c[2]);
    Ok(PI * c3 * c3 * (1.0 / l3 - (k.b / k.a).sqrt()) / (2.0 * k.den[2]))
}

/// Limits of `P_1, P_2, P_4` as `t -> inf`.
pub fn p_limits(roots: &CubicRoots, sd: &SpectralDensity) -> Result<(f64, f64, f64)> {
    let ClosedFormInputs { l, c, a, b, den, .. } = closed_form_inputs(roots, sd)?;
    let [l1, l2, _] = l;
    let rba = (b / a).sqrt();
    let p1 = PI * c[0] * c[0] / (2.0 * den[0]) * (1.0 / l1 - rba);
    let p2 = PI * c[1] * c[1] / (2.0 * den[1]) * (1.0 / l2 - rba);
    let p4 = PI * c[0] * c[1] / (den[0] * den[1])
        * ((2.0 * a - b * (l1 * l1 + l2 * l2)) / (l1 + l2) + l1 * l2 * b.powf(1.5) / a.sqrt() - (a * b).sqrt());
    Ok((p1, p2, p4))
}

/// The stated limit `pi / (b l1 l2 (l1 + l2))`.
pub fn alpha_limit(roots: &CubicRoots, sd: &SpectralDensity) -> Result<f64> {
    let (l1, l2, _) = roots.lambdas().ok_or(Error::RegimeMismatch {
        expected: "LargeCoupling",
        found: roots.regime().name(),
    })?;
    Ok(PI / (sd.b() * l1 * l2 * (l1 + l2)))
}

/// The `P_3` coefficient assembled from the limits of `P_1, P_2, P_4`.
///
/// Equals `pi / (2 b l1 l2 (l1 + l2))`, half of [`alpha_limit`].
pub fn alpha_from_limits(roots: &CubicRoots, sd: &SpectralDensity) -> Result<f64> {
    let (l1, l2, l3) = roots.lambdas().ok_or(Error::RegimeMismatch {
        expected: "LargeCoupling",
        found: roots.regime().name(),
    })?;
    let (p1, p2, p4) = p_limits(roots, sd)?;
    Ok((l1 + l3).powi(2) * p1 + (l2 + l3).powi(2) * p2 + (l2 + l3) * (l1 + l3) * p4)
}

/// The stated limiting exponent
/// `(2 a l3^2 / (eps^2 kT pi)) (1/l3 + sqrt(b/a)) (q0 l3 + p0)^2`.
pub fn pi_limit(roots: &CubicRoots, sd: &SpectralDensity, mp: &ModelParams) -> Result<f64> {
    let (_, _, l3) = roots.lambdas().ok_or(Error::RegimeMismatch {
        expected: "LargeCoupling",
        found: roots.regime().name(),
    })?;
    let a = sd.a();
    let x = mp.q0() * l3 + mp.p0();
    Ok(2.0 * a * l3 * l3 / (mp.eps_sq() * mp.kt() * PI) * (1.0 / l3 + (sd.b() / a).sqrt()) * x * x)
}

/// Limit of the Gaussian exponent at a fixed point `(q, p)`:
/// `C_3^2 (q0 l3 + p0)^2 / (2 eps^2 kT P3inf) + (p - l3 q)^2 / (2 eps^2 kT alpha_inf)`,
/// with `P3inf` from [`p3_prefactor`] and `alpha_inf` from [`alpha_from_limits`].
pub fn exponent_limit(roots: &CubicRoots, sd: &SpectralDensity, mp: &ModelParams, q: f64, p: f64) -> Result<f64> {
    let k = closed_form_inputs(roots, sd)?;
    let (l3, c3) = (k.l[2], k.c[2]);
    let x = mp.q0() * l3 + mp.p0();
    let scale = mp.eps_sq() * mp.kt();
    let p3 = p3_prefactor(roots, sd)?;
    let alpha = alpha_from_limits(roots, sd)?;
    Ok(c3 * c3 * x * x / (2.0 * scale * p3) + (p - l3 * q).powi(2) / (2.0 * scale * alpha))
}

/// Cutoff used by [`covariance_at`]: `1000 kappa`, raised to four times the
/// largest root frequency if needed. The `J` tail adds only `O(nu_max^-3)` to
/// the coefficients.
pub fn default_covariance_quadrature(sd: &SpectralDensity, roots: &CubicRoots) -> Result<QuadratureSpec> {
    let max_im = roots.roots().iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    let nu_max = (1e3 * sd.kappa()).max(4.0 * max_im);
    QuadratureSpec::new(sd, nu_max, 64, sd.tail_integral(nu_max) * (1.0 + 1e-9))
}

/// Closed form in the large-coupling regime, quadrature otherwise.
pub fn covariance_at(sd: &SpectralDensity, mp: &ModelParams, rs: &ResponseSolution, t: f64) -> Result<CovarianceTriple> {
    if rs.roots().regime() == Regime::LargeCoupling {
        abc_closed_form(sd, mp, rs.roots(), t)
    } else {
        abc_numeric(sd, mp, rs, t, &default_covariance_quadrature(sd, rs.roots())?)
    }
}

/// Stationary covariance when every root has negative real part:
/// `omega^2 A = kT / (1 - eps^2 / eps_c^2)`, `B = 0`, `C = kT`.
pub fn stationary_covariance(sd: &SpectralDensity, mp: &ModelParams) -> Result<CovarianceTriple> {
    let ratio = mp.eps_sq() * sd.total_integral() / mp.omega_sq();
    if ratio >= 1.0 {
        return Err(Error::RegimeMismatch {
            expected: "SmallCoupling",
            found: "runaway",
        });
    }
    let a = mp.kt() / (mp.omega_sq() * (1.0 - ratio));
    Ok(CovarianceTriple::from_abc(f64::INFINITY, a, 0.0, mp.kt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{build_response, characteristic_roots};

    fn reference() -> (SpectralDensity, ModelParams, ResponseSolution) {
        let sd = SpectralDensity::new(9.0, 1.0).unwrap();
        let mp = ModelParams::from_coupling_rhs(&sd, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.0).unwrap();
        let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
        (sd, mp, rs)
    }

    fn quad(sd: &SpectralDensity) -> QuadratureSpec {
        QuadratureSpec::new(sd, 400.0 * sd.kappa(), 32, 1e-3).unwrap()
    }

    #[test]
    fn zero_at_origin() {
        let (sd, mp, rs) = reference();
        let n = abc_numeric(&sd, &mp, &rs, 0.0, &quad(&sd)).unwrap();
        assert_eq!((n.a_coef, n.b_coef, n.c_coef), (0.0, 0.0, 0.0));
        let c = abc_closed_form(&sd, &mp, rs.roots(), 0.0).unwrap();
        for v in [c.a_coef, c.b_coef, c.c_coef] {
            assert!(v.abs() < 1e-13, "{c:?}");
        }
    }

    #[test]
    fn closed_form_reference_values() {
        // Reference values from an independent quadrature of the defining identity.
        let (sd, mp, rs) = reference();
        let cases = [
            (0.5, 0.014_547_5, 0.053_666_1, 0.214_990_8),
            (1.0, 0.180_394_7, 0.325_245_5, 0.660_907_5),
            (3.0, 15.996_47, 14.105_68, 12.704_15),
        ];
        for (t, a, b, c) in cases {
            let k = abc_closed_form(&sd, &mp, rs.roots(), t).unwrap();
            assert!((k.a_coef / a - 1.0).abs() < 1e-5, "t={t} A={}", k.a_coef);
            assert!((k.b_coef / b - 1.0).abs() < 1e-5, "t={t} B={}", k.b_coef);
            assert!((k.c_coef / c - 1.0).abs() < 1e-5, "t={t} C={}", k.c_coef);
        }
    }

    #[test]
    fn stated_assembly_matches_pair_assembly() {
        let (sd, _, rs) = reference();
        for t in [0.3, 2.0, 7.0] {
            let pt = p_terms(rs.roots(), &sd, t).unwrap();
            let (a, b, c) = pt.abc_normalized();
            let (a2, cov, var) = pt.sheared_normalized(0.0);
            assert!((a - a2).abs() < 1e-12 * a.abs());
            assert!((b - cov).abs() < 1e-12 * b.abs().max(1.0));
            assert!((c - var).abs() < 1e-12 * c.abs().max(1.0));
            let det = a * c - b * b;
            assert!((pt.det_expansion() - det).abs() < 1e-9 * (a * c).abs(), "t={t}");
        }
    }

    #[test]
    fn numeric_matches_closed_form() {
        let (sd, mp, rs) = reference();
        for t in [0.5, 3.0, 10.0] {
            let n = abc_numeric(&sd, &mp, &rs, t, &quad(&sd)).unwrap();
            let c = abc_closed_form(&sd, &mp, rs.roots(), t).unwrap();
            let bscale = (c.a_coef * c.c_coef).sqrt();
            assert!((n.a_coef / c.a_coef - 1.0).abs() < 1e-7, "t={t}");
            assert!((n.c_coef / c.c_coef - 1.0).abs() < 1e-7, "t={t}");
            assert!(((n.b_coef - c.b_coef) / bscale).abs() < 1e-7, "t={t}");
            assert!((n.det() / c.det() - 1.0).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn sheared_determinant_stays_accurate() {
        let (sd, mp, rs) = reference();
        let t = 30.0;
        let c = abc_closed_form(&sd, &mp, rs.roots(), t).unwrap();
        let p3 = p3_growth(rs.roots(), &sd, t).unwrap();
        let ratio = c.det() / (mp.eps_sq() * mp.kt()).powi(2) / p3;
        let alpha = alpha_from_limits(rs.roots(), &sd).unwrap();
        assert!((ratio / alpha - 1.0).abs() < 1e-6, "{ratio} vs {alpha}");
    }

    #[test]
    fn p3_slope_and_prefactor() {
        let (sd, _, rs) = reference();
        let (_, _, l3) = rs.roots().lambdas().unwrap();
        let y1 = p3_growth(rs.roots(), &sd, 10.0).unwrap().ln();
        let y2 = p3_growth(rs.roots(), &sd, 20.0).unwrap().ln();
        assert!(((y2 - y1) / 10.0 - 2.0 * l3).abs() < 1e-6);
        assert!((2.0 * l3 - 1.6828).abs() < 1e-4);
        let pre = p3_prefactor(rs.roots(), &sd).unwrap();
        let late = p3_growth(rs.roots(), &sd, 25.0).unwrap() * (-2.0 * l3 * 25.0).exp();
        assert!((late / pre - 1.0).abs() < 1e-9);
        assert!(p3_growth(rs.roots(), &sd, 0.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn alpha_from_limits_is_half_the_stated_limit() {
        let (sd, _, rs) = reference();
        let stated = alpha_limit(rs.roots(), &sd).unwrap();
        assert!((stated - 0.2294).abs() < 1e-4);
        let assembled = alpha_from_limits(rs.roots(), &sd).unwrap();
        assert!((assembled - 0.114_686_3).abs() < 1e-6);
        assert!((2.0 * assembled / stated - 1.0).abs() < 1e-12);
        // and the finite-time coefficient approaches the same value
        let late = p_terms(rs.roots(), &sd, 40.0).unwrap().alpha();
        assert!((late / assembled - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_limit_is_half_the_stated_constant_on_the_origin() {
        let (sd, mp, rs) = reference();
        let stated = pi_limit(rs.roots(), &sd, &mp).unwrap();
        let derived = exponent_limit(rs.roots(), &sd, &mp, 0.0, 0.0).unwrap();
        assert!((2.0 * derived / stated - 1.0).abs() < 1e-12);
        let special = mp.with_initial(1.0, -rs.roots().lambdas().unwrap().2).unwrap();
        assert!(pi_limit(rs.roots(), &sd, &special).unwrap().abs() < 1e-15);
        let doubled = mp.with_initial(2.0, 0.0).unwrap();
        assert!((pi_limit(rs.roots(), &sd, &doubled).unwrap() / stated - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_requires_large_coupling() {
        let sd = SpectralDensity::new(1.0, 1.0).unwrap();
        let mp = ModelParams::new(1.0, 0.3, 1.0, 1.0, 0.0).unwrap();
        let roots = characteristic_roots(&sd, &mp);
        assert!(matches!(abc_closed_form(&sd, &mp, &roots, 1.0), Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn small_coupling_stationary_limit() {
        let sd = SpectralDensity::new(1.0, 1.0).unwrap();
        let w = 1.0;
        let crit = w * w / sd.total_integral();
        let mp = ModelParams::new(w, (0.1 * crit).sqrt(), 1.0, 1.0, 0.0).unwrap();
        let rs = build_response(characteristic_roots(&sd, &mp)).unwrap();
        let delta = -rs.roots().spectral_abscissa();
        let t = 50.0 / delta;
        let q = QuadratureSpec::new(&sd, 400.0, 32, 1e-2).unwrap();
        let n = abc_numeric(&sd, &mp, &rs, t, &q).unwrap();
        let st = stationary_covariance(&sd, &mp).unwrap();
        assert!((n.a_coef / st.a_coef - 1.0).abs() < 1e-5, "{} vs {}", n.a_coef, st.a_coef);
        assert!((n.c_coef / st.c_coef - 1.0).abs() < 1e-5);
        assert!(n.b_coef.abs() < 1e-5);
        assert!((w * w * st.a_coef - 1.0 / 0.9).abs() < 1e-12);
    }
}
