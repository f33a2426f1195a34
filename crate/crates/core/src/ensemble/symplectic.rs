use super::initials::BathInitials;
use super::PhasePoint;
use crate::error::{Error, Result};
use crate::response::{BathDiscretization, ModelParams};

/// Points at the requested times plus the worst energy excursion seen.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticRun {
    pub points: Vec<PhasePoint>,
    /// `max |H(t) - H(0)|` over all steps, divided by the sum of the absolute
    /// values of the terms of `H(0)`.
    pub relative_energy_drift: f64,
}

struct State {
    q: f64,
    p: f64,
    qn: Vec<f64>,
    pn: Vec<f64>,
}

fn energy(s: &State, bath: &BathDiscretization, mp: &ModelParams) -> (f64, f64) {
    let free = 0.5 * (s.p * s.p + mp.omega_sq() * s.q * s.q);
    let mut bath_e = 0.0;
    let mut link = 0.0;
    for (i, (&w, &a)) in bath.omegas().iter().zip(bath.alphas()).enumerate() {
        bath_e += 0.5 * (s.pn[i] * s.pn[i] + w * w * s.qn[i] * s.qn[i]);
        link += a * s.qn[i];
    }
    let coupling = mp.epsilon() * s.q * link;
    (free + bath_e + coupling, free + bath_e + coupling.abs())
}

/// Largest step accepted: `h max(omega, max omega_n) <= 0.05`.
pub fn max_symplectic_step(bath: &BathDiscretization, mp: &ModelParams) -> f64 {
    0.05 / mp.omega().max(bath.max_omega())
}

fn rotate(q: &mut f64, p: &mut f64, w: f64, c: f64, s: f64) {
    let (q0, p0) = (*q, *p);
    *q = q0 * c + p0 * s / w;
    *p = -q0 * w * s + p0 * c;
}

/// Integrates the full `N + 1` oscillator system: exact free rotations for a
/// half step, a kick by the bilinear coupling, another half rotation.
pub fn integrate_symplectic(
    bath: &BathDiscretization,
    mp: &ModelParams,
    initials: &BathInitials,
    times: &[f64],
    h: f64,
) -> Result<SymplecticRun> {
    let max = max_symplectic_step(bath, mp);
    if !(h > 0.0) || h > max {
        return Err(Error::StepTooLarge { h, max });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("times", "must be nonnegative and nondecreasing"));
    }
    let eps = mp.epsilon();
    let (omegas, alphas) = (bath.omegas(), bath.alphas());
    let mut st = State {
        q: mp.q0(),
        p: mp.p0(),
        qn: initials.q.clone(),
        pn: initials.p.clone(),
    };
    let (e0, scale) = energy(&st, bath, mp);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut drift = 0.0_f64;
    let mut points = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for &target in times {
        let span = target - now;
        let steps = (span / h).ceil() as usize;
        if steps > 0 {
            let dt = span / steps as f64;
            let half = 0.5 * dt;
            let sys = (mp.omega() * half).sin_cos();
            let modes: Vec<(f64, f64)> = omegas.iter().map(|w| (w * half).sin_cos()).collect();
            for _ in 0..steps {
                rotate(&mut st.q, &mut st.p, mp.omega(), sys.1, sys.0);
                for (i, &(s, c)) in modes.iter().enumerate() {
                    rotate(&mut st.qn[i], &mut st.pn[i], omegas[i], c, s);
                }
                let link: f64 = alphas.iter().zip(&st.qn).map(|(a, q)| a * q).sum();
                let kick_q = eps * dt * st.q;
                st.p -= eps * dt * link;
                for (pn, a) in st.pn.iter_mut().zip(alphas) {
                    *pn -= kick_q * a;
                }
                rotate(&mut st.q, &mut st.p, mp.omega(), sys.1, sys.0);
                for (i, &(s, c)) in modes.iter().enumerate() {
                    rotate(&mut st.qn[i], &mut st.pn[i], omegas[i], c, s);
                }
                drift = drift.max((energy(&st, bath, mp).0 - e0).abs());
            }
        }
        now = target;
        points.push(PhasePoint { q: st.q, p: st.p });
    }
    Ok(SymplecticRun {
        points,
        relative_energy_drift: drift / scale,
    })
}

/// Phase points only; see [`integrate_symplectic`].
pub fn trajectory_symplectic(
    bath: &BathDiscretization,
    mp: &ModelParams,
    initials: &BathInitials,
    times: &[f64],
    h: f64,
) -> Result<Vec<PhasePoint>> {
    Ok(integrate_symplectic(bath, mp, initials, times, h)?.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_period() {
        let bath = BathDiscretization::new(vec![1.0], vec![1.0]).unwrap();
        let mp = ModelParams::new(2.0, 0.0, 1.0, 0.5, 0.3).unwrap();
        let pts = trajectory_symplectic(&bath, &mp, &BathInitials::at_rest(1), &[PI], 0.01).unwrap();
        assert!((pts[0].q - 0.5).abs() < 1e-12 && (pts[0].p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn step_bound() {
        let bath = BathDiscretization::new(vec![10.0], vec![1.0]).unwrap();
        let mp = ModelParams::new(1.0, 0.1, 1.0, 0.0, 1.0).unwrap();
        let r = trajectory_symplectic(&bath, &mp, &BathInitials::at_rest(1), &[1.0], 0.01);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn two_oscillator_normal_modes() {
        // Equal frequencies: q +- q1 are normal modes with frequencies sqrt(w^2 +- eps alpha).
        let (w, eps, a) = (1.0, 0.3, 1.0);
        let bath = BathDiscretization::new(vec![w], vec![a]).unwrap();
        let mp = ModelParams::new(w, eps, 1.0, 1.0, 0.0).unwrap();
        let t = 7.3;
        let pts = trajectory_symplectic(&bath, &mp, &BathInitials::at_rest(1), &[t], 1e-3).unwrap();
        let (wp, wm) = ((w * w + eps * a).sqrt(), (w * w - eps * a).sqrt());
        let q = 0.5 * ((wp * t).cos() + (wm * t).cos());
        assert!((pts[0].q - q).abs() < 1e-6, "{} vs {q}", pts[0].q);
    }
}
