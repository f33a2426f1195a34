use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::response::BathDiscretization;

/// Bath initial data `P_n = p_n(0)`, `Q_n = q_n(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathInitials {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl BathInitials {
    /// All `E_n = 0`.
    pub fn at_rest(n: usize) -> Self {
        Self {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    /// From energies and phases: `Q = sqrt(2E) cos(phi) / omega`, `P = -sqrt(2E) sin(phi)`.
    pub fn from_action_angle(bath: &BathDiscretization, energies: &[f64], phases: &[f64]) -> Self {
        let mut out = Self::at_rest(bath.n());
        for (i, &w) in bath.omegas().iter().enumerate() {
            let r = (2.0 * energies[i]).sqrt();
            let (s, c) = phases[i].sin_cos();
            out.q[i] = r * c / w;
            out.p[i] = -r * s;
        }
        out
    }

    /// `E_n = (P_n^2 + omega_n^2 Q_n^2) / 2`.
    pub fn energies(&self, bath: &BathDiscretization) -> Vec<f64> {
        bath.omegas()
            .iter()
            .zip(self.p.iter().zip(&self.q))
            .map(|(w, (p, q))| 0.5 * (p * p + w * w * q * q))
            .collect()
    }
}

/// Gibbs draw: `P_n ~ N(0, kT)`, `Q_n ~ N(0, kT / omega_n^2)`. A zero or
/// negative `kT` gives the bath at rest.
pub fn sample_bath_initials<R: Rng + ?Sized>(bath: &BathDiscretization, kt: f64, rng: &mut R) -> BathInitials {
    let n = bath.n();
    if !(kt > 0.0) {
        return BathInitials::at_rest(n);
    }
    let s = kt.sqrt();
    let mut out = BathInitials::at_rest(n);
    for (i, &w) in bath.omegas().iter().enumerate() {
        let zp: f64 = rng.sample(StandardNormal);
        let zq: f64 = rng.sample(StandardNormal);
        out.p[i] = s * zp;
        out.q[i] = s * zq / w;
    }
    out
}

/// `f_N(t) = -sum alpha_n (Q_n cos(omega_n t) + P_n sin(omega_n t) / omega_n)`.
pub fn forcing(bath: &BathDiscretization, initials: &BathInitials, t: f64) -> f64 {
    let mut f = 0.0;
    for (i, (&w, &a)) in bath.omegas().iter().zip(bath.alphas()).enumerate() {
        let (s, c) = (w * t).sin_cos();
        f -= a * (initials.q[i] * c + initials.p[i] * s / w);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forcing_values() {
        let bath = BathDiscretization::new(vec![1.0], vec![1.0]).unwrap();
        let init = BathInitials { p: vec![0.0], q: vec![1.0] };
        assert!((forcing(&bath, &init, std::f64::consts::PI) - 1.0).abs() < 1e-15);
        assert_eq!(forcing(&bath, &BathInitials::at_rest(1), 3.0), 0.0);

        let bath = BathDiscretization::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
        let init = BathInitials { p: vec![1.0, -2.0], q: vec![0.4, 0.1] };
        assert!((forcing(&bath, &init, 0.0) + (0.3 * 0.4 + 0.7 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn action_angle_matches_cartesian_forcing() {
        // f_N = -sum alpha sqrt(2E) cos(omega t + phi) / omega
        let bath = BathDiscretization::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
        let (e, phi) = ([0.8, 1.7], [0.3, -2.0]);
        let init = BathInitials::from_action_angle(&bath, &e, &phi);
        for (a, b) in init.energies(&bath).iter().zip(e) {
            assert!((a - b).abs() < 1e-14);
        }
        for t in [0.0, 0.7, 5.0] {
            let polar: f64 = (0..2)
                .map(|i| -bath.alphas()[i] * (2.0 * e[i]).sqrt() * (bath.omegas()[i] * t + phi[i]).cos() / bath.omegas()[i])
                .sum();
            assert!((forcing(&bath, &init, t) - polar).abs() < 1e-14);
        }
    }

    #[test]
    fn gibbs_statistics() {
        let bath = BathDiscretization::new(vec![0.5, 3.0], vec![1.0, 1.0]).unwrap();
        let kt = 1.7;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let (mut vp, mut vq, mut e) = ([0.0; 2], [0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let init = sample_bath_initials(&bath, kt, &mut rng);
            for i in 0..2 {
                vp[i] += init.p[i] * init.p[i];
                vq[i] += init.q[i] * init.q[i];
            }
            for (acc, en) in e.iter_mut().zip(init.energies(&bath)) {
                *acc += en;
            }
        }
        for i in 0..2 {
            let w2 = bath.omegas()[i].powi(2);
            let se = kt * (2.0 / n as f64).sqrt();
            assert!((vp[i] / n as f64 - kt).abs() < 3.0 * se);
            assert!((vq[i] * w2 / n as f64 - kt).abs() < 3.0 * se);
            // E is exponential with mean kT
            assert!((e[i] / n as f64 - kt).abs() < 3.0 * kt / (n as f64).sqrt());
        }
    }

    #[test]
    fn zero_temperature_is_at_rest() {
        let bath = BathDiscretization::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_bath_initials(&bath, 0.0, &mut rng), BathInitials::at_rest(2));
    }
}
