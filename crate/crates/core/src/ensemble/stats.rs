use serde::{Deserialize, Serialize};

/// Empirical moments of paired samples at one time, with standard errors.
/// Reductions run in index order, so results do not depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub t: f64,
    pub mean_q: f64,
    pub se_q: f64,
    pub mean_p: f64,
    pub se_p: f64,
    pub var_q: f64,
    pub se_var_q: f64,
    pub var_p: f64,
    pub se_var_p: f64,
    pub cov_qp: f64,
    pub se_cov_qp: f64,
    pub skew_q: f64,
    pub skew_p: f64,
    /// Excess kurtosis.
    pub kurt_q: f64,
    pub kurt_p: f64,
    /// `sqrt(6 / N)`.
    pub se_skew: f64,
    /// `sqrt(24 / N)`.
    pub se_kurt: f64,
}

struct Central {
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

fn central(x: &[f64]) -> Central {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    Central {
        mean,
        m2: m2 / n,
        m3: m3 / n,
        m4: m4 / n,
    }
}

fn shape(c: &Central) -> (f64, f64) {
    if c.m2 > 0.0 {
        (c.m3 / c.m2.powf(1.5), c.m4 / (c.m2 * c.m2) - 3.0)
    } else {
        (0.0, 0.0)
    }
}

/// Requires at least two samples.
pub fn sample_moments(t: f64, q: &[f64], p: &[f64]) -> EnsembleMoments {
    assert!(q.len() == p.len() && q.len() >= 2);
    let n = q.len() as f64;
    let (cq, cp) = (central(q), central(p));
    let unbias = n / (n - 1.0);
    let var_q = cq.m2 * unbias;
    let var_p = cp.m2 * unbias;
    let (mut cov, mut cov2) = (0.0, 0.0);
    for (a, b) in q.iter().zip(p) {
        let d = (a - cq.mean) * (b - cp.mean);
        cov += d;
        cov2 += d * d;
    }
    let cov_pop = cov / n;
    let (skew_q, kurt_q) = shape(&cq);
    let (skew_p, kurt_p) = shape(&cp);
    EnsembleMoments {
        t,
        mean_q: cq.mean,
        se_q: (var_q / n).sqrt(),
        mean_p: cp.mean,
        se_p: (var_p / n).sqrt(),
        var_q,
        se_var_q: ((cq.m4 - cq.m2 * cq.m2).max(0.0) / n).sqrt(),
        var_p,
        se_var_p: ((cp.m4 - cp.m2 * cp.m2).max(0.0) / n).sqrt(),
        cov_qp: cov * unbias / n,
        se_cov_qp: ((cov2 / n - cov_pop * cov_pop).max(0.0) / n).sqrt(),
        skew_q,
        skew_p,
        kurt_q,
        kurt_p,
        se_skew: (6.0 / n).sqrt(),
        se_kurt: (24.0 / n).sqrt(),
    }
}
