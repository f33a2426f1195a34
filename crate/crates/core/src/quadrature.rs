//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands on a finite interval.
//!
//! The interval is first split into caller-supplied panels; the panel with
//! the largest error estimate is bisected until the summed estimate meets
//! the tolerance or the subdivision budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_segments: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    /// Estimated absolute error, maximum over components.
    pub error: f64,
    pub segments: usize,
    pub converged: bool,
}

/// One 15-point Kronrod rule with the embedded 7-point Gauss estimate.
pub fn gauss_kronrod<const N: usize, F>(f: &F, lo: f64, hi: f64) -> ([f64; N], f64)
where
    F: Fn(f64) -> [f64; N],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];

    let fc = f(center);
    for k in 0..N {
        kronrod[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            let s = f1[k] + f2[k];
            kronrod[k] += w * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for k in 0..N {
        kronrod[k] *= half;
        gauss[k] *= half;
        err = err.max((kronrod[k] - gauss[k]).abs());
    }
    (kronrod, err)
}

struct Segment<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[lo, hi]`, starting from `panels` equal panels.
pub fn integrate<const N: usize, F>(
    f: F,
    lo: f64,
    hi: f64,
    panels: usize,
    opts: QuadOptions,
) -> QuadResult<N>
where
    F: Fn(f64) -> [f64; N],
{
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let mut total = [0.0; N];
    let mut total_err = 0.0;
    for i in 0..panels {
        let a = lo + width * i as f64;
        let b = if i + 1 == panels { hi } else { a + width };
        let (value, error) = gauss_kronrod(&f, a, b);
        for k in 0..N {
            total[k] += value[k];
        }
        total_err += error;
        heap.push(Segment {
            lo: a,
            hi: b,
            value,
            error,
        });
    }

    let target = |total: &[f64; N]| {
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        opts.abs_tol.max(opts.rel_tol * scale)
    };

    while total_err > target(&total) && heap.len() < opts.max_segments {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval cannot be split further in f64
            heap.push(worst);
            break;
        }
        let (left, el) = gauss_kronrod(&f, worst.lo, mid);
        let (right, er) = gauss_kronrod(&f, mid, worst.hi);
        for k in 0..N {
            total[k] += left[k] + right[k] - worst.value[k];
        }
        total_err += el + er - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: left,
            error: el,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: right,
            error: er,
        });
    }

    // Re-sum to shed the drift of the running updates.
    let mut value = [0.0; N];
    let mut error = 0.0;
    for seg in heap.iter() {
        for k in 0..N {
            value[k] += seg.value[k];
        }
        error += seg.error;
    }
    QuadResult {
        value,
        error,
        segments: heap.len(),
        converged: error <= target(&value),
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(f: F, lo: f64, hi: f64, panels: usize, opts: QuadOptions) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let r = integrate(|x| [f(x)], lo, hi, panels, opts);
    (r.value[0], r.error)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
