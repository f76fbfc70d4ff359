//! Small numeric building blocks: deterministic pairwise reductions,
//! log-sum-exp, grid constructors, golden-section search, least squares and
//! trend classification.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation over `f(i)` for `i in lo..hi`.
///
/// Deterministic for a fixed index order and accurate to `O(log n)` ulps,
/// independent of any chunking a caller may do on top.
pub fn pairwise_sum(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
    let n = hi - lo;
    if n <= 32 {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + n / 2;
    pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f)
}

/// Pairwise sum of a slice.
pub fn sum_slice(xs: &[f64]) -> f64 {
    pairwise_sum(0, xs.len(), &|i| xs[i])
}

/// `ln(mean_i exp(a(i)))` over `i in 0..n`, max-rescaled, pairwise summed.
/// Returns `-inf` for `n == 0` or when every term is `-inf`.
pub fn log_mean_exp(n: usize, a: &impl Fn(usize) -> f64) -> f64 {
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let mut m = f64::NEG_INFINITY;
    for i in 0..n {
        m = m.max(a(i));
    }
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s = pairwise_sum(0, n, &|i| (a(i) - m).exp());
    m + (s / n as f64).ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}

/// `n` log-uniformly spaced points from `a > 0` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a, "logspace needs 0 < a < b");
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| (la + h * i as f64).exp()).collect();
    // pin the endpoints exactly
    v[0] = a;
    *v.last_mut().unwrap() = b;
    v
}

/// Golden-section minimization of `f` on `[a, b]`. Returns `(x_min, f_min)`.
pub fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Ordinary least squares of `y` on `x`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> OlsFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0, "ols needs at least two points");
    let mx = sum_slice(xs) / n;
    let my = sum_slice(ys) / n;
    let sxx = pairwise_sum(0, xs.len(), &|i| (xs[i] - mx) * (xs[i] - mx));
    let sxy = pairwise_sum(0, xs.len(), &|i| (xs[i] - mx) * (ys[i] - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = pairwise_sum(0, xs.len(), &|i| {
        let r = ys[i] - intercept - slope * xs[i];
        r * r
    });
    let dof = (n - 2.0).max(1.0);
    let stderr = (sse / dof / sxx).sqrt();
    OlsFit {
        slope,
        intercept,
        slope_stderr: stderr,
    }
}

/// Tail-trend verdict for ratio curves `|η|_p / ψ(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendVerdict {
    /// Ratio decreasing towards zero over the window.
    Decreasing,
    /// Ratio flat within the plateau band.
    Plateau,
    /// Ratio growing over the window.
    Growing,
    /// No finite classification possible.
    Inconclusive,
}

/// Classify the least-squares slope of `log_ratio` against `log_p`
/// with symmetric thresholds at `±threshold`.
pub fn classify_trend(log_p: &[f64], log_ratio: &[f64], threshold: f64) -> (TrendVerdict, f64) {
    if log_p.len() < 2 || log_ratio.iter().any(|v| !v.is_finite()) {
        return (TrendVerdict::Inconclusive, f64::NAN);
    }
    let fit = ols(log_p, log_ratio);
    let v = if fit.slope < -threshold {
        TrendVerdict::Decreasing
    } else if fit.slope > threshold {
        TrendVerdict::Growing
    } else {
        TrendVerdict::Plateau
    };
    (v, fit.slope)
}
