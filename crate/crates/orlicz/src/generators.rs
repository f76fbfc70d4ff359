//! Reproducible samplers for the extremal variables the theory is tested
//! on: truncated Rademacher series, symmetric Weibull-type variables,
//! their products, and the moment-generating-function bound check.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::moments::mean_sd;
use crate::numerics::{log_mean_exp, pairwise_sum};
use crate::psi::SlowlyVarying;
use crate::rng::{CounterRng, SeedSpec};
use crate::sample::{Provenance, Sample};
use crate::{Error, Result};

/// `ξ = Σ_{k=2}^{K} k^{-B} L(k) ε(k)` with i.i.d. signs `ε(k)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RademacherSeriesSpec {
    pub b: f64,
    pub l: SlowlyVarying,
    pub k_trunc: usize,
}

impl RademacherSeriesSpec {
    pub fn new(b: f64, l: SlowlyVarying, k_trunc: usize) -> Result<Self> {
        if !(b > 0.5 && b < 1.0) {
            return Err(Error::InvalidInput(format!("B must lie in (0.5, 1), got {b}")));
        }
        if k_trunc < 2 {
            return Err(Error::InvalidInput("truncation index must be ≥ 2".into()));
        }
        Ok(Self { b, l, k_trunc })
    }

    /// Series coefficients `k^{-B} L(k)`, `k = 2..=K`.
    pub fn coefficients(&self) -> Vec<f64> {
        (2..=self.k_trunc)
            .map(|k| (k as f64).powf(-self.b) * self.l.eval(k as f64))
            .collect()
    }

    /// Exact truncated variance `Σ_{k=2}^{K} k^{-2B} L²(k)`.
    pub fn variance(&self) -> f64 {
        let c = self.coefficients();
        pairwise_sum(0, c.len(), &|i| c[i] * c[i])
    }

    /// Variance discarded by the truncation, `Σ_{k>K} k^{-2B} L²(k)`:
    /// summed numerically out to `100·K`, with an integral remainder for
    /// the rest (the integrand is monotone there).
    pub fn truncation_tail_variance(&self) -> f64 {
        let k0 = self.k_trunc + 1;
        let k1 = self.k_trunc.saturating_mul(100).max(k0 + 1);
        let term = |k: f64| {
            let l = self.l.eval(k);
            k.powf(-2.0 * self.b) * l * l
        };
        let head = pairwise_sum(k0, k1, &|k| term(k as f64));
        let x = k1 as f64;
        let l = self.l.eval(x);
        head + x.powf(1.0 - 2.0 * self.b) * l * l / (2.0 * self.b - 1.0)
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({ "kind": "rademacher_series", "spec": self })
    }
}

/// Theoretical tail shape of the series:
/// `-log P(|ξ| > u) ≍ u^{1/(1-B)} · L̃(u)` with
/// `L̃(u) = [L(u^{1/(1-B)})]^{-1/(1-B)}`.
#[derive(Debug, Clone)]
pub struct RademacherTail {
    pub exponent: f64,
    spec: RademacherSeriesSpec,
}

impl RademacherTail {
    pub fn l_tilde(&self, u: f64) -> f64 {
        let e = 1.0 / (1.0 - self.spec.b);
        self.spec.l.eval(u.powf(e)).powf(-e)
    }
}

pub fn rademacher_tail_exponent(spec: &RademacherSeriesSpec) -> RademacherTail {
    RademacherTail {
        exponent: 1.0 / (1.0 - spec.b),
        spec: spec.clone(),
    }
}

/// `n` i.i.d. realizations of the truncated series. Deterministic in
/// `(spec, n, seed)`; each realization consumes its own counter block, so
/// any chunked evaluation reproduces the serial output bit-for-bit.
pub fn sample_rademacher_series(
    spec: &RademacherSeriesSpec,
    n: usize,
    seed: SeedSpec,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let values = rademacher_range(spec, 0, n, seed);
    Sample::new(
        values,
        Provenance::Generator {
            descriptor: spec.descriptor(),
            seed,
        },
    )
}

/// Realizations for the index range `[lo, hi)` of the same logical sample.
pub fn rademacher_range(
    spec: &RademacherSeriesSpec,
    lo: usize,
    hi: usize,
    seed: SeedSpec,
) -> Vec<f64> {
    let coeffs = spec.coefficients();
    let rng = CounterRng::new(seed);
    let words_per_sample = coeffs.len().div_ceil(64) as u64;
    let mut out = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let base = i as u64 * words_per_sample;
        let mut acc = 0.0f64;
        let mut idx = 0usize;
        for w in 0..words_per_sample {
            let mut bits = rng.word(base + w);
            let stop = (idx + 64).min(coeffs.len());
            while idx < stop {
                // flip the coefficient's sign bit with the random bit
                let signed = f64::from_bits(coeffs[idx].to_bits() ^ (bits << 63));
                acc += signed;
                bits >>= 1;
                idx += 1;
            }
        }
        out.push(acc);
    }
    out
}

/// Symmetric variable with tail `P(|X| > x) = exp(-x^m L(x))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeibullSymSpec {
    pub m: f64,
    pub l: SlowlyVarying,
}

impl WeibullSymSpec {
    pub fn new(m: f64, l: SlowlyVarying) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidInput(format!("m must be > 0, got {m}")));
        }
        let spec = Self { m, l };
        spec.check_invertible()?;
        Ok(spec)
    }

    /// The tail exponent `x^m L(x)` must be increasing so the tail can be
    /// inverted; checked on a log grid.
    fn check_invertible(&self) -> Result<()> {
        let mut prev = 0.0f64;
        for i in 0..=200 {
            let x = (1e-3f64).ln() + (1e6f64.ln() - 1e-3f64.ln()) * i as f64 / 200.0;
            let g = self.tail_exponent_at(x.exp());
            if g < prev - 1e-12 * (1.0 + prev.abs()) {
                return Err(Error::InvalidInput(
                    "x^m L(x) is not increasing: tail not invertible".into(),
                ));
            }
            prev = g;
        }
        Ok(())
    }

    fn tail_exponent_at(&self, x: f64) -> f64 {
        x.powf(self.m) * self.l.eval(x)
    }

    /// Invert `x^m L(x) = e`: closed form for constant L, monotone
    /// bisection (doubling bracket) otherwise.
    pub fn invert_tail(&self, e: f64, tol: f64) -> f64 {
        match &self.l {
            SlowlyVarying::Const { c } => (e / c).powf(1.0 / self.m),
            _ => {
                let mut hi = 1.0f64;
                while self.tail_exponent_at(hi) < e {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return hi;
                    }
                }
                let mut lo = 0.0f64;
                while hi - lo > tol * (1.0 + hi) {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_exponent_at(mid) < e {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({ "kind": "weibull_symmetric", "spec": self })
    }
}

/// Bisection tolerance for tail inversion.
const INVERT_TOL: f64 = 1e-12;

/// Draw `n` symmetric realizations: `|X|` by inverting the tail at a unit
/// exponential, the sign from an independent bit.
pub fn sample_weibull_symmetric(spec: &WeibullSymSpec, n: usize, seed: SeedSpec) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let rng = CounterRng::new(seed);
    let values: Vec<f64> = (0..n as u64)
        .map(|i| {
            let e = rng.exponential(2 * i);
            let mag = spec.invert_tail(e, INVERT_TOL);
            mag * rng.sign_bit(2 * i + 1, 0)
        })
        .collect();
    Sample::new(
        values,
        Provenance::Generator {
            descriptor: spec.descriptor(),
            seed,
        },
    )
}

/// Coordinatewise product `τ_i = ξ_i · η_i` of two independent Weibull
/// samples; the factors draw from derived substreams of `seed`.
pub fn sample_product(
    xi: &WeibullSymSpec,
    eta: &WeibullSymSpec,
    n: usize,
    seed: SeedSpec,
) -> Result<Sample> {
    let a = sample_weibull_symmetric(xi, n, seed.substream(0))?;
    let b = sample_weibull_symmetric(eta, n, seed.substream(1))?;
    let values: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .collect();
    Sample::new(
        values,
        Provenance::Generator {
            descriptor: json!({
                "kind": "product",
                "xi": xi.descriptor(),
                "eta": eta.descriptor(),
            }),
            seed,
        },
    )
}

/// One λ point of the two-sided MGF check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MgfPoint {
    pub lambda: f64,
    pub log_mgf_plus: f64,
    pub log_mgf_minus: f64,
    /// `max(log MGF±) / (λ^{m/(m-1)} L^{-1/(m-1)}(λ^{1/(m-1)}))` —
    /// the per-λ constant that would make the bound tight.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MgfReport {
    pub points: Vec<MgfPoint>,
    /// Smallest constant C making the bound hold across the grid.
    pub c_min: f64,
}

/// Check `E exp(±λη) ≤ exp(C λ^{m/(m-1)} L^{-1/(m-1)}(λ^{1/(m-1)}))` on a
/// λ-grid for an empirically centered sample; returns the margin curve.
pub fn mgf_bound_check(
    s: &Sample,
    m: f64,
    l: &SlowlyVarying,
    lambda_grid: &[f64],
) -> Result<MgfReport> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("MGF bound needs m > 1, got {m}")));
    }
    let (mean, sd) = mean_sd(s.values());
    let threshold = 3.0 * sd / (s.len() as f64).sqrt();
    if mean.abs() > threshold {
        return Err(Error::NotCentered {
            mean: mean.abs(),
            threshold,
        });
    }
    let n = s.len();
    let vals = s.values();
    let mut points = Vec::with_capacity(lambda_grid.len());
    let mut c_min = 0.0f64;
    for &lambda in lambda_grid {
        if lambda < 0.0 {
            return Err(Error::Domain("λ grid must be nonnegative".into()));
        }
        let lp = log_mean_exp(n, &|i| lambda * vals[i]);
        let lm = log_mean_exp(n, &|i| -lambda * vals[i]);
        let margin = if lambda == 0.0 {
            0.0
        } else {
            let denom =
                lambda.powf(m / (m - 1.0)) * l.eval(lambda.powf(1.0 / (m - 1.0))).powf(-1.0 / (m - 1.0));
            lp.max(lm) / denom
        };
        c_min = c_min.max(margin);
        points.push(MgfPoint {
            lambda,
            log_mgf_plus: lp,
            log_mgf_minus: lm,
            margin,
        });
    }
    Ok(MgfReport { points, c_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NumericConfig;
    use crate::norms::{tail_exponent_fit, TailModel};

    fn seed() -> SeedSpec {
        SeedSpec::new(20_260_810, 0)
    }

    #[test]
    fn spec_validation() {
        assert!(RademacherSeriesSpec::new(0.4, SlowlyVarying::ONE, 10).is_err());
        assert!(RademacherSeriesSpec::new(1.0, SlowlyVarying::ONE, 10).is_err());
        assert!(RademacherSeriesSpec::new(0.75, SlowlyVarying::ONE, 1).is_err());
        assert!(WeibullSymSpec::new(0.0, SlowlyVarying::ONE).is_err());
    }

    #[test]
    fn rademacher_single_term_and_symmetry() {
        let spec = RademacherSeriesSpec::new(0.75, SlowlyVarying::ONE, 2).unwrap();
        let s = sample_rademacher_series(&spec, 100_000, seed()).unwrap();
        let a = (2.0f64).powf(-0.75);
        let pos = s.values().iter().filter(|&&v| v > 0.0).count();
        for &v in s.values() {
            assert!((v.abs() - a).abs() < 1e-15);
        }
        let frac = pos as f64 / s.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "sign balance {frac}");
    }

    #[test]
    fn rademacher_mean_and_variance() {
        let spec = RademacherSeriesSpec::new(0.75, SlowlyVarying::ONE, 10_000).unwrap();
        let n = 200_000;
        let s = sample_rademacher_series(&spec, n, seed()).unwrap();
        let (mean, sd) = mean_sd(s.values());
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt() * 1.5);
        let exact = spec.variance();
        let emp = sd * sd;
        assert!((emp - exact).abs() / exact < 0.01, "var {emp} vs {exact}");
    }

    #[test]
    fn rademacher_deterministic_and_chunkable() {
        let spec = RademacherSeriesSpec::new(0.6, SlowlyVarying::ONE, 300).unwrap();
        let a = sample_rademacher_series(&spec, 200, seed()).unwrap();
        let b = sample_rademacher_series(&spec, 200, seed()).unwrap();
        assert_eq!(a.values(), b.values());
        let head = rademacher_range(&spec, 0, 77, seed());
        let tail = rademacher_range(&spec, 77, 200, seed());
        let glued: Vec<f64> = head.into_iter().chain(tail).collect();
        assert_eq!(a.values(), glued.as_slice());
    }

    #[test]
    fn tail_exponent_descriptor() {
        let spec = RademacherSeriesSpec::new(0.75, SlowlyVarying::ONE, 100).unwrap();
        let t = rademacher_tail_exponent(&spec);
        assert!((t.exponent - 4.0).abs() < 1e-12);
        assert!((t.l_tilde(10.0) - 1.0).abs() < 1e-12);
        let t = rademacher_tail_exponent(&RademacherSeriesSpec::new(0.8, SlowlyVarying::ONE, 100).unwrap());
        assert!((t.exponent - 5.0).abs() < 1e-12);
        let t = rademacher_tail_exponent(&RademacherSeriesSpec::new(0.501, SlowlyVarying::ONE, 100).unwrap());
        assert!((t.exponent - 2.0).abs() < 0.01);
    }

    #[test]
    fn truncation_tail_variance_consistent() {
        // reference: direct sum to 3e6 plus the integral remainder beyond
        let spec = RademacherSeriesSpec::new(0.75, SlowlyVarying::ONE, 100).unwrap();
        let direct: f64 = (101..3_000_000).map(|k| (k as f64).powf(-1.5)).sum::<f64>()
            + 2.0 * (3_000_000f64).powf(-0.5);
        let est = spec.truncation_tail_variance();
        assert!((est - direct).abs() / direct < 1e-4, "{est} vs {direct}");
    }

    #[test]
    fn weibull_gamma_moment_oracle() {
        // E X² = Γ(1 + 2/m); m = 2 gives exactly 1
        let spec = WeibullSymSpec::new(2.0, SlowlyVarying::ONE).unwrap();
        let n = 400_000;
        let s = sample_weibull_symmetric(&spec, n, seed()).unwrap();
        let m2 = pairwise_sum(0, n, &|i| s.values()[i] * s.values()[i]) / n as f64;
        assert!((m2 - 1.0).abs() < 0.02, "second moment {m2}");
        let pos = s.values().iter().filter(|&&v| v > 0.0).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() < 0.02);
    }

    #[test]
    fn weibull_tail_slope() {
        let spec = WeibullSymSpec::new(1.0, SlowlyVarying::ONE).unwrap();
        let s = sample_weibull_symmetric(&spec, 1_000_000, seed()).unwrap();
        let fit = tail_exponent_fit(&s, TailModel::Weibull, &NumericConfig::default()).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "slope {}", fit.slope);
    }

    #[test]
    fn weibull_nonconstant_l_inversion() {
        let l = SlowlyVarying::log_power(1.0, 2.0).unwrap();
        let spec = WeibullSymSpec::new(2.0, l).unwrap();
        // invert_tail really inverts: g(invert(e)) = e
        for e in [0.1, 1.0, 5.0, 20.0] {
            let x = spec.invert_tail(e, 1e-12);
            assert!((spec.tail_exponent_at(x) - e).abs() < 1e-8);
        }
        // sampling still symmetric and usable
        let s = sample_weibull_symmetric(&spec, 20_000, seed()).unwrap();
        let (mean, sd) = mean_sd(s.values());
        assert!(mean.abs() < 4.0 * sd / (20_000f64).sqrt());
    }

    #[test]
    fn product_coordinatewise_and_independent() {
        let spec = WeibullSymSpec::new(2.0, SlowlyVarying::ONE).unwrap();
        let n = 100_000;
        let tau = sample_product(&spec, &spec, n, seed()).unwrap();
        let a = sample_weibull_symmetric(&spec, n, seed().substream(0)).unwrap();
        let b = sample_weibull_symmetric(&spec, n, seed().substream(1)).unwrap();
        for i in [0usize, 1, 999, n - 1] {
            assert_eq!(tau.values()[i], a.values()[i] * b.values()[i]);
        }
        // factor independence: empirical correlation within 3/sqrt(n)
        let (ma, _) = mean_sd(a.values());
        let (mb, _) = mean_sd(b.values());
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for i in 0..n {
            let x = a.values()[i] - ma;
            let y = b.values()[i] - mb;
            num += x * y;
            da += x * x;
            db += y * y;
        }
        let corr = num / (da.sqrt() * db.sqrt());
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn mgf_gaussian_margin_near_half() {
        // Gaussian log-MGF is exactly λ²/2; for m=2, L≡1 the margin curve is 1/2
        let rng = CounterRng::new(seed().substream(9));
        let n = 200_000;
        let mut v = Vec::with_capacity(n);
        for i in 0..(n / 2) as u64 {
            let (a, b) = rng.normal_pair(i);
            v.push(a);
            v.push(b);
        }
        let s = Sample::synthetic(v, "gauss").unwrap();
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
        let rep = mgf_bound_check(&s, 2.0, &SlowlyVarying::ONE, &grid).unwrap();
        assert_eq!(rep.points[0].log_mgf_plus, 0.0);
        for p in &rep.points[2..] {
            assert!((p.margin - 0.5).abs() < 0.05, "λ={} margin {}", p.lambda, p.margin);
        }
        assert!((rep.c_min - 0.5).abs() < 0.06);
    }

    #[test]
    fn mgf_requires_centering() {
        let s = Sample::synthetic(vec![1.0; 1000], "ones").unwrap();
        assert!(matches!(
            mgf_bound_check(&s, 2.0, &SlowlyVarying::ONE, &[1.0]),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn mgf_bounded_sample_margin_bounded() {
        let rng = CounterRng::new(seed().substream(4));
        let v: Vec<f64> = (0..50_000).map(|i| rng.sign_bit(i, 0)).collect();
        let s = Sample::synthetic(v, "signs").unwrap();
        let rep = mgf_bound_check(&s, 2.0, &SlowlyVarying::ONE, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        // log cosh λ ≤ λ²/2: margins bounded by 1/2, decreasing at large λ
        for p in &rep.points {
            assert!(p.margin <= 0.51);
        }
        assert!(rep.points.last().unwrap().margin < rep.points[1].margin);
    }
}
