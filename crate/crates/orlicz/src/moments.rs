//! Empirical L^p moments: single norms and moment curves over a p-grid,
//! computed in log space with max-rescaling so deep moments never overflow.

use serde::{Deserialize, Serialize};

use crate::config::p_reliability_cap;
use crate::numerics::pairwise_sum;
use crate::sample::Sample;
use crate::{Error, Result};

/// `p ↦ |η|_p` tabulated on an increasing p-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCurve {
    pub p_grid: Vec<f64>,
    pub lp_values: Vec<f64>,
    /// Sample size behind the curve.
    pub n: usize,
    /// First grid index above the reliability cap `2·log2(n)`, if any;
    /// values from there on are dominated by the sample maximum.
    pub unreliable_from: Option<usize>,
}

/// `(mean |x_i|^p)^{1/p}` with max-rescaling: factor out `M = max|x_i|`,
/// average `exp(p·(ln|x_i| - ln M))` and multiply `M` back.
pub fn lp_norm(s: &Sample, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("lp norm needs p ≥ 1, got {p}")));
    }
    let logs = LogAbs::new(s.values());
    Ok(logs.lp(p))
}

/// Moment curve on `p_grid ⊂ [2, ∞)`; p-values above the reliability cap
/// are flagged, not rejected. The Lyapunov monotonicity of the result is
/// verified as a post-check.
pub fn moment_curve(s: &Sample, p_grid: &[f64]) -> Result<MomentCurve> {
    if p_grid.len() < 2 || p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("p grid must be strictly increasing".into()));
    }
    if p_grid[0] < 2.0 {
        return Err(Error::Domain("moment curves start at p = 2".into()));
    }
    let curve = MomentCurve::from_values(s.values(), p_grid, s.len());
    curve.check_lyapunov()?;
    Ok(curve)
}

impl MomentCurve {
    /// Build from raw values (also used for grid signals, where the
    /// empirical measure is the grid fraction).
    pub fn from_values(values: &[f64], p_grid: &[f64], n_effective: usize) -> Self {
        let logs = LogAbs::new(values);
        let lp_values: Vec<f64> = p_grid.iter().map(|&p| logs.lp(p)).collect();
        let cap = p_reliability_cap(n_effective);
        let unreliable_from = p_grid.iter().position(|&p| p > cap);
        Self {
            p_grid: p_grid.to_vec(),
            lp_values,
            n: n_effective,
            unreliable_from,
        }
    }

    fn check_lyapunov(&self) -> Result<()> {
        let scale = self
            .lp_values
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for w in self.lp_values.windows(2) {
            if w[1] < w[0] - 1e-12 * scale {
                return Err(Error::InvalidInput(format!(
                    "Lyapunov monotonicity violated: {} > {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Cached `ln|x_i|` representation of a sample.
pub(crate) struct LogAbs {
    logs: Vec<f64>,
    log_max: f64,
    n: usize,
}

impl LogAbs {
    pub(crate) fn new(values: &[f64]) -> Self {
        let mut log_max = f64::NEG_INFINITY;
        let logs: Vec<f64> = values
            .iter()
            .map(|&v| {
                let a = v.abs();
                let l = if a == 0.0 { f64::NEG_INFINITY } else { a.ln() };
                log_max = log_max.max(l);
                l
            })
            .collect();
        Self {
            logs,
            log_max,
            n: values.len(),
        }
    }

    /// `ln |x|_p`; `-∞` for the zero sample.
    pub(crate) fn log_lp(&self, p: f64) -> f64 {
        if self.log_max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let lm = self.log_max;
        // terms below e^-46 relative to the max cannot move the mean at f64
        // resolution given mean >= 1/n
        let mean = pairwise_sum(0, self.n, &|i| {
            let e = p * (self.logs[i] - lm);
            if e < -46.0 {
                0.0
            } else {
                e.exp()
            }
        }) / self.n as f64;
        lm + mean.ln() / p
    }

    pub(crate) fn lp(&self, p: f64) -> f64 {
        let l = self.log_lp(p);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l.exp()
        }
    }
}

/// Pairwise mean and standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(0, values.len(), &|i| values[i]) / n;
    let var = pairwise_sum(0, values.len(), &|i| {
        let d = values[i] - mean;
        d * d
    }) / n;
    (mean, var.sqrt())
}
