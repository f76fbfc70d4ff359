//! Equivalent norms on empirical samples — the moment-sup norm
//! `sup_p |η|_p/ψ(p)` and the Orlicz functional
//! `inf_v v⁻¹(1 + E N(vη))` — plus membership, uniform-continuity and
//! tail-exponent diagnostics.

use serde::{Deserialize, Serialize};

use crate::config::NumericConfig;
use crate::convex::NFunctionSpec;
use crate::moments::{LogAbs, MomentCurve};
use crate::numerics::{classify_trend, golden_min, log_add_exp, log_mean_exp, ols, TrendVerdict};
use crate::psi::PsiSpec;
use crate::sample::Sample;
use crate::{Error, Result};

/// Norm evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub gpsi_norm: f64,
    /// Grid point where the sup of `|η|_p/ψ(p)` is attained.
    pub argmax_p: f64,
    pub luxemburg_norm: Option<f64>,
    pub tail_fit: Option<TailFit>,
}

/// `sup_p |η|_p/ψ(p)` over the curve's grid, evaluated in log space.
pub fn gpsi_norm(curve: &MomentCurve, psi: &PsiSpec) -> Result<NormReport> {
    let mut best = f64::NEG_INFINITY;
    let mut best_p = curve.p_grid[0];
    for (&p, &lp) in curve.p_grid.iter().zip(&curve.lp_values) {
        let log_ratio = if lp == 0.0 {
            f64::NEG_INFINITY
        } else {
            lp.ln() - psi.log_eval(p)?
        };
        if log_ratio > best {
            best = log_ratio;
            best_p = p;
        }
    }
    Ok(NormReport {
        gpsi_norm: if best == f64::NEG_INFINITY { 0.0 } else { best.exp() },
        argmax_p: best_p,
        luxemburg_norm: None,
        tail_fit: None,
    })
}

/// The Orlicz functional `inf_{v>0} v⁻¹(1 + E N(v η))`, located by a
/// bracketed scan over `ln v` followed by golden-section refinement.
/// Evaluation stays in log space so fast-growing N never overflows.
/// Returns 0 for the zero sample (the infimum is approached as `v → ∞`).
pub fn luxemburg_norm(s: &Sample, n_spec: &NFunctionSpec, cfg: &NumericConfig) -> Result<f64> {
    let logs = LogAbs::new(s.values());
    let log_rms = logs.log_lp(2.0);
    if log_rms == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let n = s.len();
    let raw_logs: Vec<f64> = s
        .values()
        .iter()
        .map(|&v| {
            let a = v.abs();
            if a == 0.0 {
                f64::NEG_INFINITY
            } else {
                a.ln()
            }
        })
        .collect();

    // ln objective(w) = ln(1 + E N(e^w η)) - w
    let objective = |w: f64| -> f64 {
        let log_mean = log_mean_exp(n, &|i| {
            let l = raw_logs[i];
            if l == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                n_spec.log_eval_ln(w + l)
            }
        });
        if log_mean == f64::INFINITY {
            return f64::INFINITY;
        }
        log_add_exp(0.0, log_mean) - w
    };

    // scan bracket centred on the sample scale v ~ 1/|η|_2
    let w0 = -log_rms;
    let lo = w0 - cfg.lux_scan_halfwidth;
    let hi = w0 + cfg.lux_scan_halfwidth;
    let m = cfg.lux_scan_points.max(8);
    let step = (hi - lo) / (m - 1) as f64;
    let mut best_i = usize::MAX;
    let mut best = f64::INFINITY;
    for i in 0..m {
        let v = objective(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if best == f64::INFINITY {
        return Err(Error::OutsideSpace);
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = lo + step * (best_i + 1).min(m - 1) as f64;
    let (_, fmin) = golden_min(&objective, a, b, cfg.golden_iters);
    Ok(fmin.min(best).exp())
}

/// Tail trend of `|η|_p/ψ(p)` over the upper half of the curve's grid:
/// `Decreasing` is consistent with membership in the closure of bounded
/// functions, `Plateau` with living at the edge of the space, `Growing`
/// with falling outside it.
pub fn g0_membership(
    curve: &MomentCurve,
    psi: &PsiSpec,
    cfg: &NumericConfig,
) -> Result<(TrendVerdict, Vec<f64>)> {
    let log_ratio = log_ratio_curve(curve, psi)?;
    let verdict = upper_half_trend(&curve.p_grid, &log_ratio, cfg.trend_threshold);
    Ok((verdict, log_ratio.iter().map(|r| r.exp()).collect()))
}

/// Uniform-continuity diagnostic over a family sharing one p-grid: the
/// per-p envelope `sup_a |η_a|_p/ψ(p)` is classified like `g0_membership`
/// and returned.
pub fn ucn_diagnostic(
    curves: &[MomentCurve],
    psi: &PsiSpec,
    cfg: &NumericConfig,
) -> Result<(TrendVerdict, Vec<f64>)> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidInput("empty family".into()))?;
    for c in curves {
        if c.p_grid != first.p_grid {
            return Err(Error::InvalidInput("family must share one p grid".into()));
        }
    }
    let mut env_log = vec![f64::NEG_INFINITY; first.p_grid.len()];
    for c in curves {
        let lr = log_ratio_curve(c, psi)?;
        for (e, v) in env_log.iter_mut().zip(lr) {
            *e = e.max(v);
        }
    }
    let verdict = upper_half_trend(&first.p_grid, &env_log, cfg.trend_threshold);
    Ok((verdict, env_log.iter().map(|r| r.exp()).collect()))
}

fn log_ratio_curve(curve: &MomentCurve, psi: &PsiSpec) -> Result<Vec<f64>> {
    curve
        .p_grid
        .iter()
        .zip(&curve.lp_values)
        .map(|(&p, &lp)| {
            Ok(if lp == 0.0 {
                f64::NEG_INFINITY
            } else {
                lp.ln() - psi.log_eval(p)?
            })
        })
        .collect()
}

fn upper_half_trend(p_grid: &[f64], log_ratio: &[f64], threshold: f64) -> TrendVerdict {
    let half = p_grid.len() / 2;
    let log_p: Vec<f64> = p_grid[half..].iter().map(|p| p.ln()).collect();
    classify_trend(&log_p, &log_ratio[half..], threshold).0
}

/// Tail-fit regression model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailModel {
    /// `log(-log P(|η|>u))` against `log u`; the slope estimates the
    /// Weibull-type index m.
    Weibull,
    /// ... against `log log u`, for `exp(-c (log x)^k)`-type tails.
    LogLog,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    /// `[u_lo, u_hi]` actually used.
    pub u_window: (f64, f64),
    pub stderr: f64,
    pub points: usize,
}

/// Fit the empirical tail exponent over the quantile window
/// `P(|η|>u) ∈ [q_lo, q_hi]` using `cfg.fit_points` log-spaced levels.
pub fn tail_exponent_fit(s: &Sample, model: TailModel, cfg: &NumericConfig) -> Result<TailFit> {
    let mut abs: Vec<f64> = s.values().iter().map(|v| v.abs()).collect();
    abs.sort_unstable_by(f64::total_cmp);
    fit_sorted_tail(&abs, model, cfg)
}

/// Same fit for already-sorted (ascending) absolute values; level-set fits
/// of grid signals use this entry with the grid fraction as the measure.
pub fn fit_sorted_tail(abs_sorted: &[f64], model: TailModel, cfg: &NumericConfig) -> Result<TailFit> {
    let n = abs_sorted.len();
    if n < 16 {
        return Err(Error::InsufficientTail(format!("sample size {n} too small")));
    }
    let (q_lo, q_hi) = cfg.fit_window;
    if !(q_lo > 0.0 && q_hi > q_lo && q_hi < 0.5) {
        return Err(Error::InvalidInput(format!(
            "bad fit window [{q_lo}, {q_hi}]"
        )));
    }
    let k = cfg.fit_points.max(8);
    let lq_lo = q_lo.ln();
    let lq_hi = q_hi.ln();
    let mut us = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for j in 0..k {
        // descending levels: from q_hi down to q_lo, so u is nondecreasing
        let lq = lq_hi + (lq_lo - lq_hi) * j as f64 / (k - 1) as f64;
        let q = lq.exp();
        let rank = (((1.0 - q) * n as f64).floor() as usize).min(n - 1);
        let u = abs_sorted[rank];
        if u <= 0.0 {
            continue;
        }
        us.push(u);
        ys.push((-lq).ln());
    }
    // distinct quantile points only
    let mut xs = Vec::with_capacity(us.len());
    let mut yy = Vec::with_capacity(us.len());
    for i in 0..us.len() {
        if i > 0 && us[i] == us[i - 1] {
            continue;
        }
        let x = match model {
            TailModel::Weibull => us[i].ln(),
            TailModel::LogLog => {
                if us[i] <= 1.0 {
                    return Err(Error::InsufficientTail(
                        "log-log model needs the window above u = 1".into(),
                    ));
                }
                us[i].ln().ln()
            }
        };
        xs.push(x);
        yy.push(ys[i]);
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientTail(format!(
            "only {} distinct quantile points in the window",
            xs.len()
        )));
    }
    let span = us.last().unwrap().ln() - us[0].ln();
    if span < cfg.min_fit_span {
        return Err(Error::InsufficientTail(format!(
            "ln-u span {span:.3} below {:.3}: tail not resolved",
            cfg.min_fit_span
        )));
    }
    let fit = ols(&xs, &yy);
    Ok(TailFit {
        slope: fit.slope,
        intercept: fit.intercept,
        u_window: (us[0], *us.last().unwrap()),
        stderr: fit.slope_stderr,
        points: xs.len(),
    })
}
