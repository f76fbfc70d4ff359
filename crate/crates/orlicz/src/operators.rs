//! Harmonic-analysis experiments on `[0, 1)`: Fourier partial sums, the
//! spectral Hilbert transform, the extremal signals `g_m`, the moment-index
//! transfer, and the optimality / non-convergence experiments they feed.

use serde::{Deserialize, Serialize};

use crate::config::{p_reliability_cap, NumericConfig};
use crate::moments::MomentCurve;
use crate::norms::{fit_sorted_tail, gpsi_norm, TailFit, TailModel};
use crate::numerics::{logspace, ols};
use crate::psi::PsiSpec;
use crate::signal::{bin_frequency, from_spectrum, spectrum, GridSignal};
use crate::{Error, Result};

/// Trigonometric projection onto frequencies `|k| ≤ N`, computed
/// spectrally; exact on band-limited inputs.
pub fn fourier_partial_sum(f: &GridSignal, n_freq: usize) -> Result<GridSignal> {
    let m = f.len();
    if n_freq >= m / 2 {
        return Err(Error::Domain(format!(
            "partial sum order {n_freq} aliases on a grid of {m} points (need N < M/2)"
        )));
    }
    let mut spec = spectrum(f);
    for (i, c) in spec.iter_mut().enumerate() {
        if bin_frequency(i, m).unsigned_abs() as usize > n_freq {
            *c = Default::default();
        }
    }
    Ok(from_spectrum(spec))
}

/// Spectral conjugate function: `c_k ↦ -i·sign(k)·c_k` (DC and Nyquist
/// zeroed so the output is real); the output has mean zero.
pub fn hilbert_transform(f: &GridSignal) -> GridSignal {
    let m = f.len();
    let mut spec = spectrum(f);
    for (i, c) in spec.iter_mut().enumerate() {
        let k = bin_frequency(i, m);
        if k == 0 || i == m / 2 {
            *c = Default::default();
        } else {
            let s = if k > 0 { 1.0 } else { -1.0 };
            // multiply by -i·sign(k)
            *c = rustfft::num_complex::Complex::new(s * c.im, -s * c.re);
        }
    }
    from_spectrum(spec)
}

/// The extremal signal `g_m(x) = |log x|^{1/m}` sampled at cell midpoints
/// (the midpoint grid avoids the x = 0 singularity); its level sets obey
/// `μ{g_m > u} = exp(-u^m)` up to grid resolution.
pub fn gm_signal(m: f64, grid_len: usize) -> Result<GridSignal> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("gm signal needs m > 0, got {m}")));
    }
    GridSignal::from_fn(grid_len, |x| x.ln().abs().powf(1.0 / m))
}

/// Growth fit of a sup-over-N operator-norm ratio against `p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Fitted moment-growth exponent of the ratio curve.
    pub a: f64,
    /// Transfer parameters of the bound (inputs; both 1 for partial sums).
    pub b: f64,
    pub d: f64,
    /// Single constant with `sup_N |S_N f|_p ≤ C·p^a·|f|_p` on the grid —
    /// reported against the linear bound, i.e. `max_p ratio(p)/p`.
    pub c: f64,
    /// Per-p log-residuals of the power-law fit.
    pub residuals: Vec<f64>,
    /// The ratio curve `sup_N |S_N f|_p / |f|_p` per grid point.
    pub ratio: Vec<f64>,
}

/// Compute `sup_{N ∈ N_set} |S_N f|_p / |f|_p` on `p_grid` and fit its
/// log-log slope.
pub fn riesz_growth_fit(f: &GridSignal, p_grid: &[f64], n_set: &[usize]) -> Result<GrowthFit> {
    if n_set.is_empty() {
        return Err(Error::InvalidInput("empty N set".into()));
    }
    let m = f.len();
    let base = MomentCurve::from_values(f.values(), p_grid, m);
    if base.lp_values.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidInput("degenerate (zero) signal".into()));
    }
    let mut ratio = vec![0.0f64; p_grid.len()];
    for &n in n_set {
        let sn = fourier_partial_sum(f, n)?;
        let curve = MomentCurve::from_values(sn.values(), p_grid, m);
        for (r, (num, den)) in ratio
            .iter_mut()
            .zip(curve.lp_values.iter().zip(&base.lp_values))
        {
            *r = r.max(num / den);
        }
    }
    let log_p: Vec<f64> = p_grid.iter().map(|p| p.ln()).collect();
    let log_r: Vec<f64> = ratio.iter().map(|r| r.ln()).collect();
    let fit = ols(&log_p, &log_r);
    let residuals = log_p
        .iter()
        .zip(&log_r)
        .map(|(x, y)| y - fit.intercept - fit.slope * x)
        .collect();
    let c = ratio
        .iter()
        .zip(p_grid)
        .map(|(r, p)| r / p)
        .fold(0.0f64, f64::max);
    Ok(GrowthFit {
        a: fit.slope,
        b: 1.0,
        d: 1.0,
        c,
        residuals,
        ratio,
    })
}

/// Norm-index transfer: a bound `|Q f|_p ≤ C p^a |f|_{C p^b}^d` carries
/// `G_m` boundedness into `G_n` with `n = m/(a·m + b·d)`.
pub fn transfer_index(m: f64, a: f64, b: f64, d: f64) -> Result<f64> {
    if !(m > 0.0 && a >= 0.0 && b > 0.0 && d > 0.0) {
        return Err(Error::Domain(format!(
            "transfer index needs m > 0, a ≥ 0, b > 0, d > 0 (got m={m}, a={a}, b={b}, d={d})"
        )));
    }
    let denom = a * m + b * d;
    if !(denom > 0.0) {
        return Err(Error::Domain("transfer denominator must be positive".into()));
    }
    Ok(m / denom)
}

/// Result of the conjugate-function optimality experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// Band of `|H[g_m](x)| / (|log x|^{(m+1)/m} + 1)` over the window
    /// `x ∈ [10/M, 1e-3]`.
    pub ratio_band: (f64, f64),
    /// Fitted level-set tail exponent of `|H[g_m]|` at resolution `M`.
    pub tail_slope: f64,
    /// Same fit at `2M`.
    pub tail_slope_refined: f64,
    pub tail_fit: TailFit,
    /// False when refinement moves the slope by more than 20%.
    pub resolved: bool,
}

/// Optimality experiment: transform `g_m`, report the two-sided growth
/// band and the fitted level-set exponent (theory: `m/(m+1)`), with an
/// `M → 2M` stability check.
pub fn lemma1_experiment(m: f64, grid_len: usize, cfg: &NumericConfig) -> Result<Lemma1Report> {
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("optimality experiment needs m ≥ 1, got {m}")));
    }
    let run = |len: usize| -> Result<(f64, TailFit, (f64, f64))> {
        let g = gm_signal(m, len)?;
        let h = hilbert_transform(&g);
        let x_lo = 10.0 / len as f64;
        let mut band = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &v) in h.values().iter().enumerate() {
            let x = h.x(i);
            if x < x_lo || x > 1e-3 {
                continue;
            }
            let denom = x.ln().abs().powf((m + 1.0) / m) + 1.0;
            let r = v.abs() / denom;
            band.0 = band.0.min(r);
            band.1 = band.1.max(r);
        }
        let mut abs: Vec<f64> = h.values().iter().map(|v| v.abs()).collect();
        abs.sort_unstable_by(f64::total_cmp);
        let fit = fit_sorted_tail(&abs, TailModel::Weibull, cfg)?;
        Ok((fit.slope, fit, band))
    };
    let (slope, fit, band) = run(grid_len)?;
    let (slope2, _, _) = run(grid_len * 2)?;
    let resolved = (slope2 - slope).abs() <= 0.2 * slope.abs();
    Ok(Lemma1Report {
        ratio_band: band,
        tail_slope: slope,
        tail_slope_refined: slope2,
        tail_fit: fit,
        resolved,
    })
}

/// One point of the non-convergence curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub n_freq: usize,
    /// Empirical `G(ψ_{m,0})` norm of `S_N[g_m] - g_m`.
    pub gpsi_residual: f64,
    pub l2_residual: f64,
}

/// The non-convergence experiment: the moment-sup norm of the partial-sum
/// residual of `g_m` per `N`, next to the (vanishing) `L²` residual.
pub fn nonconvergence_experiment(
    m: f64,
    grid_len: usize,
    n_set: &[usize],
) -> Result<Vec<ResidualPoint>> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("needs m > 0, got {m}")));
    }
    let g = gm_signal(m, grid_len)?;
    let psi = PsiSpec::mr(m, 0.0)?;
    let p_grid = logspace(2.0, p_reliability_cap(grid_len), 48);
    let mut out = Vec::with_capacity(n_set.len());
    for &n in n_set {
        let sn = fourier_partial_sum(&g, n)?;
        let resid: Vec<f64> = sn
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a - b)
            .collect();
        let l2 = GridSignal::new(resid.clone())?.l2();
        let curve = MomentCurve::from_values(&resid, &p_grid, grid_len);
        let rep = gpsi_norm(&curve, &psi)?;
        out.push(ResidualPoint {
            n_freq: n,
            gpsi_residual: rep.gpsi_norm,
            l2_residual: l2,
        });
    }
    Ok(out)
}
