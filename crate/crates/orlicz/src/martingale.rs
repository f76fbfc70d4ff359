//! Martingale simulators (simple Rademacher series, the bilinear double
//! product, multi-index Y-series), the `R(δ,p,ψ)` bound, doubling-class
//! checks and the convergence/divergence diagnostics built on them.

use serde::{Deserialize, Serialize};

use crate::config::{p_reliability_cap, NumericConfig};
use crate::convex::NFunctionSpec;
use crate::generators::RademacherSeriesSpec;
use crate::moments::MomentCurve;
use crate::norms::gpsi_norm;
use crate::numerics::{golden_min, logspace, pairwise_sum};
use crate::psi::{essential_order, OrderVerdict, PsiSpec, SlowlyVarying};
use crate::rng::{CounterRng, SeedSpec};
use crate::{Error, Result};

/// The three martingale constructions used by the convergence experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MartingaleKind {
    /// `S_n = Σ_{k=2}^n k^{-B} L₀(k) ε(k)`.
    Simple { b: f64, l0: SlowlyVarying },
    /// `S_n = Σ_{i≠j≤n} a_i a_j ε(i,1) ε(j,2)`, `a_i = i^{-B} L₀(i)`,
    /// evaluated through the product expansion
    /// `(Σ a_i ε(i,1))(Σ a_j ε(j,2)) - Σ a_i² ε(i,1)ε(i,2)`.
    DoubleProduct { b: f64, l0: SlowlyVarying },
    /// `Y_n = Σ_d d^{-dγ} Y(d,n)` with `Y(d,n)` the sum over ordered
    /// d-tuples of distinct indices `k_i ≤ n` of `Π k_i^{-B} ε(k_i,i,d)`.
    YSeries { b: f64, gamma: f64, d_max: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MartingaleSpec {
    pub kind: MartingaleKind,
    /// Horizon for the recorded path.
    pub n_max: usize,
    /// Truncation index at which the limit variable is evaluated.
    pub k_trunc: usize,
}

impl MartingaleSpec {
    pub fn new(kind: MartingaleKind, n_max: usize, k_trunc: usize) -> Result<Self> {
        let b = match &kind {
            MartingaleKind::Simple { b, .. } | MartingaleKind::DoubleProduct { b, .. } => *b,
            MartingaleKind::YSeries { b, gamma, d_max } => {
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidInput(format!("gamma must be > 0, got {gamma}")));
                }
                if *d_max < 1 {
                    return Err(Error::InvalidInput("d_max must be ≥ 1".into()));
                }
                if *d_max > 8 {
                    return Err(Error::InvalidInput("d_max above 8 is not supported".into()));
                }
                *b
            }
        };
        if !(b > 0.5 && b < 1.0) {
            return Err(Error::InvalidInput(format!("B must lie in (0.5, 1), got {b}")));
        }
        if n_max < 2 {
            return Err(Error::InvalidInput("n_max must be ≥ 2".into()));
        }
        if k_trunc < n_max {
            return Err(Error::InvalidInput("k_trunc must be ≥ n_max".into()));
        }
        Ok(Self { kind, n_max, k_trunc })
    }

    /// Variance lost to the truncation of the limit variable (the known
    /// bias the diagnostics correct for). Zero for the Y-series, where no
    /// closed form is available.
    pub fn truncation_tail_variance(&self) -> f64 {
        match &self.kind {
            MartingaleKind::Simple { b, l0 } => {
                // Σ_{k>K} k^{-2B} L₀²(k)
                RademacherSeriesSpec {
                    b: *b,
                    l: l0.clone(),
                    k_trunc: self.k_trunc,
                }
                .truncation_tail_variance()
            }
            MartingaleKind::DoubleProduct { b, l0 } => {
                // Var S⁽²⁾_n = (Σ_{i≤n} a_i²)² - Σ_{i≤n} a_i⁴
                let sum2_k = Self::power_sum(*b, l0, self.k_trunc, 2.0);
                let sum4_k = Self::power_sum(*b, l0, self.k_trunc, 4.0);
                let tail2 = RademacherSeriesSpec {
                    b: *b,
                    l: l0.clone(),
                    k_trunc: self.k_trunc,
                }
                .truncation_tail_variance()
                    + {
                        // that tail starts at k=2; add back k=1 handling:
                        // coefficients here start at i=1, but the tail is
                        // over k > K either way
                        0.0
                    };
                let sum2_inf = sum2_k + tail2;
                // Σ a_i⁴ converges fast; extend numerically
                let tail4: f64 = ((self.k_trunc + 1)..(self.k_trunc * 10).max(self.k_trunc + 2))
                    .map(|k| {
                        let a = (k as f64).powf(-*b) * l0.eval(k as f64);
                        a.powi(4)
                    })
                    .sum();
                let var_inf = sum2_inf * sum2_inf - (sum4_k + tail4);
                let var_k = sum2_k * sum2_k - sum4_k;
                (var_inf - var_k).max(0.0)
            }
            MartingaleKind::YSeries { .. } => 0.0,
        }
    }

    fn power_sum(b: f64, l0: &SlowlyVarying, upto: usize, pow: f64) -> f64 {
        pairwise_sum(1, upto + 1, &|k| {
            let a = (k as f64).powf(-b) * l0.eval(k as f64);
            a.powf(pow)
        })
    }
}

/// A single realized path with its full prefix `S_1..S_{n_max}`.
#[derive(Debug, Clone)]
pub struct MartingalePath {
    pub values: Vec<f64>,
    pub limit_value: f64,
    pub path_index: usize,
}

/// Ensemble recorded only at checkpoints (memory-safe for long horizons).
#[derive(Debug, Clone)]
pub struct CheckpointEnsemble {
    pub spec: MartingaleSpec,
    pub seed: SeedSpec,
    pub checkpoints: Vec<usize>,
    /// `values[c][j]` = S at `checkpoints[c]` of path `j`.
    pub values: Vec<Vec<f64>>,
    /// Limit variable per path, evaluated at `k_trunc`.
    pub limits: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulateResult {
    pub paths: Vec<MartingalePath>,
    /// Recorded horizon; `n_max` unless the element budget clipped it.
    pub horizon: usize,
    pub partial: bool,
}

/// Sequential sign stream over one counter lane.
struct SignStream {
    rng: CounterRng,
    word: u64,
    next_word: u64,
    used: u32,
}

impl SignStream {
    fn new(seed: SeedSpec) -> Self {
        let rng = CounterRng::new(seed);
        Self {
            rng,
            word: rng.word(0),
            next_word: 1,
            used: 0,
        }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        if self.used == 64 {
            self.word = self.rng.word(self.next_word);
            self.next_word += 1;
            self.used = 0;
        }
        let bit = self.word & 1;
        self.word >>= 1;
        self.used += 1;
        if bit == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// `±coeff` with the next sign, branch-free.
    #[inline]
    fn signed(&mut self, coeff: f64) -> f64 {
        if self.used == 64 {
            self.word = self.rng.word(self.next_word);
            self.next_word += 1;
            self.used = 0;
        }
        let bit = self.word & 1;
        self.word >>= 1;
        self.used += 1;
        f64::from_bits(coeff.to_bits() ^ (bit << 63))
    }
}

/// Walk one path, invoking `record(n, S_n)` for every `n ≤ upto` and
/// returning the limit value at `k_trunc`.
fn walk_path(
    spec: &MartingaleSpec,
    path: usize,
    seed: SeedSpec,
    upto: usize,
    record: &mut impl FnMut(usize, f64),
) -> f64 {
    let k_trunc = spec.k_trunc;
    match &spec.kind {
        MartingaleKind::Simple { b, l0 } => {
            let mut signs = SignStream::new(seed.substream(path as u64));
            let mut s = 0.0f64;
            if upto >= 1 {
                record(1, 0.0);
            }
            for k in 2..=k_trunc {
                let a = (k as f64).powf(-b) * l0.eval(k as f64);
                s += signs.signed(a);
                if k <= upto {
                    record(k, s);
                }
            }
            s
        }
        MartingaleKind::DoubleProduct { b, l0 } => {
            let mut s1 = SignStream::new(seed.substream(2 * path as u64));
            let mut s2 = SignStream::new(seed.substream(2 * path as u64 + 1));
            let (mut acc1, mut acc2, mut diag) = (0.0f64, 0.0f64, 0.0f64);
            let mut s = 0.0;
            for i in 1..=k_trunc {
                let a = (i as f64).powf(-b) * l0.eval(i as f64);
                let e1 = s1.next();
                let e2 = s2.next();
                acc1 += a * e1;
                acc2 += a * e2;
                diag += a * a * e1 * e2;
                s = acc1 * acc2 - diag;
                if i <= upto {
                    record(i, s);
                }
            }
            s
        }
        MartingaleKind::YSeries { b, gamma, d_max } => {
            let d_max = *d_max;
            let partitions: Vec<Vec<Vec<u32>>> = (1..=d_max).map(set_partitions).collect();
            let weights: Vec<f64> = (1..=d_max)
                .map(|d| (d as f64).powf(-(d as f64) * gamma))
                .collect();
            // one sign stream per (d, position)
            let total_positions: u64 = (1..=d_max as u64).sum();
            let mut streams: Vec<Vec<SignStream>> = Vec::with_capacity(d_max);
            let mut off = 0u64;
            for d in 1..=d_max {
                streams.push(
                    (0..d)
                        .map(|i| {
                            SignStream::new(
                                seed.substream(path as u64 * total_positions + off + i as u64),
                            )
                        })
                        .collect(),
                );
                off += d as u64;
            }
            // running subset sums U_S per d (index = bitmask - 1)
            let mut subset_sums: Vec<Vec<f64>> =
                (1..=d_max).map(|d| vec![0.0; (1usize << d) - 1]).collect();
            let mut eps = vec![0.0f64; d_max];
            let mut prod = vec![0.0f64; 1usize << d_max];
            let y = |subset_sums: &Vec<Vec<f64>>| -> f64 {
                let mut total = 0.0;
                for d in 1..=d_max {
                    let u = &subset_sums[d - 1];
                    let mut yd = 0.0;
                    for part in &partitions[d - 1] {
                        let mut term = 1.0;
                        for block in part {
                            let sz = block.count_ones();
                            let sign = if sz % 2 == 0 { -1.0 } else { 1.0 };
                            term *= sign * factorial(sz - 1) * u[(*block as usize) - 1];
                        }
                        yd += term;
                    }
                    total += weights[d - 1] * yd;
                }
                total
            };
            let mut last = 0.0;
            for k in 1..=k_trunc {
                let c = (k as f64).powf(-b);
                for d in 1..=d_max {
                    for i in 0..d {
                        eps[i] = streams[d - 1][i].next();
                    }
                    // prod[mask] = Π_{i in mask} (c · ε_i)
                    prod[0] = 1.0;
                    for mask in 1..(1usize << d) {
                        let low = mask.trailing_zeros() as usize;
                        prod[mask] = prod[mask & (mask - 1)] * c * eps[low];
                    }
                    let u = &mut subset_sums[d - 1];
                    for mask in 1..(1usize << d) {
                        u[mask - 1] += prod[mask];
                    }
                }
                if k <= upto || k == k_trunc {
                    last = y(&subset_sums);
                    if k <= upto {
                        record(k, last);
                    }
                }
            }
            last
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// All set partitions of `{0, .., d-1}`, each block as a bitmask.
fn set_partitions(d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    fn rec(elem: usize, d: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if elem == d {
            out.push(current.clone());
            return;
        }
        for i in 0..current.len() {
            current[i] |= 1 << elem;
            rec(elem + 1, d, current, out);
            current[i] &= !(1 << elem);
        }
        current.push(1 << elem);
        rec(elem + 1, d, current, out);
        current.pop();
    }
    rec(0, d, &mut current, &mut out);
    out
}

/// Simulate full paths. If `budget_elements` is exceeded the recorded
/// horizon is clipped (the walk itself still reaches `k_trunc` for the
/// limit) and the result is flagged partial.
pub fn simulate(
    spec: &MartingaleSpec,
    n_paths: usize,
    seed: SeedSpec,
    budget_elements: Option<usize>,
) -> Result<SimulateResult> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    let mut horizon = spec.n_max;
    let mut partial = false;
    if let Some(budget) = budget_elements {
        let fit = (budget / n_paths).max(2);
        if fit < horizon {
            horizon = fit;
            partial = true;
        }
    }
    let mut paths = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut values = vec![0.0; horizon];
        let limit_value = walk_path(spec, p, seed, horizon, &mut |n, s| {
            values[n - 1] = s;
        });
        paths.push(MartingalePath {
            values,
            limit_value,
            path_index: p,
        });
    }
    Ok(SimulateResult {
        paths,
        horizon,
        partial,
    })
}

/// Simulate, storing values only at the given checkpoints.
pub fn simulate_ensemble(
    spec: &MartingaleSpec,
    n_paths: usize,
    seed: SeedSpec,
    checkpoints: &[usize],
) -> Result<CheckpointEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    if checkpoints.is_empty()
        || checkpoints.windows(2).any(|w| w[1] <= w[0])
        || checkpoints[0] < 2
        || *checkpoints.last().unwrap() > spec.n_max
    {
        return Err(Error::InvalidInput(
            "checkpoints must be strictly increasing within [2, n_max]".into(),
        ));
    }
    let mut values = vec![vec![0.0f64; n_paths]; checkpoints.len()];
    let mut limits = vec![0.0f64; n_paths];
    let upto = *checkpoints.last().unwrap();
    for p in 0..n_paths {
        let mut next = 0usize;
        limits[p] = walk_path(spec, p, seed, upto, &mut |n, s| {
            if next < checkpoints.len() && n == checkpoints[next] {
                values[next][p] = s;
                next += 1;
            }
        });
    }
    Ok(CheckpointEnsemble {
        spec: spec.clone(),
        seed,
        checkpoints: checkpoints.to_vec(),
        values,
        limits,
    })
}

/// `R(δ, p, ψ)` minimization result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RFunctionResult {
    pub value: f64,
    pub argmin_beta: f64,
}

/// `R(δ,p,ψ) = inf_{β>1} δ^{2/(pβ+2)} ψ^{pβ/(pβ+2)}(αp)`, `α = β/(β-1)`,
/// located by a log-grid scan over β followed by golden-section
/// refinement.
pub fn r_function(
    delta: f64,
    p: f64,
    psi: &PsiSpec,
    cfg: &NumericConfig,
) -> Result<RFunctionResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0,1), got {delta}")));
    }
    let (log_val, beta) = r_log(delta.ln(), p, psi, 0.0, cfg)?;
    Ok(RFunctionResult {
        value: log_val.exp(),
        argmin_beta: beta,
    })
}

/// Log-space engine behind `r_function`; `ln_scale` multiplies ψ by a
/// constant (the `K·ψ` of the martingale bound). The formula itself is
/// well-defined for any `δ > 0`, which the bound evaluation relies on at
/// early checkpoints where `γ_n ≥ 1`.
fn r_log(
    ln_delta: f64,
    p: f64,
    psi: &PsiSpec,
    ln_scale: f64,
    cfg: &NumericConfig,
) -> Result<(f64, f64)> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("R needs p ≥ 2, got {p}")));
    }
    let objective = |beta: f64| -> Option<f64> {
        if !(beta > 1.0) {
            return None;
        }
        let alpha = beta / (beta - 1.0);
        let pb = p * beta;
        let log_psi = psi.log_eval(alpha * p).ok()?;
        Some((2.0 * ln_delta + pb * (ln_scale + log_psi)) / (pb + 2.0))
    };
    let beta_lo = 1.0 + 1e-3;
    let grid = logspace(beta_lo, cfg.beta_max, cfg.beta_scan_points.max(16));
    let mut best = f64::INFINITY;
    let mut best_i = usize::MAX;
    for (i, &beta) in grid.iter().enumerate() {
        if let Some(v) = objective(beta) {
            if v < best {
                best = v;
                best_i = i;
            }
        }
    }
    if best_i == usize::MAX {
        return Err(Error::Domain(
            "ψ not evaluable anywhere in the β scan range".into(),
        ));
    }
    let lo = grid[best_i.saturating_sub(1)].ln();
    let hi = grid[(best_i + 1).min(grid.len() - 1)].ln();
    let (lb, fb) = golden_min(
        &|lnb: f64| objective(lnb.exp()).unwrap_or(f64::INFINITY),
        lo,
        hi,
        cfg.golden_iters,
    );
    if fb < best {
        Ok((fb, lb.exp()))
    } else {
        Ok((best, grid[best_i]))
    }
}

/// Closed-form β = 2 point of the minimization:
/// `δ^{1/(p+1)} ψ^{p/(p+1)}(2p)`.
pub fn corollary1_bound(delta: f64, p: f64, psi: &PsiSpec) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0,1], got {delta}")));
    }
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("needs p ≥ 2, got {p}")));
    }
    Ok((delta.ln() / (p + 1.0) + p / (p + 1.0) * psi.log_eval(2.0 * p)?).exp())
}

/// The martingale convergence bound
/// `5√2 · sup_p R(γ_n, p, K·ψ)/ν(p)` (`10√2` for the maximal variant).
pub fn theorem9_bound(
    gamma_n: f64,
    psi: &PsiSpec,
    nu: &PsiSpec,
    k_norm: f64,
    p_grid: &[f64],
    maximal: bool,
    cfg: &NumericConfig,
) -> Result<f64> {
    if gamma_n < 0.0 {
        return Err(Error::Domain("γ must be nonnegative".into()));
    }
    if gamma_n == 0.0 {
        return Ok(0.0);
    }
    if !(k_norm > 0.0) {
        return Err(Error::Domain("K must be positive".into()));
    }
    let factor = if maximal { 10.0 } else { 5.0 } * std::f64::consts::SQRT_2;
    let mut best = f64::NEG_INFINITY;
    for &p in p_grid {
        let (log_r, _) = r_log(gamma_n.ln(), p, psi, k_norm.ln(), cfg)?;
        best = best.max(log_r - nu.log_eval(p)?);
    }
    Ok(factor * best.exp())
}

/// Doubling-class verdicts with grid witnesses.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WitnessVerdict {
    Holds { u0: f64, witness: f64 },
    Fails,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaClassReport {
    pub delta2: WitnessVerdict,
    pub nabla2: WitnessVerdict,
}

/// Ratio beyond which a monotonically growing `N(2u)/N(u)` is declared a
/// Δ₂ failure (exponential N-functions diverge through this quickly).
const DELTA2_DIVERGENCE: f64 = 1e6;

/// Search the u-grid for Δ₂ (`N(2u) ≤ β N(u)`) and ∇₂
/// (`N(u) ≤ N(l·u)/(2l)`) witnesses.
pub fn delta2_nabla2_check(n_spec: &NFunctionSpec, u_grid: &[f64]) -> Result<DeltaClassReport> {
    if u_grid.len() < 8 || u_grid.windows(2).any(|w| w[1] <= w[0]) || u_grid[0] <= 0.0 {
        return Err(Error::InvalidGrid(
            "u grid must be positive, increasing, with ≥ 8 points".into(),
        ));
    }
    // Δ₂: log N(2u) - log N(u)
    let mut lr: Vec<f64> = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let v = n_spec.log_eval_ln((2.0 * u).ln()) - n_spec.log_eval_ln(u.ln());
        if !v.is_finite() {
            break; // window of the generator ended
        }
        lr.push(v);
    }
    let delta2 = if lr.len() < 4 {
        WitnessVerdict::Undecided
    } else {
        let top = &lr[lr.len() / 2..];
        let increasing = top.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let max = lr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if increasing && *lr.last().unwrap() > DELTA2_DIVERGENCE.ln() {
            WitnessVerdict::Fails
        } else if max <= DELTA2_DIVERGENCE.ln() {
            WitnessVerdict::Holds {
                u0: u_grid[0],
                witness: max.exp(),
            }
        } else {
            WitnessVerdict::Undecided
        }
    };

    // ∇₂: smallest l in a small grid with N(u) ≤ N(lu)/(2l) from some u₀ on
    let mut nabla2 = WitnessVerdict::Undecided;
    'outer: for &l in &[1.5f64, 2.0, 4.0, 8.0] {
        let needed = (2.0 * l).ln();
        let mut ok_from: Option<usize> = None;
        for (i, &u) in u_grid.iter().enumerate() {
            let v = n_spec.log_eval_ln((l * u).ln()) - n_spec.log_eval_ln(u.ln());
            if !v.is_finite() {
                break;
            }
            if v >= needed - 1e-12 {
                if ok_from.is_none() {
                    ok_from = Some(i);
                }
            } else {
                ok_from = None;
            }
        }
        if let Some(i0) = ok_from {
            if u_grid.len() - i0 >= 2 {
                nabla2 = WitnessVerdict::Holds {
                    u0: u_grid[i0],
                    witness: l,
                };
                break 'outer;
            }
        }
    }
    Ok(DeltaClassReport { delta2, nabla2 })
}

/// Per-checkpoint facts of the convergence diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointReport {
    pub n: usize,
    /// Bias-corrected `|S_n - S|₂` across paths.
    pub gamma_n: f64,
    /// Empirical `‖S_n - S‖G(ν)`.
    pub empirical_norm: f64,
    /// Theorem-9 bound at this checkpoint.
    pub bound: f64,
    /// Empirical `‖S_n‖G(ψ)` at this checkpoint.
    pub sn_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub checkpoints: Vec<CheckpointReport>,
    /// `sup_n ‖S_n‖G(ψ)` over the checkpoints (safety factor 1).
    pub k_estimate: f64,
    /// `essential_order(ψ, ν)` for comparison with the iff prediction.
    pub order: OrderVerdict,
    /// Set when fewer than 10³ paths back the moments.
    pub wide_error: bool,
    /// Truncation bias (variance) added back into `γ_n`.
    pub truncation_bias_var: f64,
}

/// Cross-path convergence diagnostic: per checkpoint the residual moments
/// give `γ_n` and the empirical `G(ν)` norm, next to the theorem-9 bound
/// evaluated with the empirical `K = sup_n ‖S_n‖G(ψ)`.
pub fn convergence_diagnostic(
    ens: &CheckpointEnsemble,
    psi: &PsiSpec,
    nu: &PsiSpec,
    cfg: &NumericConfig,
) -> Result<ConvergenceReport> {
    let n_paths = ens.limits.len();
    let p_grid = logspace(2.0, p_reliability_cap(n_paths), 40);
    let bias_var = ens.spec.truncation_tail_variance();

    let mut sn_norms = Vec::with_capacity(ens.checkpoints.len());
    let mut residual_curves = Vec::with_capacity(ens.checkpoints.len());
    let mut gammas = Vec::with_capacity(ens.checkpoints.len());
    for (ci, _) in ens.checkpoints.iter().enumerate() {
        let sn = &ens.values[ci];
        let sn_curve = MomentCurve::from_values(sn, &p_grid, n_paths);
        sn_norms.push(gpsi_norm(&sn_curve, psi)?.gpsi_norm);

        let resid: Vec<f64> = sn.iter().zip(&ens.limits).map(|(a, b)| a - b).collect();
        let var = pairwise_sum(0, n_paths, &|i| resid[i] * resid[i]) / n_paths as f64;
        gammas.push((var + bias_var).sqrt());
        residual_curves.push(MomentCurve::from_values(&resid, &p_grid, n_paths));
    }
    let k_estimate = sn_norms.iter().cloned().fold(0.0f64, f64::max);

    let mut rows = Vec::with_capacity(ens.checkpoints.len());
    for (ci, &n) in ens.checkpoints.iter().enumerate() {
        let empirical = gpsi_norm(&residual_curves[ci], nu)?.gpsi_norm;
        let bound = theorem9_bound(gammas[ci], psi, nu, k_estimate, &p_grid, false, cfg)?;
        rows.push(CheckpointReport {
            n,
            gamma_n: gammas[ci],
            empirical_norm: empirical,
            bound,
            sn_norm: sn_norms[ci],
        });
    }
    let order_grid = logspace(2.0, cfg.p_window.1, 64);
    let (order, _) = essential_order(psi, nu, &order_grid, cfg.trend_threshold, cfg.comparable_band)?;
    Ok(ConvergenceReport {
        checkpoints: rows,
        k_estimate,
        order,
        wide_error: n_paths < 1000,
        truncation_bias_var: bias_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tabulate;
    use crate::numerics::linspace;

    fn seed() -> SeedSpec {
        SeedSpec::new(777, 0)
    }

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    fn simple_spec(n_max: usize, k_trunc: usize) -> MartingaleSpec {
        MartingaleSpec::new(
            MartingaleKind::Simple {
                b: 0.75,
                l0: SlowlyVarying::ONE,
            },
            n_max,
            k_trunc,
        )
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MartingaleSpec::new(
            MartingaleKind::Simple { b: 0.4, l0: SlowlyVarying::ONE },
            16,
            16
        )
        .is_err());
        assert!(MartingaleSpec::new(
            MartingaleKind::Simple { b: 0.75, l0: SlowlyVarying::ONE },
            16,
            8
        )
        .is_err());
        assert!(MartingaleSpec::new(
            MartingaleKind::YSeries { b: 0.75, gamma: 0.0, d_max: 2 },
            16,
            16
        )
        .is_err());
    }

    #[test]
    fn simple_variance_oracle() {
        let spec = simple_spec(512, 512);
        let n_paths = 20_000;
        let res = simulate(&spec, n_paths, seed(), None).unwrap();
        for n in [32usize, 512] {
            let exact: f64 = (2..=n).map(|k| (k as f64).powf(-1.5)).sum();
            let mean: f64 = res.paths.iter().map(|p| p.values[n - 1]).sum::<f64>() / n_paths as f64;
            let var: f64 = res
                .paths
                .iter()
                .map(|p| (p.values[n - 1] - mean) * (p.values[n - 1] - mean))
                .sum::<f64>()
                / n_paths as f64;
            assert!(mean.abs() < 3.0 * var.sqrt() / (n_paths as f64).sqrt() * 1.5);
            assert!((var - exact).abs() / exact < 0.05, "n={n}: {var} vs {exact}");
        }
    }

    #[test]
    fn simple_martingale_property_bucketed() {
        // E[S_n - S_{n-1} | S_{n-1} bucket] = 0 within 3 sd
        let spec = simple_spec(32, 32);
        let res = simulate(&spec, 40_000, seed(), None).unwrap();
        let n = 32;
        let a_n = (n as f64).powf(-0.75);
        let mut pairs: Vec<(f64, f64)> = res
            .paths
            .iter()
            .map(|p| (p.values[n - 2], p.values[n - 1] - p.values[n - 2]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for bucket in pairs.chunks(5000) {
            let m = bucket.iter().map(|x| x.1).sum::<f64>() / bucket.len() as f64;
            let tol = 3.0 * a_n / (bucket.len() as f64).sqrt();
            assert!(m.abs() < tol, "bucket mean {m} vs {tol}");
        }
    }

    #[test]
    fn double_product_moment_oracle() {
        let spec = MartingaleSpec::new(
            MartingaleKind::DoubleProduct {
                b: 0.75,
                l0: SlowlyVarying::ONE,
            },
            64,
            64,
        )
        .unwrap();
        let n_paths = 40_000;
        let res = simulate(&spec, n_paths, seed(), None).unwrap();
        let n = 64;
        let sum2: f64 = (1..=n).map(|i| (i as f64).powf(-1.5)).sum();
        let sum4: f64 = (1..=n).map(|i| (i as f64).powf(-3.0)).sum();
        let exact = sum2 * sum2 - sum4;
        let mean: f64 = res.paths.iter().map(|p| p.values[n - 1]).sum::<f64>() / n_paths as f64;
        let m2: f64 = res
            .paths
            .iter()
            .map(|p| p.values[n - 1] * p.values[n - 1])
            .sum::<f64>()
            / n_paths as f64;
        let se = (m2 / n_paths as f64).sqrt();
        assert!(mean.abs() < 4.0 * (m2.sqrt() / (n_paths as f64).sqrt()));
        assert!((m2 - exact).abs() < 6.0 * se + 0.02 * exact, "{m2} vs {exact}");
    }

    #[test]
    fn double_product_matches_direct_expansion() {
        // white-box: rebuild the same sign sequences and evaluate the
        // double sum directly
        let spec = MartingaleSpec::new(
            MartingaleKind::DoubleProduct {
                b: 0.6,
                l0: SlowlyVarying::ONE,
            },
            12,
            12,
        )
        .unwrap();
        let path = 3usize;
        let res = simulate(&spec, 5, seed(), None).unwrap();
        let mut s1 = SignStream::new(seed().substream(2 * path as u64));
        let mut s2 = SignStream::new(seed().substream(2 * path as u64 + 1));
        let n = 12;
        let e1: Vec<f64> = (0..n).map(|_| s1.next()).collect();
        let e2: Vec<f64> = (0..n).map(|_| s2.next()).collect();
        let a = |i: usize| ((i + 1) as f64).powf(-0.6);
        let mut direct = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    direct += a(i) * a(j) * e1[i] * e2[j];
                }
            }
        }
        let got = res.paths[path].values[n - 1];
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }

    #[test]
    fn y_series_matches_brute_force() {
        let d_max = 3usize;
        let spec = MartingaleSpec::new(
            MartingaleKind::YSeries {
                b: 0.75,
                gamma: 1.0,
                d_max,
            },
            8,
            8,
        )
        .unwrap();
        let path = 1usize;
        let res = simulate(&spec, 3, seed(), None).unwrap();

        // rebuild the sign tables ε(k, i, d)
        let total: u64 = (1..=d_max as u64).sum();
        let n = 8usize;
        let mut eps = vec![vec![vec![0.0f64; n]; d_max]; d_max];
        let mut off = 0u64;
        for d in 1..=d_max {
            for i in 0..d {
                let mut st = SignStream::new(seed().substream(path as u64 * total + off + i as u64));
                for k in 0..n {
                    eps[d - 1][i][k] = st.next();
                }
            }
            off += d as u64;
        }
        // brute force over ordered distinct tuples
        let w = |k: usize| ((k + 1) as f64).powf(-0.75);
        let mut direct = 0.0;
        for d in 1..=d_max {
            let cd = (d as f64).powf(-(d as f64));
            let mut yd = 0.0;
            let mut tuple = vec![0usize; d];
            loop {
                if (0..d).all(|i| (0..i).all(|j| tuple[i] != tuple[j])) {
                    let mut term = 1.0;
                    for i in 0..d {
                        term *= w(tuple[i]) * eps[d - 1][i][tuple[i]];
                    }
                    yd += term;
                }
                // odometer over tuples in {0..n}^d
                let mut pos = 0;
                loop {
                    tuple[pos] += 1;
                    if tuple[pos] < n {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                    if pos == d {
                        break;
                    }
                }
                if pos == d {
                    break;
                }
            }
            direct += cd * yd;
        }
        let got = res.paths[path].values[n - 1];
        assert!(
            (got - direct).abs() < 1e-10 * (1.0 + direct.abs()),
            "{got} vs {direct}"
        );
    }

    #[test]
    fn ensemble_matches_full_paths() {
        let spec = simple_spec(256, 400);
        let ckpts = vec![2usize, 16, 256];
        let ens = simulate_ensemble(&spec, 50, seed(), &ckpts).unwrap();
        let full = simulate(&spec, 50, seed(), None).unwrap();
        for (ci, &n) in ckpts.iter().enumerate() {
            for p in 0..50 {
                assert_eq!(ens.values[ci][p], full.paths[p].values[n - 1]);
            }
        }
        for p in 0..50 {
            assert_eq!(ens.limits[p], full.paths[p].limit_value);
        }
    }

    #[test]
    fn budget_clips_horizon() {
        let spec = simple_spec(1024, 1024);
        let res = simulate(&spec, 10, seed(), Some(1000)).unwrap();
        assert!(res.partial);
        assert_eq!(res.horizon, 100);
        assert_eq!(res.paths[0].values.len(), 100);
    }

    #[test]
    fn r_function_brute_force_oracle() {
        let psi = PsiSpec::mr(2.0, 0.0).unwrap();
        for (delta, p) in [(1e-4, 4.0), (1e-2, 2.0), (0.5, 8.0)] {
            let got = r_function(delta, p, &psi, &cfg()).unwrap();
            // dense β scan, 10⁶ points
            let mut best = f64::INFINITY;
            for i in 0..1_000_000 {
                let beta = (1.0 + 1e-3) * ((1e3f64 / (1.0 + 1e-3)).ln() * i as f64 / 999_999.0).exp();
                let alpha = beta / (beta - 1.0);
                let pb = p * beta;
                let v = (2.0 * delta.ln() + pb * psi.log_eval(alpha * p).unwrap()) / (pb + 2.0);
                best = best.min(v);
            }
            let brute = best.exp();
            assert!(
                (got.value - brute).abs() / brute < 1e-6,
                "δ={delta} p={p}: {} vs {brute}",
                got.value
            );
        }
    }

    #[test]
    fn r_function_domain_and_corollary() {
        let psi = PsiSpec::mr(2.0, 0.0).unwrap();
        assert!(r_function(1.5, 4.0, &psi, &cfg()).is_err());
        assert!(r_function(0.5, 1.0, &psi, &cfg()).is_err());

        // r ≤ corollary-1 bound always (β=2 lies in the scanned set)
        for (delta, p) in [(1e-3, 2.0), (0.1, 4.0), (0.9, 16.0)] {
            let r = r_function(delta, p, &psi, &cfg()).unwrap().value;
            let c1 = corollary1_bound(delta, p, &psi).unwrap();
            assert!(r <= c1 * (1.0 + 1e-12), "r={r} c1={c1}");
        }
        // corollary-1 closed forms
        let m1 = PsiSpec::mr(1.0, 0.0).unwrap();
        let v = corollary1_bound((-3.0f64).exp(), 2.0, &m1).unwrap();
        assert!((v - (-1.0f64).exp() * 4.0f64.powf(2.0 / 3.0)).abs() < 1e-12);
        let z = corollary1_bound(1.0, 4.0, &m1).unwrap();
        assert!((z - m1.eval(8.0).unwrap().powf(0.8)).abs() < 1e-12);
    }

    #[test]
    fn r_function_monotone_in_delta_and_psi() {
        let psi = PsiSpec::mr(2.0, 0.0).unwrap();
        let nu = PsiSpec::mr(1.0, 0.0).unwrap(); // pointwise larger on p ≥ 2
        let a = r_function(1e-4, 4.0, &psi, &cfg()).unwrap().value;
        let b = r_function(1e-3, 4.0, &psi, &cfg()).unwrap().value;
        assert!(b >= a);
        let c = r_function(1e-4, 4.0, &nu, &cfg()).unwrap().value;
        assert!(c >= a);
    }

    #[test]
    fn theorem9_bound_edges() {
        let psi = PsiSpec::mr(4.0, 0.0).unwrap();
        let nu = PsiSpec::mr(2.0, 0.0).unwrap();
        let grid = logspace(2.0, 26.0, 16);
        assert_eq!(
            theorem9_bound(0.0, &psi, &nu, 1.0, &grid, false, &cfg()).unwrap(),
            0.0
        );
        let b1 = theorem9_bound(0.01, &psi, &nu, 1.0, &grid, false, &cfg()).unwrap();
        let b2 = theorem9_bound(0.1, &psi, &nu, 1.0, &grid, false, &cfg()).unwrap();
        assert!(b2 >= b1);
        let bm = theorem9_bound(0.01, &psi, &nu, 1.0, &grid, true, &cfg()).unwrap();
        assert!((bm / b1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn delta_nabla_verdicts() {
        // pure quadratic stub: a generator window that never engages
        let w = tabulate(linspace(2.0, 3.0, 32), |z| 2.0 * z).unwrap();
        let nq = crate::convex::n_from_w(&w).unwrap();
        let grid: Vec<f64> = linspace(0.05, 3.0, 64);
        let rep = delta2_nabla2_check(&nq, &grid).unwrap();
        match rep.delta2 {
            WitnessVerdict::Holds { witness, .. } => assert!((witness - 4.0).abs() < 1e-9),
            other => panic!("expected Δ₂ witness, got {other:?}"),
        }

        // N from W(z) = z²: Δ₂ fails (ratio diverges), ∇₂ holds with l = 2
        let w2 = tabulate(linspace(2.0, 60.0, 2048), |z| z * z)
            .unwrap()
            .flag_convex(1e-9)
            .unwrap();
        let n2 = crate::convex::n_from_w(&w2).unwrap();
        let grid = logspace(1.0, (40.0f64).exp(), 128);
        let rep = delta2_nabla2_check(&n2, &grid).unwrap();
        assert!(matches!(rep.delta2, WitnessVerdict::Fails));
        match rep.nabla2 {
            WitnessVerdict::Holds { witness, .. } => assert!(witness <= 2.0),
            other => panic!("expected ∇₂ witness, got {other:?}"),
        }
    }

    #[test]
    fn doob_maximal_consistency() {
        // ‖max_{l≤n}|S_l|‖G(ψ) ≤ 2 ‖S_n‖G(ψ) (1 + ε)
        let spec = simple_spec(512, 512);
        let n_paths = 4000;
        let res = simulate(&spec, n_paths, seed(), None).unwrap();
        let n = 512;
        let psi = PsiSpec::mr(4.0, 0.0).unwrap();
        let p_grid = logspace(2.0, p_reliability_cap(n_paths), 32);
        let maxes: Vec<f64> = res
            .paths
            .iter()
            .map(|p| p.values[..n].iter().fold(0.0f64, |a, &v| a.max(v.abs())))
            .collect();
        let finals: Vec<f64> = res.paths.iter().map(|p| p.values[n - 1]).collect();
        let nm = gpsi_norm(&MomentCurve::from_values(&maxes, &p_grid, n_paths), &psi)
            .unwrap()
            .gpsi_norm;
        let nf = gpsi_norm(&MomentCurve::from_values(&finals, &p_grid, n_paths), &psi)
            .unwrap()
            .gpsi_norm;
        assert!(nm <= 2.0 * nf * 1.1, "max-norm {nm} vs 2·{nf}");
    }

    #[test]
    fn convergence_diagnostic_smoke() {
        let spec = simple_spec(256, 1024);
        let ckpts = vec![2usize, 8, 32, 128, 256];
        let ens = simulate_ensemble(&spec, 2000, seed(), &ckpts).unwrap();
        let psi = PsiSpec::mr(4.0, 0.0).unwrap();
        let nu = PsiSpec::mr(2.0, 0.0).unwrap();
        let rep = convergence_diagnostic(&ens, &psi, &nu, &cfg()).unwrap();
        assert_eq!(rep.order, OrderVerdict::Dominated);
        assert!(!rep.wide_error);
        for row in &rep.checkpoints {
            assert!(
                row.bound >= row.empirical_norm,
                "bound {} < empirical {} at n={}",
                row.bound,
                row.empirical_norm,
                row.n
            );
        }
        // residual norms decrease along checkpoints
        let first = rep.checkpoints.first().unwrap().empirical_norm;
        let last = rep.checkpoints.last().unwrap().empirical_norm;
        assert!(last < first);
    }

    #[test]
    fn gamma_equals_tail_sum_at_full_truncation() {
        // checkpoint n = n_max = k_trunc: empirical residual is exactly 0,
        // so γ_n reduces to the known truncation bias
        let spec = simple_spec(64, 64);
        let ens = simulate_ensemble(&spec, 500, seed(), &[2, 64]).unwrap();
        let psi = PsiSpec::mr(4.0, 0.0).unwrap();
        let rep = convergence_diagnostic(&ens, &psi, &psi, &cfg()).unwrap();
        let last = rep.checkpoints.last().unwrap();
        assert!((last.gamma_n - rep.truncation_bias_var.sqrt()).abs() < 1e-12);
        assert_eq!(last.empirical_norm, 0.0);
    }

    #[test]
    fn y_series_moment_growth_band() {
        // Eq. (25)/(26) shape: ln |Y_n|_p is approximately linear in
        // p^{1/(mγ)} over the reliable window
        let spec = MartingaleSpec::new(
            MartingaleKind::YSeries {
                b: 0.75, // m = 4
                gamma: 0.5,
                d_max: 5,
            },
            64,
            64,
        )
        .unwrap();
        let n_paths = 4000;
        let res = simulate(&spec, n_paths, seed(), None).unwrap();
        let finals: Vec<f64> = res.paths.iter().map(|p| *p.values.last().unwrap()).collect();
        let p_grid = logspace(2.0, p_reliability_cap(n_paths), 24);
        let curve = MomentCurve::from_values(&finals, &p_grid, n_paths);
        let exponent = 1.0 / (4.0 * 0.5);
        let xs: Vec<f64> = p_grid.iter().map(|p| p.powf(exponent)).collect();
        let ys: Vec<f64> = curve.lp_values.iter().map(|v| v.ln()).collect();
        let fit = crate::numerics::ols(&xs, &ys);
        assert!(fit.slope > 0.0);
        // linearity band: residuals small against the fitted range
        let range = ys.last().unwrap() - ys[0];
        for (x, y) in xs.iter().zip(&ys) {
            let r = (y - fit.intercept - fit.slope * x).abs();
            assert!(r <= 0.15 * range.abs() + 0.05, "residual {r} vs range {range}");
        }
    }
}
