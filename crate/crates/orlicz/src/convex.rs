//! Discrete Legendre–Fenchel machinery: conjugates on grids, the
//! generator ↔ moment-function conversions `ψ(p) = exp(W*(p)/p)` and
//! `W = (p log ψ(p))*`, and the spliced N-function `N(u) = exp(W(log u))`.

use crate::grid::GridFunction;
use crate::numerics::logspace;
use crate::psi::PsiSpec;
use crate::{Error, Result};

/// Stored convexity slack for conjugate outputs.
const CONJ_EPS_REL: f64 = 1e-9;

/// A discrete conjugate together with the maximizer index per dual point.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub function: GridFunction,
    /// Index into the primal grid attaining the supremum, per dual point.
    pub argmax: Vec<usize>,
}

impl Conjugate {
    /// Dual points whose maximizer is strictly interior to the primal grid.
    pub fn interior_mask(&self, primal_len: usize) -> Vec<bool> {
        self.argmax
            .iter()
            .map(|&i| i > 0 && i + 1 < primal_len)
            .collect()
    }
}

/// Young–Fenchel transform on grids: `g(p) = sup_z (p z - f(z))`.
///
/// The supremum over the tabulated window is the maximum over the lower
/// convex envelope of the nodes; linear extrapolation rays declared on `f`
/// are taken into account. Errors:
/// * a dual point steeper than a declared finite slope makes the supremum
///   infinite — truncated domain;
/// * with a hard (`+∞`) right end, a maximizer at the last node means the
///   window clipped the supremum — truncated domain. The first node is a
///   closed boundary and may carry the maximizer.
pub fn fenchel_conjugate(f: &GridFunction, dual_grid: &[f64]) -> Result<Conjugate> {
    if dual_grid.len() < 2 || dual_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(
            "dual grid must be strictly increasing with at least 2 points".into(),
        ));
    }
    let z = f.grid();
    let v = f.values();
    let n = z.len();
    let env = lower_envelope_indices(z, v);

    let mut values = Vec::with_capacity(dual_grid.len());
    let mut argmax = Vec::with_capacity(dual_grid.len());
    let mut j = 0usize;
    for &p in dual_grid {
        if f.left_slope().is_finite() && p < f.left_slope() {
            return Err(Error::TruncatedDomain { dual_point: p });
        }
        if f.right_slope().is_finite() && p > f.right_slope() {
            return Err(Error::TruncatedDomain { dual_point: p });
        }
        // strict comparison keeps the leftmost maximizer, so a dual point
        // exactly at an envelope-segment slope stays interior
        while j + 1 < env.len() {
            let cur = env[j];
            let nxt = env[j + 1];
            if p * z[nxt] - v[nxt] > p * z[cur] - v[cur] {
                j += 1;
            } else {
                break;
            }
        }
        let i = env[j];
        if i == n - 1 && f.right_slope().is_infinite() {
            return Err(Error::TruncatedDomain { dual_point: p });
        }
        values.push(p * z[i] - v[i]);
        argmax.push(i);
    }

    // Beyond the dual window the conjugate continues along its support
    // lines; the subgradients at the window ends are the extreme maximizers.
    let left = z[argmax[0]];
    let right = z[*argmax.last().unwrap()];
    let function = GridFunction::with_slopes(dual_grid.to_vec(), values, left, right)?
        .flag_convex(CONJ_EPS_REL)?;
    Ok(Conjugate { function, argmax })
}

/// Moment-growth function of a generator: `ψ(p) = exp(W*(p)/p)` tabulated
/// on `p_grid` (the grid-backed spec stores `p·log ψ(p) = W*(p)`).
pub fn psi_from_w(w: &GridFunction, p_grid: &[f64]) -> Result<PsiSpec> {
    validate_convex_increasing(w, "W")?;
    let conj = fenchel_conjugate(w, p_grid)?;
    PsiSpec::grid_backed(conj.function)
}

/// Generator from a moment function: `W = (p log ψ(p))*` on `z_grid`.
///
/// For catalog ψ the curve `p log ψ(p)` is tabulated on a log-spaced grid
/// over `p_window`; a grid-backed ψ supplies its own stored curve.
pub fn w_from_psi(
    psi: &PsiSpec,
    z_grid: &[f64],
    p_window: (f64, f64),
    grid_points: usize,
) -> Result<GridFunction> {
    let curve = match psi {
        PsiSpec::GridBacked(gf) => gf.clone(),
        _ => {
            let grid = logspace(p_window.0, p_window.1, grid_points);
            let mut vals = Vec::with_capacity(grid.len());
            for &p in &grid {
                vals.push(p * psi.log_eval(p)?);
            }
            GridFunction::new(grid, vals)?
        }
    };
    validate_convex_increasing(&curve, "p log psi(p)")?;
    Ok(fenchel_conjugate(&curve, z_grid)?.function)
}

fn validate_convex_increasing(f: &GridFunction, name: &str) -> Result<()> {
    if f.values().windows(2).any(|w| w[1] < w[0] - 1e-12 * (1.0 + w[0].abs())) {
        return Err(Error::NonConvex(format!("{name} is not nondecreasing")));
    }
    if f.is_convex_flagged() {
        return Ok(());
    }
    f.clone()
        .flag_convex(CONJ_EPS_REL)
        .map(|_| ())
        .map_err(|_| Error::NonConvex(format!("{name} fails the discrete convexity test")))
}

/// Lower convex envelope node indices (monotone chain); the conjugate of
/// the node set equals the conjugate of its envelope.
fn lower_envelope_indices(z: &[f64], v: &[f64]) -> Vec<usize> {
    let mut env: Vec<usize> = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        while env.len() >= 2 {
            let a = env[env.len() - 2];
            let b = env[env.len() - 1];
            // pop b if it lies on or above segment a--i
            let lhs = (v[b] - v[a]) * (z[i] - z[a]);
            let rhs = (v[i] - v[a]) * (z[b] - z[a]);
            if lhs >= rhs {
                env.pop();
            } else {
                break;
            }
        }
        env.push(i);
    }
    env
}

/// Sup-norm distance between `f` and its double conjugate on interior grid
/// points. Zero (up to interpolation error) exactly when `f` is convex; a
/// non-convex dent shows up as its depth above the convex envelope.
pub fn biconjugate_residual(f: &GridFunction) -> Result<f64> {
    if f.len() < 4 {
        return Err(Error::InvalidGrid(
            "biconjugate residual needs at least 4 grid points".into(),
        ));
    }
    // the dual window is the subgradient range of the convex envelope;
    // the top is pulled half a slope-gap inward so float roundoff cannot
    // push the maximizer onto the open window end
    let env = lower_envelope_indices(f.grid(), f.values());
    let slopes: Vec<f64> = env
        .windows(2)
        .map(|w| (f.values()[w[1]] - f.values()[w[0]]) / (f.grid()[w[1]] - f.grid()[w[0]]))
        .collect();
    let (s_lo, s_hi) = if slopes.len() >= 2 {
        let top_gap = slopes[slopes.len() - 1] - slopes[slopes.len() - 2];
        (slopes[0], slopes[slopes.len() - 1] - 0.5 * top_gap)
    } else {
        let s = slopes[0];
        (s - 1e-6 * (1.0 + s.abs()), s - 1e-9 * (1.0 + s.abs()))
    };
    let dual = crate::numerics::linspace(s_lo, s_hi, f.len().max(1024));
    let star = fenchel_conjugate(f, &dual)?;
    let back = fenchel_conjugate(&star.function, &f.grid()[1..f.len() - 1])?;
    let mut worst = 0.0f64;
    for i in 1..f.len() - 1 {
        worst = worst.max((f.values()[i] - back.function.values()[i - 1]).abs());
    }
    Ok(worst)
}

/// Spliced exponential N-function: `N(u) = exp(W(log u))` for `u ≥ e²`,
/// extended by the quadratic patch `C(W)·u²` below, with
/// `C(W) = exp(W(2))/e⁴` making `N` continuous at the splice.
#[derive(Debug, Clone)]
pub struct NFunctionSpec {
    w: GridFunction,
    /// `ln C(W) = W(2) - 4`; the coefficient itself can overflow f64 for
    /// fast-growing generators, so evaluation stays in log space.
    log_quad_coeff: f64,
    splice_u: f64,
}

impl NFunctionSpec {
    pub fn splice_u(&self) -> f64 {
        self.splice_u
    }

    pub fn quad_coeff(&self) -> f64 {
        self.log_quad_coeff.exp()
    }

    pub fn log_quad_coeff(&self) -> f64 {
        self.log_quad_coeff
    }

    pub fn w(&self) -> &GridFunction {
        &self.w
    }

    /// `ln N(u)` given `ln |u|`; `-∞` maps to `-∞` (N(0) = 0).
    pub fn log_eval_ln(&self, ln_u: f64) -> f64 {
        if ln_u < 2.0 {
            self.log_quad_coeff + 2.0 * ln_u
        } else {
            self.w.eval(ln_u)
        }
    }

    /// `N(u)`; even in `u`.
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        self.log_eval_ln(a.ln()).exp()
    }

    /// Assert continuity, monotonicity and discrete convexity of the
    /// spliced function on a log-spaced test grid limited to the
    /// f64-representable range of `N`.
    pub fn validate(&self, points: usize) -> Result<()> {
        let lo = (-3.0f64).exp();
        // cap where ln N exceeds 600 so the convexity test stays finite
        let mut hi_ln = self.w.max_x();
        while hi_ln > 2.0 && self.log_eval_ln(hi_ln) > 600.0 {
            hi_ln -= 0.05;
        }
        let hi = hi_ln.exp();
        if hi <= lo {
            return Err(Error::InvalidInput("N validation window empty".into()));
        }
        let us = logspace(lo, hi, points.max(16));
        let vals: Vec<f64> = us.iter().map(|&u| self.eval(u)).collect();
        if vals.windows(2).any(|w| w[1] < w[0] - 1e-9 * (1.0 + w[0].abs())) {
            return Err(Error::NonConvex("spliced N is not nondecreasing".into()));
        }
        GridFunction::new(us, vals)?.flag_convex(1e-7)?;
        Ok(())
    }
}

/// Build the spliced N-function from a generator window.
pub fn n_from_w(w: &GridFunction) -> Result<NFunctionSpec> {
    let w2 = w.eval(2.0);
    if !w2.is_finite() {
        return Err(Error::InvalidInput(
            "generator must be evaluable at z = 2".into(),
        ));
    }
    Ok(NFunctionSpec {
        w: w.clone(),
        log_quad_coeff: w2 - 4.0,
        splice_u: std::f64::consts::E * std::f64::consts::E,
    })
}
