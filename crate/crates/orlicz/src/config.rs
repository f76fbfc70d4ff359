//! Centralized numeric configuration: grid defaults, fit windows and the
//! tolerance constants used across the crate.

use serde::{Deserialize, Serialize};

/// Tolerances and numeric knobs shared by all modules.
///
/// Every threshold that affects a verdict lives here so experiments are
/// reproducible from a config record alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericConfig {
    /// Default number of grid points for log-spaced grids.
    pub grid_points: usize,
    /// Default dual window `[p_lo, p_hi]` for conjugates of generators.
    pub p_window: (f64, f64),
    /// Relative slack allowed in discrete convexity checks
    /// (scaled by the value range of the curve under test).
    pub eps_convex_rel: f64,
    /// Tail-fit window as quantile levels `[q_lo, q_hi]` of `P(|η|>u)`.
    pub fit_window: (f64, f64),
    /// Number of quantile points placed log-uniformly in the fit window.
    pub fit_points: usize,
    /// Minimal `ln u` span of the fit window; below it the tail is treated
    /// as unresolved (bounded samples collapse the window).
    pub min_fit_span: f64,
    /// Trend classification: |slope| below this is a plateau.
    pub trend_threshold: f64,
    /// "Comparable" verdict band: max/min ratio allowed over the upper
    /// half of the p-grid.
    pub comparable_band: f64,
    /// Orlicz-functional minimization: scan points over `ln v`.
    pub lux_scan_points: usize,
    /// Orlicz-functional scan half-width in `ln v` around the sample scale.
    pub lux_scan_halfwidth: f64,
    /// `R(δ,p,ψ)` minimization: β-scan grid size over `(1+1e-3, beta_max]`.
    pub beta_scan_points: usize,
    pub beta_max: f64,
    /// Golden-section refinement iterations.
    pub golden_iters: usize,
    /// Absolute x-tolerance for monotone tail inversion by bisection.
    pub tail_bisect_tol: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            p_window: (2.0, 256.0),
            eps_convex_rel: 1e-9,
            fit_window: (1e-5, 1e-2),
            fit_points: 16,
            min_fit_span: 0.15,
            trend_threshold: 0.05,
            comparable_band: 10.0,
            lux_scan_points: 200,
            lux_scan_halfwidth: 35.0,
            beta_scan_points: 512,
            beta_max: 1e3,
            golden_iters: 80,
            tail_bisect_tol: 1e-12,
        }
    }
}

/// Reliability cap on moment orders: above `2·log2(n)` empirical moments of
/// heavy-tailed samples are dominated by the sample maximum.
pub fn p_reliability_cap(n: usize) -> f64 {
    2.0 * (n.max(2) as f64).log2()
}
