//! Numerical toolkit for exponential Orlicz spaces.
//!
//! An exponential Orlicz space is described equivalently by three objects:
//! a generator `W` (convex increasing on `[2, ∞)`), the N-function
//! `N(u) = exp(W(log u))`, and the moment-growth function
//! `ψ(p) = exp(W*(p)/p)` built from the Young–Fenchel transform of `W`.
//! This crate makes the correspondence executable:
//!
//! * [`convex`] — discrete Legendre–Fenchel machinery converting between
//!   `W`, `ψ` and `N` on grids;
//! * [`psi`] — the analytic catalog of moment functions `p^{1/m} log^r p`
//!   and `exp(Z p^β)`, slowly varying factors and tail profiles;
//! * [`norms`] — empirical evaluation of the moment-sup norm
//!   `sup_p |η|_p/ψ(p)` and the Orlicz functional
//!   `inf_v v⁻¹(1 + E N(vη))` on samples, with membership and tail
//!   diagnostics;
//! * [`generators`] — reproducible samplers for Rademacher series,
//!   symmetric Weibull-type variables and their products;
//! * [`operators`] — Fourier partial sums and the Hilbert transform on
//!   `[0,1)`, with the norm-index transfer and non-convergence experiments;
//! * [`martingale`] — martingale simulators and the `R(δ,p,ψ)` convergence
//!   bound machinery.
//!
//! All sampling is driven by a counter-based generator ([`rng`]): results
//! are pure functions of `(seed, stream, counter)` and reproduce
//! bit-for-bit regardless of chunking.

pub mod config;
pub mod convex;
pub mod generators;
pub mod grid;
pub mod martingale;
pub mod moments;
pub mod norms;
pub mod numerics;
pub mod operators;
pub mod psi;
pub mod rng;
pub mod sample;
pub mod signal;

mod error;

pub use error::{Error, Result};
