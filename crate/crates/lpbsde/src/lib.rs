//! Numerical laboratory for backward stochastic differential equations driven
//! by Brownian and Poisson noise, in the awkward integrability range `1 < p < 2`.
//!
//! The crate provides, as plain functions over explicit data:
//!
//! - [`levy`]: jump-mark measures (finite atomic lists and the symmetric
//!   power-law family) with closed-form moment integrals,
//! - [`sum_norms`]: the sum-space norms `L^p + L^2` and `L^1 + L^2` on mark
//!   functions, their constructive threshold decompositions, the dual norm and
//!   the time-integrated norm bound,
//! - [`tech_inequality`]: the two-regime pointwise inequality `Ψ ≥ Γ` with its
//!   explicit constants, a grid verifier and a per-point proof certificate,
//! - [`paths`]: reproducible simulation of Brownian increments, Poisson random
//!   measures, truncated stable paths and compensated jump integrals,
//! - [`bsde`]: a backward solver (exact Markov-chain mode and least-squares
//!   regression mode) with the radial truncation scheme for unbounded data,
//! - [`estimates`]: Monte Carlo verification of the a priori moment estimates,
//!   the martingale moment sandwiches and the strict `p < 2` integral gap.
//!
//! Everything stochastic is keyed by `(seed, path index, stream)` so results
//! do not depend on scheduling or worker counts.

pub mod bsde;
pub mod error;
pub mod estimates;
pub mod levy;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod sum_norms;
pub mod tech_inequality;

pub use error::Error;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
