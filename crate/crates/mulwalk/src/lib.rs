//! Lower bounds and estimators for `E‖Σ vᵢRᵢ‖`, where `R₀ = 1` and
//! `Rᵢ = X₁⋯Xᵢ` is a multiplicative walk driven by i.i.d. nonnegative
//! mean-one factors.
//!
//! The trivial estimate `E‖Σ vᵢRᵢ‖ ≤ Σ‖vᵢ‖` holds for any coefficients in a
//! normed space. This crate computes certified constants `c > 0` with
//! `E‖Σ vᵢRᵢ‖ ≥ c·Σ‖vᵢ‖`, evaluates the left side exactly (finite support)
//! or by Monte Carlo, integrates the analogous Riesz-product combinations on
//! the circle by quadrature, and searches coefficient space for small
//! L1-to-ℓ1 ratios.
//!
//! Everything is deterministic: sampling uses per-index substreams derived
//! from a caller seed, and all data-parallel reductions run in a fixed order,
//! so results do not depend on the worker count. Parallelism is provided by
//! the `parallel` feature (enabled by default); without it the same code
//! paths run sequentially and produce bit-identical output.

pub mod adversary;
pub mod certificates;
pub mod distributions;
pub mod error;
pub mod evaluator;
pub mod exec;
pub mod riesz;
pub mod rng;

pub use error::{Error, Result};

pub use adversary::{bounded_sum_probe, minimize_ratio, Oracle, SearchConfig, SearchResult};
pub use certificates::{certify_thm1, certify_thm3, epsilon_default, find_k, Certificate, Theorem};
pub use distributions::{Distribution, MomentProfile, ProductPath, ValidationReport};
pub use evaluator::{
    exact_l1, lemma_suite, mc_l1, rademacher_exact, ratio, CoefficientVector, EstimateResult,
    Method, Norm,
};
pub use riesz::{riesz_l1, riesz_ratio_sweep, LacunarySequence, QuadratureResult};
