//! Empirical variance estimates, Bernstein-type confidence bounds and
//! normal-approximation certificates for bounded non-additive functions of
//! independent random variables.
//!
//! The library revolves around two seminorms of a statistic
//! `f: X^n -> R` — the largest single-coordinate variation `M(f)` and `n`
//! times the largest mixed two-coordinate variation `J(f)`. Functions whose
//! `M` decays like `a/n` and `J` like `b/n` ("weak interactions") behave
//! statistically like the sample mean, and for them the crate provides:
//!
//! - [`diffops`]: difference/replacement/deletion operators and exact or
//!   probed seminorm computation;
//! - [`estimator`]: conditional variances, the Efron-Stein functional, the
//!   unbiased (n+1)-sample variance estimator `v_f`, and exact enumeration
//!   oracles;
//! - [`bounds`]: McDiarmid, Bernstein, empirical Bernstein, variance
//!   confidence intervals, normal-approximation bounds and the empirical
//!   normality test;
//! - [`statlib`]: ready-made statistic families (mean, U/V-statistics,
//!   Lipschitz L-statistics, Gibbs free energy and KL divergence,
//!   l2-regularization gap) with their `(a, b)` parameters;
//! - [`compose`]: the chain rule producing `(a', b')` for compositions;
//! - [`harness`]: a deterministic, replication-parallel experiment runner
//!   behind the `weakint` CLI.

pub mod bounds;
pub mod compose;
pub mod diffops;
pub mod error;
pub mod estimator;
pub mod harness;
mod numeric;
pub mod statlib;

pub use diffops::{
    FiniteAlphabet, Point, SeminormMethod, SeminormReport, Statistic, WeakInteractionParams,
};
pub use error::{Error, Result};
