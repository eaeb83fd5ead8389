//! # migain
//!
//! Co-training and forecast elicitation through f-mutual-information gain.
//!
//! Two views `X_A`, `X_B` of the same world are assumed independent given a
//! latent label `Y`. Without ever observing `Y`, the gain objective rewards a
//! pair of predictors for agreeing on the same task and penalizes them (through
//! the convex conjugate) for agreeing across distinct tasks:
//!
//! ```text
//! gain = mean_{same task}  g(Σ_y h_A(x_A)(y) h_B(x_B)(y) / p(y))
//!      - mean_{cross task} f*(g(Σ_y h_A(x_A)(y) h_B(x_B)(y) / p(y)))
//! ```
//!
//! where `g` is a subgradient of the convex generator `f`. The gain is an
//! unbiased estimate of the f-mutual information between the views, it is
//! maximized exactly when both predictors are Bayesian posterior predictors,
//! and the same quantity doubles as the payment rule of a multi-task
//! elicitation mechanism whose truthful equilibrium is focal.
//!
//! ## Modules
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`simplex`] | probability vectors over a finite signal set |
//! | [`dist`] | factored priors, joints, posteriors, task sampling |
//! | [`divergence`] | f-divergences, conjugates, dual bounds, f-mutual information |
//! | [`gain`] | the reward function and the empirical/exact gain |
//! | [`cotrain`] | gain maximization over tabular predictors |
//! | [`psgain`] | proper-scoring-rule gain and the likelihood-table variant |
//! | [`mechanisms`] | single-task and multi-task payment rules, equilibrium sweeps |
//! | [`prior_analysis`] | stability / uniqueness checks and synthetic prior generation |
//! | [`commands`] | config-driven batch runs behind the `migain` binary |
//!
//! ## Quick start
//!
//! ```
//! use migain::{Divergence, Hypothesis, Simplex};
//!
//! // Three tasks, binary label, uniform reference prior.
//! let h_a = Hypothesis::new(vec![
//!     Simplex::new(vec![0.7, 0.3]).unwrap(),
//!     Simplex::new(vec![0.1, 0.9]).unwrap(),
//!     Simplex::new(vec![0.5, 0.5]).unwrap(),
//! ]).unwrap();
//! let h_b = Hypothesis::new(vec![
//!     Simplex::new(vec![0.6, 0.4]).unwrap(),
//!     Simplex::new(vec![0.2, 0.8]).unwrap(),
//!     Simplex::new(vec![0.4, 0.6]).unwrap(),
//! ]).unwrap();
//! let p = Simplex::uniform(2);
//! let samples: Vec<_> = (0..3)
//!     .map(|i| migain::TaskSample::both(i, i as usize, i as usize))
//!     .collect();
//! let gain = migain::gain::empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &samples).unwrap();
//! assert!((gain - 0.2097).abs() < 5e-4);
//! ```

use thiserror::Error;

pub mod commands;
pub mod cotrain;
pub mod dist;
pub mod divergence;
pub mod gain;
pub mod mechanisms;
pub mod prior_analysis;
pub mod psgain;
pub mod simplex;

pub use cotrain::{CotrainResult, OptimizerConfig};
pub use dist::{JointAb, TaskSample, TripletPrior, View};
pub use divergence::Divergence;
pub use gain::Hypothesis;
pub use simplex::Simplex;

/// Floor applied to probabilities and ratios before any division or logarithm.
///
/// The theory assumes interior points; this floor is the single place where
/// that assumption is made operational. Values at or above the floor are
/// passed through untouched, so exact identities on interior inputs are
/// unaffected.
pub const PROB_FLOOR: f64 = 1e-12;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("not a distribution: {0}")]
    InvalidDistribution(String),

    #[error("undefined PMI: zero-probability signal ({view} = {index})")]
    ZeroProbabilitySignal { view: &'static str, index: usize },

    #[error("incompatible forecasts: product vector is zero")]
    IncompatibleForecasts,

    #[error("conjugate undefined: u = {value} outside dom(f*) for {name}")]
    ConjugateUndefined { name: &'static str, value: f64 },

    #[error("unknown divergence name: {0:?}")]
    UnknownDivergence(String),

    #[error("unknown scoring rule name: {0:?}")]
    UnknownScoringRule(String),

    #[error("insufficient task structure: {0}")]
    InsufficientTaskStructure(&'static str),

    #[error("permutation search too large: {0} labels (max 8)")]
    PermutationSearchTooLarge(usize),

    #[error("enumeration budget exceeded: {needed} candidates > budget {budget}")]
    EnumerationBudgetExceeded { needed: u128, budget: u64 },

    #[error("could not generate stable prior: {0}")]
    StablePriorGeneration(String),

    #[error("impossible observation under model: zero dot product at task {task_id}")]
    ImpossibleObservation { task_id: u64 },

    #[error("signal space too large: |sigma_b| = {0} exceeds {1}")]
    SignalSpaceTooLarge(usize, usize),

    #[error("all restarts failed: {0}")]
    OptimizationFailed(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `x` clamped away from zero by [`PROB_FLOOR`].
#[inline]
pub(crate) fn floored(x: f64) -> f64 {
    x.max(PROB_FLOOR)
}
