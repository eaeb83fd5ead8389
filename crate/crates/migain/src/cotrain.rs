//! Gain maximization over tabular predictors: recover both Bayesian posterior
//! predictors (up to a shared label permutation) by ascending the expected or
//! empirical gain.
//!
//! Rows of both hypotheses and the reference vector `p` are parameterized as
//! unconstrained scores mapped onto the simplex by exponentiation and
//! normalization, which keeps every iterate strictly interior. Ascent is
//! fixed-step gradient ascent with step halving on objective decrease and
//! seeded random restarts. Restarts are independent; ties between restarts
//! with equal objectives break toward the lowest restart index.

use itertools::Itertools;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{TaskSample, TripletPrior, View};
use crate::divergence::Divergence;
use crate::gain::{weighted_gain, weighted_gain_with_grad, GainWeights, Hypothesis};
use crate::simplex::Simplex;
use crate::{Error, Result};

/// Knobs for the ascent loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Independent random restarts; the best final objective wins.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Initial step of each iteration's backtracking search.
    pub step_size: f64,
    /// Stop a restart once the accepted improvement falls below this.
    pub tolerance: f64,
    pub seed: u64,
    /// When false, `p` stays fixed to the supplied label prior instead of
    /// being optimized alongside the hypotheses.
    pub optimize_p: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 10,
            max_iters: 4000,
            step_size: 2.0,
            tolerance: 1e-12,
            seed: 0,
            optimize_p: true,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "restarts and max_iters must be at least 1".into(),
            ));
        }
        if !(self.step_size > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "step_size and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a gain maximization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CotrainResult {
    pub h_a_star: Hypothesis,
    pub h_b_star: Hypothesis,
    pub p_star: Simplex,
    /// Gain at the returned point (expected or empirical, depending on mode).
    pub objective: f64,
    /// Label permutation aligning the result to the reference predictors,
    /// when a reference was available.
    pub permutation: Option<Vec<usize>>,
    /// Max total-variation gap, over all hypothesis rows and `p`, after
    /// applying [`CotrainResult::permutation`].
    pub aligned_tv_distance: Option<f64>,
    /// Messages from restarts that aborted on a non-finite objective.
    pub restart_errors: Vec<String>,
    /// Objective after every accepted iteration of the winning restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl CotrainResult {
    /// Fills `permutation` and `aligned_tv_distance` against reference
    /// predictors (and optionally a reference label prior).
    pub fn align_to(
        &mut self,
        reference_a: &Hypothesis,
        reference_b: &Hypothesis,
        reference_p: Option<&Simplex>,
    ) -> Result<()> {
        let n = self.p_star.len();
        if n > MAX_PERMUTATION_LABELS {
            return Err(Error::PermutationSearchTooLarge(n));
        }
        let mut best: Option<(Vec<usize>, f64)> = None;
        for perm in (0..n).permutations(n) {
            let mut d = self
                .h_a_star
                .permuted(&perm)
                .max_row_tv(reference_a)
                .max(self.h_b_star.permuted(&perm).max_row_tv(reference_b));
            if let Some(rp) = reference_p {
                d = d.max(self.p_star.permuted(&perm).tv_distance(rp));
            }
            if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                best = Some((perm, d));
            }
        }
        let (perm, d) = best.expect("at least one permutation");
        self.permutation = Some(perm);
        self.aligned_tv_distance = Some(d);
        Ok(())
    }
}

const MAX_PERMUTATION_LABELS: usize = 8;

/// The label permutation of `h` minimizing the maximum row-wise total
/// variation distance to `reference`, found by exhaustive search, together
/// with that minimal distance.
///
/// Errors when the label set exceeds 8 (the search is factorial).
pub fn align_permutation(h: &Hypothesis, reference: &Hypothesis) -> Result<(Vec<usize>, f64)> {
    if h.n_labels() != reference.n_labels() || h.n_signals() != reference.n_signals() {
        return Err(Error::LengthMismatch(h.n_labels(), reference.n_labels()));
    }
    let n = h.n_labels();
    if n > MAX_PERMUTATION_LABELS {
        return Err(Error::PermutationSearchTooLarge(n));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in (0..n).permutations(n) {
        let d = h.permuted(&perm).max_row_tv(reference);
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((perm, d));
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Maximizes the exact expected gain under `prior` and aligns the winner to
/// the true posterior predictors.
///
/// With an invertible `f'`, a well-defined prior, and enough restarts, the
/// maximizer is the pair of Bayesian posterior predictors up to a shared
/// label permutation; for `tvd` the subgradient is flat almost everywhere and
/// no recovery is claimed.
pub fn optimize_mig(
    prior: &TripletPrior,
    div: Divergence,
    cfg: &OptimizerConfig,
) -> Result<CotrainResult> {
    cfg.validate()?;
    let weights = GainWeights::from_prior(prior);
    let fixed_p = (!cfg.optimize_p).then(|| prior.prior_y().clone());
    let mut result = run_restarts(
        div,
        &weights,
        prior.n_a(),
        prior.n_b(),
        prior.n_labels(),
        cfg,
        fixed_p,
    )?;
    if prior.n_labels() <= MAX_PERMUTATION_LABELS {
        result.align_to(
            &Hypothesis::bayes(prior, View::A)?,
            &Hypothesis::bayes(prior, View::B)?,
            Some(prior.prior_y()),
        )?;
    }
    Ok(result)
}

/// Maximizes the empirical gain over task samples. Signal space sizes are
/// taken from the largest observed indices; the label count must be supplied.
///
/// With `optimize_p` disabled a fixed reference `p` must be given. The result
/// is returned unaligned; call [`CotrainResult::align_to`] against reference
/// predictors when ground truth is available.
pub fn optimize_mig_empirical(
    samples: &[TaskSample],
    n_labels: usize,
    div: Divergence,
    cfg: &OptimizerConfig,
    fixed_p: Option<Simplex>,
) -> Result<CotrainResult> {
    cfg.validate()?;
    if n_labels == 0 {
        return Err(Error::InvalidConfig("n_labels must be at least 1".into()));
    }
    if !cfg.optimize_p && fixed_p.is_none() {
        return Err(Error::InvalidConfig(
            "optimize_p = false requires a fixed reference p".into(),
        ));
    }
    let n_a = samples
        .iter()
        .filter_map(|s| s.x_a)
        .max()
        .map(|m| m + 1)
        .ok_or(Error::InsufficientTaskStructure("no A-side signals"))?;
    let n_b = samples
        .iter()
        .filter_map(|s| s.x_b)
        .max()
        .map(|m| m + 1)
        .ok_or(Error::InsufficientTaskStructure("no B-side signals"))?;
    let weights = GainWeights::from_samples(samples, n_a, n_b)?;
    let fixed = if cfg.optimize_p { None } else { fixed_p };
    run_restarts(div, &weights, n_a, n_b, n_labels, cfg, fixed)
}

/// Unconstrained score parameterization of (h_a, h_b, p).
#[derive(Clone)]
struct Params {
    theta_a: Vec<Vec<f64>>,
    theta_b: Vec<Vec<f64>>,
    theta_p: Vec<f64>,
}

fn softmax(theta: &[f64]) -> Simplex {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = theta.iter().map(|&t| (t - max).exp()).collect();
    Simplex::from_weights(weights).expect("softmax output is a distribution")
}

/// Chain rule through exponentiation-and-normalization:
/// `d/dθ_k = h_k (grad_k - Σ_y grad_y h_y)`.
fn softmax_chain(grad_prob: &[f64], probs: &Simplex) -> Vec<f64> {
    let inner: f64 = grad_prob
        .iter()
        .zip(probs.iter())
        .map(|(g, h)| g * h)
        .sum();
    grad_prob
        .iter()
        .zip(probs.iter())
        .map(|(g, h)| h * (g - inner))
        .collect()
}

struct Evaluation {
    value: f64,
    grad_a: Vec<Vec<f64>>,
    grad_b: Vec<Vec<f64>>,
    grad_p: Option<Vec<f64>>,
}

fn materialize(params: &Params, fixed_p: Option<&Simplex>) -> (Hypothesis, Hypothesis, Simplex) {
    let h_a = Hypothesis::new(params.theta_a.iter().map(|t| softmax(t)).collect())
        .expect("softmax rows are valid");
    let h_b = Hypothesis::new(params.theta_b.iter().map(|t| softmax(t)).collect())
        .expect("softmax rows are valid");
    let p = fixed_p
        .cloned()
        .unwrap_or_else(|| softmax(&params.theta_p));
    (h_a, h_b, p)
}

fn evaluate(
    div: Divergence,
    weights: &GainWeights,
    params: &Params,
    fixed_p: Option<&Simplex>,
) -> f64 {
    let (h_a, h_b, p) = materialize(params, fixed_p);
    weighted_gain(div, &h_a, &h_b, &p, weights)
}

fn evaluate_with_grad(
    div: Divergence,
    weights: &GainWeights,
    params: &Params,
    fixed_p: Option<&Simplex>,
) -> Evaluation {
    let (h_a, h_b, p) = materialize(params, fixed_p);
    let (value, grad) = weighted_gain_with_grad(div, &h_a, &h_b, &p, weights);
    let grad_a = grad
        .h_a
        .iter()
        .enumerate()
        .map(|(x, g)| softmax_chain(g, h_a.row(x)))
        .collect();
    let grad_b = grad
        .h_b
        .iter()
        .enumerate()
        .map(|(x, g)| softmax_chain(g, h_b.row(x)))
        .collect();
    let grad_p = fixed_p.is_none().then(|| softmax_chain(&grad.p, &p));
    Evaluation {
        value,
        grad_a,
        grad_b,
        grad_p,
    }
}

/// Gradient of the gain with respect to the unconstrained scores, exposed for
/// finite-difference validation.
#[allow(clippy::too_many_arguments)]
pub fn expected_gain_score_gradient(
    prior: &TripletPrior,
    div: Divergence,
    theta_a: &[Vec<f64>],
    theta_b: &[Vec<f64>],
    theta_p: &[f64],
) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let weights = GainWeights::from_prior(prior);
    let params = Params {
        theta_a: theta_a.to_vec(),
        theta_b: theta_b.to_vec(),
        theta_p: theta_p.to_vec(),
    };
    let eval = evaluate_with_grad(div, &weights, &params, None);
    (
        eval.value,
        eval.grad_a,
        eval.grad_b,
        eval.grad_p.expect("p is free here"),
    )
}

struct RestartOutcome {
    params: Params,
    objective: f64,
    trace: Vec<f64>,
}

fn random_simplex_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Exponential weights normalize to a uniform draw on the simplex; the
    // scores are their logs.
    let weights: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / sum).max(1e-12).ln()).collect()
}

fn ascend(
    div: Divergence,
    weights: &GainWeights,
    n_a: usize,
    n_b: usize,
    n_labels: usize,
    cfg: &OptimizerConfig,
    fixed_p: Option<&Simplex>,
    restart: usize,
) -> std::result::Result<RestartOutcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
    let mut params = Params {
        theta_a: (0..n_a).map(|_| random_simplex_scores(&mut rng, n_labels)).collect(),
        theta_b: (0..n_b).map(|_| random_simplex_scores(&mut rng, n_labels)).collect(),
        theta_p: vec![0.0; n_labels],
    };

    let mut eval = evaluate_with_grad(div, weights, &params, fixed_p);
    if !eval.value.is_finite() {
        return Err(format!("restart {restart}: non-finite objective at init"));
    }
    let mut trace = vec![eval.value];

    for _ in 0..cfg.max_iters {
        let grad_norm: f64 = eval
            .grad_a
            .iter()
            .chain(eval.grad_b.iter())
            .flat_map(|row| row.iter())
            .chain(eval.grad_p.iter().flatten())
            .map(|g| g * g)
            .sum();
        if grad_norm == 0.0 {
            break;
        }

        let mut step = cfg.step_size;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = params.clone();
            for (row, g) in trial.theta_a.iter_mut().zip(&eval.grad_a) {
                for (t, gi) in row.iter_mut().zip(g) {
                    *t += step * gi;
                }
            }
            for (row, g) in trial.theta_b.iter_mut().zip(&eval.grad_b) {
                for (t, gi) in row.iter_mut().zip(g) {
                    *t += step * gi;
                }
            }
            if let Some(gp) = &eval.grad_p {
                for (t, gi) in trial.theta_p.iter_mut().zip(gp) {
                    *t += step * gi;
                }
            }
            let value = evaluate(div, weights, &trial, fixed_p);
            if !value.is_finite() {
                return Err(format!("restart {restart}: non-finite objective during ascent"));
            }
            if value >= eval.value {
                accepted = Some((trial, value));
                break;
            }
            step *= 0.5;
        }

        let Some((trial, value)) = accepted else {
            break; // fully backtracked without improvement
        };
        let improvement = value - eval.value;
        params = trial;
        eval = evaluate_with_grad(div, weights, &params, fixed_p);
        trace.push(eval.value);
        if improvement < cfg.tolerance {
            break;
        }
    }

    Ok(RestartOutcome {
        objective: *trace.last().expect("trace is nonempty"),
        params,
        trace,
    })
}

fn run_restarts(
    div: Divergence,
    weights: &GainWeights,
    n_a: usize,
    n_b: usize,
    n_labels: usize,
    cfg: &OptimizerConfig,
    fixed_p: Option<Simplex>,
) -> Result<CotrainResult> {
    let outcomes: Vec<std::result::Result<RestartOutcome, String>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            ascend(
                div,
                weights,
                n_a,
                n_b,
                n_labels,
                cfg,
                fixed_p.as_ref(),
                restart,
            )
        })
        .collect();

    let restart_errors: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().cloned())
        .collect();
    // Best objective wins; equal objectives resolve to the lowest index
    // because the scan is in restart order.
    let best = outcomes
        .into_iter()
        .flatten()
        .reduce(|best, cand| if cand.objective > best.objective { cand } else { best });
    let Some(best) = best else {
        return Err(Error::OptimizationFailed(restart_errors.join("; ")));
    };

    let (h_a_star, h_b_star, p_star) = materialize(&best.params, fixed_p.as_ref());
    Ok(CotrainResult {
        h_a_star,
        h_b_star,
        p_star,
        objective: best.objective,
        permutation: None,
        aligned_tv_distance: None,
        restart_errors,
        trace: best.trace,
    })
}
