//! Scoring-rule gain: score the induced forecast of one view's signal with a
//! strictly proper rule, jointly over a forecaster for the other view and a
//! likelihood table.
//!
//! `v_b` maps each signal `x_B` to a vector in `[0,1]^|Σ|`; it is not a
//! distribution over labels, but its columns sum to one over `x_B`. Under
//! that column constraint the vector `(v_b(x_B) · h_a(x_A))_{x_B}` is a
//! forecast for `X_B` given `X_A = x_A`, and the gain is its score at the
//! observed `x_B`. With the log rule this is exactly the maximum-likelihood
//! objective; the constraint is load-bearing: without it the all-ones table
//! paired with any point mass drives the objective to its useless supremum.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cotrain::OptimizerConfig;
use crate::dist::{TaskSample, TripletPrior, View};
use crate::gain::Hypothesis;
use crate::simplex::Simplex;
use crate::{floored, Error, Result};

/// Generic scoring needs the full `|Σ_B|`-dimensional forecast per task, so
/// very wide B-spaces are rejected.
pub const MAX_SIGMA_B: usize = 4096;

/// Largest column-sum deviation `max_y |Σ_{x_B} rows[x_B][y] - 1|` of a raw
/// table; zero (within tolerance) for a valid [`LikelihoodTable`].
pub fn column_sum_deviation(rows: &[Vec<f64>]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    (0..rows[0].len())
        .map(|y| (rows.iter().map(|r| r[y]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// The `v_B` table: one vector in `[0,1]^|Σ|` per signal `x_B`, with columns
/// summing to one over `x_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LikelihoodTable {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for LikelihoodTable {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        LikelihoodTable::new(rows)
    }
}

impl From<LikelihoodTable> for Vec<Vec<f64>> {
    fn from(t: LikelihoodTable) -> Vec<Vec<f64>> {
        t.rows
    }
}

impl LikelihoodTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidDistribution("empty likelihood table".into()));
        }
        let width = rows[0].len();
        for row in &rows {
            if row.len() != width {
                return Err(Error::LengthMismatch(row.len(), width));
            }
            for &v in row {
                if !v.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::InvalidDistribution(format!(
                        "likelihood entry {v} outside [0, 1]"
                    )));
                }
            }
        }
        let dev = column_sum_deviation(&rows);
        if dev > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "column sums deviate from 1 by {dev}"
            )));
        }
        Ok(LikelihoodTable { rows })
    }

    /// The ground-truth table of `prior`: entry `(x_B, y)` is `Pr[X_B = x_B | Y = y]`.
    pub fn truth(prior: &TripletPrior) -> Self {
        let rows = (0..prior.n_b())
            .map(|x| {
                (0..prior.n_labels())
                    .map(|y| prior.cond_row(View::B, y)[x])
                    .collect()
            })
            .collect();
        LikelihoodTable { rows }
    }

    pub fn n_b(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x_b: usize) -> &[f64] {
        &self.rows[x_b]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Column `y` as a distribution over `Σ_B`.
    pub fn column(&self, y: usize) -> Simplex {
        Simplex::from_weights(self.rows.iter().map(|r| r[y]).collect())
            .expect("columns of a valid table sum to one")
    }

    /// Max deviation of the column-sum constraint; at most `1e-9` here.
    pub fn check_constraint(&self) -> f64 {
        column_sum_deviation(&self.rows)
    }
}

/// A strictly proper scoring rule on a finite outcome space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScoringRule {
    /// `score(σ, q) = ln q(σ)`.
    Log,
    /// Quadratic rule `score(σ, q) = 2 q(σ) - Σ_j q(j)^2`.
    Brier,
}

impl ScoringRule {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "log" => Ok(ScoringRule::Log),
            "brier" => Ok(ScoringRule::Brier),
            other => Err(Error::UnknownScoringRule(other.into())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoringRule::Log => "log",
            ScoringRule::Brier => "brier",
        }
    }

    /// Score of forecast `q` at the observed outcome.
    pub fn score(self, observed: usize, q: &[f64]) -> f64 {
        match self {
            ScoringRule::Log => floored(q[observed]).ln(),
            ScoringRule::Brier => {
                2.0 * q[observed] - q.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    /// Expected score `E_{σ ~ p} score(σ, q)`.
    pub fn expected_score(self, p: &[f64], q: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(sigma, &w)| w * self.score(sigma, q))
            .sum()
    }
}

impl TryFrom<String> for ScoringRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ScoringRule::by_name(&s)
    }
}

impl From<ScoringRule> for String {
    fn from(r: ScoringRule) -> String {
        r.name().into()
    }
}

fn paired_signals(samples: &[TaskSample]) -> Result<Vec<(u64, usize, usize)>> {
    samples
        .iter()
        .map(|s| match (s.x_a, s.x_b) {
            (Some(a), Some(b)) => Ok((s.task_id, a, b)),
            _ => Err(Error::InsufficientTaskStructure(
                "scoring-rule gain needs both signals on every task",
            )),
        })
        .collect()
}

/// Log-scoring gain: `Σ_ℓ ln(v_b(x_B^ℓ) · h_a(x_A^ℓ))`.
///
/// Errors when some task misses a signal or a dot product is exactly zero.
pub fn lsr_gain(h_a: &Hypothesis, v_b: &LikelihoodTable, samples: &[TaskSample]) -> Result<f64> {
    let pairs = paired_signals(samples)?;
    let mut total = 0.0;
    for (task_id, a, b) in pairs {
        let dot: f64 = (0..h_a.n_labels())
            .map(|y| v_b.row(b)[y] * h_a.row(a)[y])
            .sum();
        if dot <= 0.0 {
            return Err(Error::ImpossibleObservation { task_id });
        }
        total += dot.ln();
    }
    Ok(total)
}

/// The induced forecast for `X_B` given `X_A = a`: entry `x_B` is
/// `v_b(x_B) · h_a(a)`. A valid simplex whenever the column constraint holds.
pub fn induced_forecast(h_a: &Hypothesis, v_b: &LikelihoodTable, a: usize) -> Vec<f64> {
    (0..v_b.n_b())
        .map(|xb| {
            (0..h_a.n_labels())
                .map(|y| v_b.row(xb)[y] * h_a.row(a)[y])
                .sum()
        })
        .collect()
}

/// Scoring-rule gain: `Σ_ℓ score(x_B^ℓ, induced forecast at x_A^ℓ)`.
///
/// Computes the full `|Σ_B|`-dimensional forecast per task, so `|Σ_B|` is
/// capped at [`MAX_SIGMA_B`]. With the log rule this equals [`lsr_gain`].
pub fn ps_gain(
    h_a: &Hypothesis,
    v_b: &LikelihoodTable,
    samples: &[TaskSample],
    rule: ScoringRule,
) -> Result<f64> {
    if v_b.n_b() > MAX_SIGMA_B {
        return Err(Error::SignalSpaceTooLarge(v_b.n_b(), MAX_SIGMA_B));
    }
    let pairs = paired_signals(samples)?;
    let mut total = 0.0;
    for (task_id, a, b) in pairs {
        let forecast = induced_forecast(h_a, v_b, a);
        if forecast[b] <= 0.0 && rule == ScoringRule::Log {
            return Err(Error::ImpossibleObservation { task_id });
        }
        total += rule.score(b, &forecast);
    }
    Ok(total)
}

/// Exact expectation of the per-task scoring gain under `prior`.
pub fn expected_ps_gain(
    h_a: &Hypothesis,
    v_b: &LikelihoodTable,
    prior: &TripletPrior,
    rule: ScoringRule,
) -> f64 {
    let joint = prior.induce_joint();
    let mut total = 0.0;
    for a in 0..prior.n_a() {
        let forecast = induced_forecast(h_a, v_b, a);
        for b in 0..prior.n_b() {
            total += joint.cell(a, b) * rule.score(b, &forecast);
        }
    }
    total
}

/// The log-rule ceiling `Σ_{a,b} Pr[a,b] ln Pr[b|a]`, attained at the truth
/// point `(posterior table, truth likelihood table)`.
pub fn log_likelihood_ceiling(prior: &TripletPrior) -> f64 {
    let joint = prior.induce_joint();
    let ma = joint.marginal_a();
    let mut total = 0.0;
    for a in 0..prior.n_a() {
        if ma[a] <= 0.0 {
            continue;
        }
        for b in 0..prior.n_b() {
            let cell = joint.cell(a, b);
            if cell > 0.0 {
                total += cell * (cell / ma[a]).ln();
            }
        }
    }
    total
}

/// Outcome of a scoring-gain maximization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsGainResult {
    pub h_a_star: Hypothesis,
    /// Raw table; satisfies the column constraint only when the optimizer ran
    /// in constrained mode.
    pub v_b_star: Vec<Vec<f64>>,
    pub objective: f64,
    pub constrained: bool,
    pub restart_errors: Vec<String>,
}

impl PsGainResult {
    /// Label permutation best aligning `(h_a_star, v_b_star)` with the truth
    /// point of `prior`, and the worst aligned total variation distance over
    /// posterior rows and likelihood columns.
    pub fn align_to_truth(&self, prior: &TripletPrior) -> Result<(Vec<usize>, f64)> {
        use itertools::Itertools;
        let n = prior.n_labels();
        if n > 8 {
            return Err(Error::PermutationSearchTooLarge(n));
        }
        let posts = Hypothesis::bayes(prior, View::A)?;
        let truth = LikelihoodTable::truth(prior);
        let cand_cols: Vec<Vec<f64>> = (0..n)
            .map(|y| self.v_b_star.iter().map(|r| r[y]).collect())
            .collect();
        let col_dist = |cand: &[f64], truth: &Simplex| -> f64 {
            // Columns of an unconstrained table may not normalize; compare raw
            // mass, which reduces to TV for valid tables.
            0.5 * cand
                .iter()
                .zip(truth.iter())
                .map(|(c, t)| (c - t).abs())
                .sum::<f64>()
        };
        let mut best: Option<(Vec<usize>, f64)> = None;
        for perm in (0..n).permutations(n) {
            let mut d = self.h_a_star.permuted(&perm).max_row_tv(&posts);
            for y in 0..n {
                d = d.max(col_dist(&cand_cols[perm[y]], &truth.column(y)));
            }
            if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                best = Some((perm, d));
            }
        }
        Ok(best.expect("at least one permutation"))
    }
}

/// Maximizes the exact expected scoring gain under `prior`.
///
/// In constrained mode the columns of `v_b` are parameterized by
/// exponentiation-and-normalization over `x_B`, so the column-sum constraint
/// holds by construction. Unconstrained mode (entries through a sigmoid)
/// exists to demonstrate the degenerate all-ones maximizer and makes no
/// recovery claim.
pub fn optimize_ps_gain(
    prior: &TripletPrior,
    rule: ScoringRule,
    cfg: &OptimizerConfig,
    constrained: bool,
) -> Result<PsGainResult> {
    let joint = prior.induce_joint();
    optimize_ps_core(
        joint.rows().to_vec(),
        prior.n_labels(),
        rule,
        cfg,
        constrained,
    )
}

/// Maximizes the empirical scoring gain over fully observed task samples.
pub fn optimize_ps_gain_empirical(
    samples: &[TaskSample],
    n_labels: usize,
    rule: ScoringRule,
    cfg: &OptimizerConfig,
    constrained: bool,
) -> Result<PsGainResult> {
    let pairs = paired_signals(samples)?;
    let n_a = pairs.iter().map(|&(_, a, _)| a).max().unwrap_or(0) + 1;
    let n_b = pairs.iter().map(|&(_, _, b)| b).max().unwrap_or(0) + 1;
    let mut weights = vec![vec![0.0; n_b]; n_a];
    for &(_, a, b) in &pairs {
        weights[a][b] += 1.0 / pairs.len() as f64;
    }
    optimize_ps_core(weights, n_labels, rule, cfg, constrained)
}

struct PsParams {
    /// `theta_h[a][y]`: scores of the forecaster rows.
    theta_h: Vec<Vec<f64>>,
    /// `theta_v[x_b][y]`: scores of the table, normalized per column
    /// (constrained) or squashed per entry (unconstrained).
    theta_v: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ps_materialize(params: &PsParams, constrained: bool) -> (Hypothesis, Vec<Vec<f64>>) {
    let h = Hypothesis::new(
        params
            .theta_h
            .iter()
            .map(|row| {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Simplex::from_weights(row.iter().map(|&t| (t - max).exp()).collect()).unwrap()
            })
            .collect(),
    )
    .expect("softmax rows are valid");
    let n_b = params.theta_v.len();
    let n_y = params.theta_v[0].len();
    let mut v = vec![vec![0.0; n_y]; n_b];
    if constrained {
        for y in 0..n_y {
            let max = params
                .theta_v
                .iter()
                .map(|r| r[y])
                .fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = params.theta_v.iter().map(|r| (r[y] - max).exp()).collect();
            let sum: f64 = weights.iter().sum();
            for (xb, w) in weights.iter().enumerate() {
                v[xb][y] = w / sum;
            }
        }
    } else {
        for (xb, row) in params.theta_v.iter().enumerate() {
            for (y, &t) in row.iter().enumerate() {
                v[xb][y] = sigmoid(t);
            }
        }
    }
    (h, v)
}

/// Objective and score-space gradient for a weight matrix over signal pairs.
fn ps_objective(
    weights: &[Vec<f64>],
    rule: ScoringRule,
    h: &Hypothesis,
    v: &[Vec<f64>],
) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_a = weights.len();
    let n_b = v.len();
    let n_y = h.n_labels();
    let mut value = 0.0;
    let mut dh = vec![vec![0.0; n_y]; n_a];
    let mut dv = vec![vec![0.0; n_y]; n_b];
    for a in 0..n_a {
        let w_a: f64 = weights[a].iter().sum();
        if w_a == 0.0 {
            continue;
        }
        let forecast: Vec<f64> = (0..n_b)
            .map(|xb| (0..n_y).map(|y| v[xb][y] * h.row(a)[y]).sum())
            .collect();
        // dG/dq_a(beta), per rule
        let coeff: Vec<f64> = match rule {
            ScoringRule::Log => (0..n_b)
                .map(|beta| weights[a][beta] / floored(forecast[beta]))
                .collect(),
            ScoringRule::Brier => (0..n_b)
                .map(|beta| 2.0 * weights[a][beta] - 2.0 * w_a * forecast[beta])
                .collect(),
        };
        for beta in 0..n_b {
            value += weights[a][beta] * rule.score(beta, &forecast);
        }
        for beta in 0..n_b {
            let c = coeff[beta];
            if c == 0.0 {
                continue;
            }
            for y in 0..n_y {
                dh[a][y] += c * v[beta][y];
                dv[beta][y] += c * h.row(a)[y];
            }
        }
    }
    (value, dh, dv)
}

fn ps_ascend(
    weights: &[Vec<f64>],
    n_labels: usize,
    rule: ScoringRule,
    cfg: &OptimizerConfig,
    constrained: bool,
    restart: usize,
) -> std::result::Result<(PsParams, f64), String> {
    let n_a = weights.len();
    let n_b = weights[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    };
    let mut params = PsParams {
        theta_h: (0..n_a).map(|_| draw(n_labels, &mut rng)).collect(),
        theta_v: (0..n_b).map(|_| draw(n_labels, &mut rng)).collect(),
    };

    let eval = |params: &PsParams| -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (h, v) = ps_materialize(params, constrained);
        let (value, dh_prob, dv_prob) = ps_objective(weights, rule, &h, &v);
        // chain to scores
        let mut dh = vec![vec![0.0; n_labels]; n_a];
        for a in 0..n_a {
            let inner: f64 = (0..n_labels).map(|y| dh_prob[a][y] * h.row(a)[y]).sum();
            for y in 0..n_labels {
                dh[a][y] = h.row(a)[y] * (dh_prob[a][y] - inner);
            }
        }
        let mut dv = vec![vec![0.0; n_labels]; n_b];
        if constrained {
            for y in 0..n_labels {
                let inner: f64 = (0..n_b).map(|xb| dv_prob[xb][y] * v[xb][y]).sum();
                for xb in 0..n_b {
                    dv[xb][y] = v[xb][y] * (dv_prob[xb][y] - inner);
                }
            }
        } else {
            for xb in 0..n_b {
                for y in 0..n_labels {
                    dv[xb][y] = dv_prob[xb][y] * v[xb][y] * (1.0 - v[xb][y]);
                }
            }
        }
        (value, dh, dv)
    };

    let objective_only = |params: &PsParams| -> f64 {
        let (h, v) = ps_materialize(params, constrained);
        ps_objective(weights, rule, &h, &v).0
    };

    let (mut value, mut dh, mut dv) = eval(&params);
    if !value.is_finite() {
        return Err(format!("restart {restart}: non-finite objective at init"));
    }
    for _ in 0..cfg.max_iters {
        let grad_norm: f64 = dh
            .iter()
            .chain(dv.iter())
            .flat_map(|r| r.iter())
            .map(|g| g * g)
            .sum();
        if grad_norm == 0.0 {
            break;
        }
        let mut step = cfg.step_size;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = PsParams {
                theta_h: params
                    .theta_h
                    .iter()
                    .zip(&dh)
                    .map(|(row, g)| row.iter().zip(g).map(|(t, gi)| t + step * gi).collect())
                    .collect(),
                theta_v: params
                    .theta_v
                    .iter()
                    .zip(&dv)
                    .map(|(row, g)| row.iter().zip(g).map(|(t, gi)| t + step * gi).collect())
                    .collect(),
            };
            let trial_value = objective_only(&trial);
            if !trial_value.is_finite() {
                return Err(format!("restart {restart}: non-finite objective during ascent"));
            }
            if trial_value >= value {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, trial_value)) = accepted else { break };
        let improvement = trial_value - value;
        params = trial;
        let refreshed = eval(&params);
        value = refreshed.0;
        dh = refreshed.1;
        dv = refreshed.2;
        if improvement < cfg.tolerance {
            break;
        }
    }
    Ok((params, value))
}

fn optimize_ps_core(
    weights: Vec<Vec<f64>>,
    n_labels: usize,
    rule: ScoringRule,
    cfg: &OptimizerConfig,
    constrained: bool,
) -> Result<PsGainResult> {
    if weights.is_empty() || n_labels == 0 {
        return Err(Error::InvalidConfig("empty problem".into()));
    }
    if weights[0].len() > MAX_SIGMA_B {
        return Err(Error::SignalSpaceTooLarge(weights[0].len(), MAX_SIGMA_B));
    }
    let outcomes: Vec<std::result::Result<(PsParams, f64), String>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| ps_ascend(&weights, n_labels, rule, cfg, constrained, restart))
        .collect();
    let restart_errors: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().cloned())
        .collect();
    let best = outcomes
        .into_iter()
        .flatten()
        .reduce(|best, cand| if cand.1 > best.1 { cand } else { best });
    let Some((params, objective)) = best else {
        return Err(Error::OptimizationFailed(restart_errors.join("; ")));
    };
    let (h_a_star, v_b_star) = ps_materialize(&params, constrained);
    Ok(PsGainResult {
        h_a_star,
        v_b_star,
        objective,
        constrained,
        restart_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior_analysis::{generate_prior, generate_separable_prior};

    #[test]
    fn identity_table_and_matching_point_masses_score_zero() {
        // |Σ_B| = |Σ|, v_b the identity, h_a point masses matching the
        // observed x_B on every task: each dot product is 1.
        let v_b = LikelihoodTable::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h_a = Hypothesis::new(vec![Simplex::point_mass(2, 0), Simplex::point_mass(2, 1)])
            .unwrap();
        let samples = vec![TaskSample::both(0, 0, 0), TaskSample::both(1, 1, 1)];
        assert_eq!(lsr_gain(&h_a, &v_b, &samples).unwrap(), 0.0);
    }

    #[test]
    fn single_task_log_of_dot() {
        let v_b = LikelihoodTable::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let h_a = Hypothesis::new(vec![Simplex::uniform(2)]).unwrap();
        let samples = vec![TaskSample::both(0, 0, 1)];
        let gain = lsr_gain(&h_a, &v_b, &samples).unwrap();
        assert!((gain - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_dot_product_is_an_error() {
        let v_b = LikelihoodTable::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h_a = Hypothesis::new(vec![Simplex::point_mass(2, 1)]).unwrap();
        let samples = vec![TaskSample::both(7, 0, 0)];
        assert!(matches!(
            lsr_gain(&h_a, &v_b, &samples),
            Err(Error::ImpossibleObservation { task_id: 7 })
        ));
    }

    #[test]
    fn missing_signal_is_an_error() {
        let v_b = LikelihoodTable::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let h_a = Hypothesis::new(vec![Simplex::uniform(2)]).unwrap();
        let samples = vec![TaskSample::a_only(0, 0)];
        assert!(lsr_gain(&h_a, &v_b, &samples).is_err());
    }

    #[test]
    fn truth_point_attains_the_log_ceiling_exactly() {
        let prior = generate_prior(4, 3, 2, 31, 1.0, false).unwrap();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let v_b = LikelihoodTable::truth(&prior);
        let expected = expected_ps_gain(&h_a, &v_b, &prior, ScoringRule::Log);
        let ceiling = log_likelihood_ceiling(&prior);
        assert!((expected - ceiling).abs() <= 1e-12, "{expected} vs {ceiling}");
    }

    #[test]
    fn log_rule_gain_equals_lsr_gain() {
        let prior = generate_prior(3, 3, 2, 5, 1.0, false).unwrap();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let v_b = LikelihoodTable::truth(&prior);
        let samples = crate::dist::sample_tasks(&prior, 50, 50, 9).unwrap();
        let a = lsr_gain(&h_a, &v_b, &samples).unwrap();
        let b = ps_gain(&h_a, &v_b, &samples, ScoringRule::Log).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn brier_truth_point_matches_enumerated_expectation() {
        let prior = crate::dist::tests::demo_prior();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let v_b = LikelihoodTable::truth(&prior);
        let got = expected_ps_gain(&h_a, &v_b, &prior, ScoringRule::Brier);
        // Oracle: Σ_a Pr[a] * BrierScore(Pr[X_B|a], itself), enumerated
        // directly from the joint.
        let joint = prior.induce_joint();
        let ma = joint.marginal_a();
        let mut expect = 0.0;
        for a in 0..2 {
            let cond: Vec<f64> = (0..2).map(|b| joint.cell(a, b) / ma[a]).collect();
            let self_score: f64 = cond.iter().map(|&p| p * p).sum();
            expect += ma[a] * self_score;
        }
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn uniform_forecast_scores_identically_at_any_observation() {
        let q = vec![0.25; 4];
        let scores: Vec<f64> = (0..4).map(|b| ScoringRule::Brier.score(b, &q)).collect();
        for s in &scores {
            assert!((s - scores[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn strict_propriety_on_deviation_grid() {
        let truth = vec![0.65, 0.35];
        for rule in [ScoringRule::Log, ScoringRule::Brier] {
            let honest = rule.expected_score(&truth, &truth);
            for k in 0..=20 {
                let q0 = k as f64 / 20.0;
                let report = vec![q0, 1.0 - q0];
                let scored = rule.expected_score(&truth, &report);
                if (q0 - truth[0]).abs() > 1e-9 {
                    assert!(scored < honest, "{}: report {q0} not strictly worse", rule.name());
                }
            }
        }
    }

    #[test]
    fn induced_forecast_is_uniquely_best_on_a_grid() {
        // For each x_A the expected score under Pr[X_B | x_A] is uniquely
        // maximized at the true conditional, swept over a binary forecast grid.
        let prior = generate_prior(2, 2, 2, 8, 1.0, false).unwrap();
        let joint = prior.induce_joint();
        let ma = joint.marginal_a();
        for rule in [ScoringRule::Log, ScoringRule::Brier] {
            for a in 0..2 {
                let truth: Vec<f64> = (0..2).map(|b| joint.cell(a, b) / ma[a]).collect();
                let best = rule.expected_score(&truth, &truth);
                for k in 0..=20 {
                    let q = vec![k as f64 / 20.0, 1.0 - k as f64 / 20.0];
                    if (q[0] - truth[0]).abs() > 1e-9 {
                        assert!(
                            rule.expected_score(&truth, &q) < best,
                            "{}: grid forecast {q:?} not strictly worse",
                            rule.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn constraint_deviation_values() {
        let valid = LikelihoodTable::truth(&crate::dist::tests::demo_prior());
        assert!(valid.check_constraint() <= 1e-9);
        let all_ones = vec![vec![1.0, 1.0]; 4];
        assert!((column_sum_deviation(&all_ones) - 3.0).abs() < 1e-12);
        let halved: Vec<Vec<f64>> = valid.rows().iter()
            .map(|r| r.iter().map(|v| 0.5 * v).collect())
            .collect();
        assert!((column_sum_deviation(&halved) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_breaks_constraint_and_lowers_gain() {
        let prior = generate_prior(3, 3, 2, 13, 1.0, false).unwrap();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let truth = LikelihoodTable::truth(&prior);
        let scaled: Vec<Vec<f64>> = truth.rows().iter()
            .map(|r| r.iter().map(|v| 0.5 * v).collect())
            .collect();
        assert!((column_sum_deviation(&scaled) - 0.5).abs() < 1e-12);
        // Evaluate the expectation with the scaled table directly.
        let joint = prior.induce_joint();
        let mut scaled_gain = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..2).map(|y| scaled[b][y] * h_a.row(a)[y]).sum();
                scaled_gain += joint.cell(a, b) * dot.ln();
            }
        }
        let honest = expected_ps_gain(&h_a, &truth, &prior, ScoringRule::Log);
        assert!(scaled_gain < honest - 1e-6);
    }

    #[test]
    fn wide_b_space_is_rejected() {
        let big = LikelihoodTable::new(vec![vec![1.0 / 5000.0]; 5000]).unwrap();
        let h_a = Hypothesis::new(vec![Simplex::uniform(1)]).unwrap();
        assert!(matches!(
            ps_gain(&h_a, &big, &[TaskSample::both(0, 0, 0)], ScoringRule::Brier),
            Err(Error::SignalSpaceTooLarge(5000, MAX_SIGMA_B))
        ));
    }

    #[test]
    fn exact_mode_recovers_truth_point_up_to_permutation() {
        // Interior instances leave a relabeling gauge in the factorization;
        // anchor signals pin it, making recovery well posed.
        let prior = generate_separable_prior(4, 4, 2, 3, 1.0, 0.02, true).unwrap();
        let cfg = OptimizerConfig {
            restarts: 8,
            max_iters: 3000,
            seed: 17,
            ..OptimizerConfig::default()
        };
        let result = optimize_ps_gain(&prior, ScoringRule::Log, &cfg, true).unwrap();
        let ceiling = log_likelihood_ceiling(&prior);
        assert!(
            (result.objective - ceiling).abs() <= 1e-6,
            "objective {} vs ceiling {}",
            result.objective,
            ceiling
        );
        let (_, tv) = result.align_to_truth(&prior).unwrap();
        assert!(tv <= 0.05, "aligned tv {tv}");
    }

    #[test]
    fn unconstrained_mode_drifts_to_the_meaningless_maximizer() {
        let prior = generate_prior(3, 3, 2, 11, 1.0, true).unwrap();
        let cfg = OptimizerConfig {
            restarts: 4,
            max_iters: 4000,
            seed: 2,
            ..OptimizerConfig::default()
        };
        let result = optimize_ps_gain(&prior, ScoringRule::Log, &cfg, false).unwrap();
        let ceiling = log_likelihood_ceiling(&prior);
        // The objective escapes the constrained ceiling and approaches its
        // useless supremum at zero from below.
        assert!(result.objective > ceiling + 1e-3);
        assert!(result.objective <= 1e-9);
        assert!(result.objective > -0.05);
        // And the recovered table is near all-ones, far from the constraint.
        assert!(column_sum_deviation(&result.v_b_star) > 1.0);
    }
}
