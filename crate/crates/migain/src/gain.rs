//! The mutual-information-gain estimator: the agreement reward, the empirical
//! gain over paired and unpaired task samples, and the exact expected gain by
//! enumeration.
//!
//! For forecasts `p1`, `p2` and a reference label distribution `p`, the
//! agreement is `Σ_y p1(y) p2(y) / p(y)` and the reward is a chosen
//! subgradient `g` of that agreement. The gain rewards same-task agreement and
//! punishes cross-task agreement through the conjugate:
//!
//! ```text
//! gain = mean_{tasks with both signals} g(agreement)
//!      - mean_{ordered pairs of distinct tasks} f*(g(agreement))
//! ```
//!
//! Cross pairs are ordered (a task from A's set against a task from B's set)
//! and keyed by task id, so repeating every sample leaves the gain unchanged.
//! Both means are over the number of terms actually summed, which makes the
//! estimator unbiased for the f-mutual information under i.i.d. tasks.

use serde::{Deserialize, Serialize};

use crate::dist::{TaskSample, TripletPrior, View};
use crate::divergence::Divergence;
use crate::simplex::Simplex;
use crate::{floored, Error, Result};

/// A tabular predictor: one forecast over the label set per input signal.
///
/// Houses learned hypotheses, Bayesian posterior predictors, and the
/// strategy-induced predictors of the elicitation mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Hypothesis {
    rows: Vec<Simplex>,
}

impl TryFrom<Vec<Vec<f64>>> for Hypothesis {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Hypothesis::new(rows.into_iter().map(Simplex::new).collect::<Result<_>>()?)
    }
}

impl From<Hypothesis> for Vec<Vec<f64>> {
    fn from(h: Hypothesis) -> Vec<Vec<f64>> {
        h.rows.into_iter().map(Vec::from).collect()
    }
}

impl Hypothesis {
    pub fn new(rows: Vec<Simplex>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDistribution("hypothesis with no rows".into()));
        }
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(Error::InvalidDistribution(
                "hypothesis rows have unequal widths".into(),
            ));
        }
        Ok(Hypothesis { rows })
    }

    /// The predictor that ignores its signal and always forecasts `forecast`.
    pub fn constant(n_signals: usize, forecast: Simplex) -> Self {
        Hypothesis {
            rows: vec![forecast; n_signals],
        }
    }

    /// The Bayesian posterior predictor of one view under `prior`.
    pub fn bayes(prior: &TripletPrior, view: View) -> Result<Self> {
        let rows = (0..prior.n_signals(view))
            .map(|x| prior.posterior(view, x))
            .collect::<Result<Vec<_>>>()?;
        Hypothesis::new(rows)
    }

    pub fn n_signals(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &Simplex {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Simplex] {
        &self.rows
    }

    /// Applies the same label relabeling to every row; output position `y`
    /// holds the old entry `perm[y]`.
    pub fn permuted(&self, perm: &[usize]) -> Hypothesis {
        Hypothesis {
            rows: self.rows.iter().map(|r| r.permuted(perm)).collect(),
        }
    }

    /// Largest row-wise total variation distance to `other`.
    pub fn max_row_tv(&self, other: &Hypothesis) -> f64 {
        self.rows
            .iter()
            .zip(other.rows.iter())
            .map(|(a, b)| a.tv_distance(b))
            .fold(0.0, f64::max)
    }
}

/// The agreement `Σ_y p1(y) p2(y) / p(y)` between two forecasts, with the
/// probability floor applied to the reference distribution.
pub fn agreement(p1: &Simplex, p2: &Simplex, p: &Simplex) -> f64 {
    debug_assert_eq!(p1.len(), p2.len());
    debug_assert_eq!(p1.len(), p.len());
    (0..p1.len()).map(|y| p1[y] * p2[y] / floored(p[y])).sum()
}

/// The reward `g(agreement(p1, p2, p))` for the chosen divergence.
pub fn reward(div: Divergence, p1: &Simplex, p2: &Simplex, p: &Simplex) -> f64 {
    div.subgradient(floored(agreement(p1, p2, p)))
}

/// One task's realized forecast pair for gain evaluation; at least one side is
/// present, pairing is by `task_id`.
#[derive(Debug, Clone)]
pub struct ForecastTask {
    pub task_id: u64,
    pub forecast_a: Option<Simplex>,
    pub forecast_b: Option<Simplex>,
}

/// Gain of realized per-task forecasts: the same-task mean of `g(agreement)`
/// minus the cross-task mean of `f*(g(agreement))` over ordered pairs with
/// distinct task ids.
///
/// Errors when no task carries both forecasts or no cross pair exists.
pub fn forecast_gain(div: Divergence, tasks: &[ForecastTask], p: &Simplex) -> Result<f64> {
    let list_a: Vec<(u64, &Simplex)> = tasks
        .iter()
        .filter_map(|t| t.forecast_a.as_ref().map(|f| (t.task_id, f)))
        .collect();
    let list_b: Vec<(u64, &Simplex)> = tasks
        .iter()
        .filter_map(|t| t.forecast_b.as_ref().map(|f| (t.task_id, f)))
        .collect();

    let mut same_sum = 0.0;
    let mut same_n = 0usize;
    for t in tasks {
        if let (Some(fa), Some(fb)) = (&t.forecast_a, &t.forecast_b) {
            same_sum += div.subgradient(floored(agreement(fa, fb, p)));
            same_n += 1;
        }
    }
    if same_n == 0 {
        return Err(Error::InsufficientTaskStructure(
            "no task carries both forecasts",
        ));
    }

    let mut cross_sum = 0.0;
    let mut cross_n = 0usize;
    for &(id_a, fa) in &list_a {
        for &(id_b, fb) in &list_b {
            if id_a == id_b {
                continue;
            }
            cross_sum += div.conj_of_g(floored(agreement(fa, fb, p)));
            cross_n += 1;
        }
    }
    if cross_n == 0 {
        return Err(Error::InsufficientTaskStructure(
            "no cross pair of distinct tasks",
        ));
    }

    Ok(same_sum / same_n as f64 - cross_sum / cross_n as f64)
}

/// Pair of weight tables over signal pairs: `same` weights the rewarded term,
/// `cross` weights the conjugated term. Each sums to one.
///
/// The exact objective uses (induced joint, product of marginals); the
/// empirical objective uses the observed task frequencies.
#[derive(Debug, Clone)]
pub(crate) struct GainWeights {
    pub same: Vec<Vec<f64>>,
    pub cross: Vec<Vec<f64>>,
}

impl GainWeights {
    pub fn from_prior(prior: &TripletPrior) -> Self {
        let joint = prior.induce_joint();
        let product = joint.product_of_marginals();
        GainWeights {
            same: joint.rows().to_vec(),
            cross: product.rows().to_vec(),
        }
    }

    /// Groups task samples by signal pair. Same-task weights count tasks that
    /// carry both signals; cross weights count ordered pairs with distinct
    /// task ids, so duplicated samples rescale both numerator and denominator.
    pub fn from_samples(samples: &[TaskSample], n_a: usize, n_b: usize) -> Result<Self> {
        use std::collections::HashMap;

        let mut same = vec![vec![0.0; n_b]; n_a];
        let mut same_n = 0usize;
        let mut count_a = vec![0.0; n_a];
        let mut count_b = vec![0.0; n_b];
        // Per-id signal counts, to subtract same-id pairs from the cross term.
        let mut per_id: HashMap<u64, (Vec<f64>, Vec<f64>)> = HashMap::new();
        let mut n_list_a = 0usize;
        let mut n_list_b = 0usize;

        for s in samples {
            let entry = per_id
                .entry(s.task_id)
                .or_insert_with(|| (vec![0.0; n_a], vec![0.0; n_b]));
            if let Some(a) = s.x_a {
                if a >= n_a {
                    return Err(Error::LengthMismatch(a, n_a));
                }
                count_a[a] += 1.0;
                entry.0[a] += 1.0;
                n_list_a += 1;
            }
            if let Some(b) = s.x_b {
                if b >= n_b {
                    return Err(Error::LengthMismatch(b, n_b));
                }
                count_b[b] += 1.0;
                entry.1[b] += 1.0;
                n_list_b += 1;
            }
            if let (Some(a), Some(b)) = (s.x_a, s.x_b) {
                same[a][b] += 1.0;
                same_n += 1;
            }
        }
        if same_n == 0 {
            return Err(Error::InsufficientTaskStructure(
                "no task carries both signals",
            ));
        }

        let mut cross = vec![vec![0.0; n_b]; n_a];
        for a in 0..n_a {
            for b in 0..n_b {
                cross[a][b] = count_a[a] * count_b[b];
            }
        }
        let mut same_id_pairs = 0.0;
        for (ca, cb) in per_id.values() {
            for a in 0..n_a {
                if ca[a] == 0.0 {
                    continue;
                }
                for b in 0..n_b {
                    cross[a][b] -= ca[a] * cb[b];
                    same_id_pairs += ca[a] * cb[b];
                }
            }
        }
        let cross_n = n_list_a as f64 * n_list_b as f64 - same_id_pairs;
        if cross_n <= 0.0 {
            return Err(Error::InsufficientTaskStructure(
                "no cross pair of distinct tasks",
            ));
        }

        for row in same.iter_mut() {
            for v in row.iter_mut() {
                *v /= same_n as f64;
            }
        }
        for row in cross.iter_mut() {
            for v in row.iter_mut() {
                *v /= cross_n;
            }
        }
        Ok(GainWeights { same, cross })
    }
}

/// Objective shared by the exact and empirical paths:
/// `Σ_{a,b} same[a][b] g(S(a,b)) - cross[a][b] f*(g(S(a,b)))` with
/// `S(a,b) = agreement(h_a(a), h_b(b), p)`.
pub(crate) fn weighted_gain(
    div: Divergence,
    h_a: &Hypothesis,
    h_b: &Hypothesis,
    p: &Simplex,
    w: &GainWeights,
) -> f64 {
    let mut total = 0.0;
    for a in 0..h_a.n_signals() {
        for b in 0..h_b.n_signals() {
            let s = floored(agreement(h_a.row(a), h_b.row(b), p));
            total += w.same[a][b] * div.subgradient(s) - w.cross[a][b] * div.conj_of_g(s);
        }
    }
    total
}

/// Gradient of [`weighted_gain`] in probability space.
pub(crate) struct GainGradient {
    /// d gain / d h_a[a][y]
    pub h_a: Vec<Vec<f64>>,
    /// d gain / d h_b[b][y]
    pub h_b: Vec<Vec<f64>>,
    /// d gain / d p[y]
    pub p: Vec<f64>,
}

pub(crate) fn weighted_gain_with_grad(
    div: Divergence,
    h_a: &Hypothesis,
    h_b: &Hypothesis,
    p: &Simplex,
    w: &GainWeights,
) -> (f64, GainGradient) {
    let n_y = p.len();
    let mut total = 0.0;
    let mut grad = GainGradient {
        h_a: vec![vec![0.0; n_y]; h_a.n_signals()],
        h_b: vec![vec![0.0; n_y]; h_b.n_signals()],
        p: vec![0.0; n_y],
    };
    for a in 0..h_a.n_signals() {
        let ra = h_a.row(a);
        for b in 0..h_b.n_signals() {
            let rb = h_b.row(b);
            let s = floored(agreement(ra, rb, p));
            total += w.same[a][b] * div.subgradient(s) - w.cross[a][b] * div.conj_of_g(s);
            // d total / d S at this signal pair
            let ds = w.same[a][b] * div.subgradient_slope(s)
                - w.cross[a][b] * div.conj_of_g_slope(s);
            if ds == 0.0 {
                continue;
            }
            for y in 0..n_y {
                let py = floored(p[y]);
                grad.h_a[a][y] += ds * rb[y] / py;
                grad.h_b[b][y] += ds * ra[y] / py;
                grad.p[y] -= ds * ra[y] * rb[y] / (py * py);
            }
        }
    }
    (total, grad)
}

/// Empirical gain of the hypotheses on a set of task samples.
///
/// Equals [`forecast_gain`] on the forecasts the hypotheses produce for each
/// task, computed by grouping tasks with equal signal pairs.
pub fn empirical_gain(
    div: Divergence,
    h_a: &Hypothesis,
    h_b: &Hypothesis,
    p: &Simplex,
    samples: &[TaskSample],
) -> Result<f64> {
    let w = GainWeights::from_samples(samples, h_a.n_signals(), h_b.n_signals())?;
    Ok(weighted_gain(div, h_a, h_b, p, &w))
}

/// Exact expected gain under `prior`: the rewarded term weighted by the
/// induced joint minus the conjugated term weighted by the product of
/// marginals.
///
/// At `(posterior_A, posterior_B, prior_y)` this equals the f-mutual
/// information of the induced joint; it never exceeds that value.
pub fn expected_gain(
    div: Divergence,
    h_a: &Hypothesis,
    h_b: &Hypothesis,
    p: &Simplex,
    prior: &TripletPrior,
) -> f64 {
    weighted_gain(div, h_a, h_b, p, &GainWeights::from_prior(prior))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::divergence::ALL_DIVERGENCES;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn s(v: Vec<f64>) -> Simplex {
        Simplex::new(v).unwrap()
    }

    /// The three-task worked example: forecasts for tasks 0..3 on both sides,
    /// uniform binary reference.
    pub(crate) fn three_task_fixture() -> (Hypothesis, Hypothesis, Simplex, Vec<TaskSample>) {
        let h_a = Hypothesis::new(vec![
            s(vec![0.7, 0.3]),
            s(vec![0.1, 0.9]),
            s(vec![0.5, 0.5]),
        ])
        .unwrap();
        let h_b = Hypothesis::new(vec![
            s(vec![0.6, 0.4]),
            s(vec![0.2, 0.8]),
            s(vec![0.4, 0.6]),
        ])
        .unwrap();
        let p = Simplex::uniform(2);
        let samples = (0..3).map(|i| TaskSample::both(i, i as usize, i as usize)).collect();
        (h_a, h_b, p, samples)
    }

    /// Independent oracle for the three-task example: direct arithmetic on the
    /// definition, no shared code with the estimator.
    pub(crate) fn three_task_oracle_kl() -> f64 {
        let fa = [[0.7, 0.3], [0.1, 0.9], [0.5, 0.5]];
        let fb = [[0.6, 0.4], [0.2, 0.8], [0.4, 0.6]];
        let inner = |i: usize, j: usize| -> f64 { 2.0 * (fa[i][0] * fb[j][0] + fa[i][1] * fb[j][1]) };
        let mut same = 0.0;
        for i in 0..3 {
            same += 1.0 + inner(i, i).ln();
        }
        let mut cross = 0.0;
        let mut n = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    // f*(1 + ln s) = e^{ln s} = s for the KL pair
                    cross += inner(i, j);
                    n += 1.0;
                }
            }
        }
        same / 3.0 - cross / n
    }

    #[test]
    fn reward_equal_forecasts_give_g_of_one() {
        let p = s(vec![0.3, 0.7]);
        for d in ALL_DIVERGENCES {
            let r = reward(d, &p, &p, &p);
            assert!((r - d.subgradient(1.0)).abs() < 1e-12, "{d}");
        }
        assert!((reward(Divergence::Kl, &p, &p, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_hand_values() {
        let p1 = s(vec![0.7, 0.3]);
        let p2 = s(vec![0.6, 0.4]);
        let p = Simplex::uniform(2);
        let kl = reward(Divergence::Kl, &p1, &p2, &p);
        assert!((kl - (1.0 + 1.08f64.ln())).abs() < 1e-12);
        assert!((kl - 1.0770).abs() < 1e-4);
        let pearson = reward(Divergence::Pearson, &p1, &p2, &p);
        assert!((pearson - 0.16).abs() < 1e-12);
    }

    #[test]
    fn constant_predictors_earn_zero_kl_gain() {
        let p = s(vec![0.4, 0.6]);
        let h_a = Hypothesis::constant(3, p.clone());
        let h_b = Hypothesis::constant(3, p.clone());
        let samples: Vec<_> = (0..3).map(|i| TaskSample::both(i, i as usize, i as usize)).collect();
        let gain = empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &samples).unwrap();
        assert!(gain.abs() < 1e-12);
    }

    #[test]
    fn three_task_worked_example_kl() {
        let (h_a, h_b, p, samples) = three_task_fixture();
        let gain = empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &samples).unwrap();
        assert!((gain - three_task_oracle_kl()).abs() < 1e-12);
        assert!((gain - 0.2097).abs() < 1e-4);
    }

    #[test]
    fn empirical_gain_is_pure() {
        let (h_a, h_b, p, samples) = three_task_fixture();
        let g1 = empirical_gain(Divergence::Pearson, &h_a, &h_b, &p, &samples).unwrap();
        let g2 = empirical_gain(Divergence::Pearson, &h_a, &h_b, &p, &samples).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn grouped_weights_match_direct_pairing() {
        // Partial overlap with some repeated signal values; compare the
        // grouped evaluation against forecast_gain's double loop.
        let (h_a, h_b, p, _) = three_task_fixture();
        let samples = vec![
            TaskSample::both(0, 0, 1),
            TaskSample::both(1, 2, 0),
            TaskSample::a_only(2, 0),
            TaskSample::b_only(3, 1),
            TaskSample::a_only(4, 1),
        ];
        let tasks: Vec<ForecastTask> = samples
            .iter()
            .map(|t| ForecastTask {
                task_id: t.task_id,
                forecast_a: t.x_a.map(|a| h_a.row(a).clone()),
                forecast_b: t.x_b.map(|b| h_b.row(b).clone()),
            })
            .collect();
        for d in ALL_DIVERGENCES {
            let grouped = empirical_gain(d, &h_a, &h_b, &p, &samples).unwrap();
            let direct = forecast_gain(d, &tasks, &p).unwrap();
            assert!((grouped - direct).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn duplicating_every_sample_leaves_gain_unchanged() {
        let (h_a, h_b, p, mut samples) = three_task_fixture();
        samples.push(TaskSample::a_only(3, 1));
        samples.push(TaskSample::b_only(4, 2));
        let before = empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &samples).unwrap();
        let mut doubled = samples.clone();
        doubled.extend(samples.iter().cloned());
        let after = empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &doubled).unwrap();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn insufficient_structure_errors() {
        let (h_a, h_b, p, _) = three_task_fixture();
        // No task with both signals.
        let only_a = vec![TaskSample::a_only(0, 0), TaskSample::b_only(1, 1)];
        // One shared task and nothing else: no cross pair.
        let single = vec![TaskSample::both(0, 0, 0)];
        for samples in [only_a, single] {
            assert!(matches!(
                empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &samples),
                Err(Error::InsufficientTaskStructure(_))
            ));
        }
        // Minimal valid structure: one shared task plus one extra A-only task.
        let minimal = vec![TaskSample::both(0, 0, 0), TaskSample::a_only(1, 1)];
        assert!(empirical_gain(Divergence::Kl, &h_a, &h_b, &p, &minimal).is_ok());
    }

    #[test]
    fn expected_gain_at_posteriors_equals_mutual_information() {
        let prior = crate::dist::tests::demo_prior();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let h_b = Hypothesis::bayes(&prior, View::B).unwrap();
        let joint = prior.induce_joint();
        for d in ALL_DIVERGENCES {
            let gain = expected_gain(d, &h_a, &h_b, prior.prior_y(), &prior);
            let mi = d.mutual_information(&joint);
            assert!((gain - mi).abs() <= 1e-12, "{d}: {gain} vs {mi}");
        }
    }

    #[test]
    fn expected_gain_of_constant_predictors_is_zero_for_kl() {
        let prior = crate::dist::tests::demo_prior();
        let p = prior.prior_y().clone();
        let h_a = Hypothesis::constant(2, p.clone());
        let h_b = Hypothesis::constant(2, p.clone());
        let gain = expected_gain(Divergence::Kl, &h_a, &h_b, &p, &prior);
        assert!(gain.abs() < 1e-15);
    }

    #[test]
    fn perturbed_posteriors_fall_strictly_below_mutual_information() {
        let prior = crate::dist::tests::demo_prior();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let h_b = Hypothesis::bayes(&prior, View::B).unwrap();
        let mi = Divergence::Kl.mutual_information(&prior.induce_joint());
        for _ in 0..20 {
            let mut jitter = |h: &Hypothesis| {
                Hypothesis::new(
                    h.rows()
                        .iter()
                        .map(|r| {
                            let w: Vec<f64> = r
                                .iter()
                                .map(|&v| (v + 0.05 * rng.random::<f64>()).max(1e-6))
                                .collect();
                            Simplex::from_weights(w).unwrap()
                        })
                        .collect(),
                )
                .unwrap()
            };
            let gain =
                expected_gain(Divergence::Kl, &jitter(&h_a), &jitter(&h_b), prior.prior_y(), &prior);
            assert!(gain < mi - 1e-8);
            assert!(gain <= mi + 1e-10);
        }
    }

    #[test]
    fn expected_gain_invariant_under_shared_label_permutation() {
        let prior = crate::prior_analysis::generate_prior(4, 4, 3, 21, 1.0, false).unwrap();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let h_b = Hypothesis::bayes(&prior, View::B).unwrap();
        let p = prior.prior_y().clone();
        let perm = [2usize, 0, 1];
        let p_perm = p.permuted(&perm);
        for d in ALL_DIVERGENCES {
            let base = expected_gain(d, &h_a, &h_b, &p, &prior);
            let permuted = expected_gain(
                d,
                &h_a.permuted(&perm),
                &h_b.permuted(&perm),
                &p_perm,
                &prior,
            );
            assert!((base - permuted).abs() <= 1e-12, "{d}");
        }
    }

    #[test]
    fn empirical_gain_mean_tracks_expected_gain() {
        // Unbiasedness smoke check at moderate n; the acceptance suite runs
        // the full 3-sigma version.
        let prior = crate::dist::tests::demo_prior();
        let h_a = Hypothesis::bayes(&prior, View::A).unwrap();
        let h_b = Hypothesis::bayes(&prior, View::B).unwrap();
        let exact = expected_gain(Divergence::Kl, &h_a, &h_b, prior.prior_y(), &prior);
        let draws = 300;
        let mut values = Vec::with_capacity(draws);
        for seed in 0..draws {
            let samples = crate::dist::sample_tasks(&prior, 100, 100, seed as u64).unwrap();
            values
                .push(empirical_gain(Divergence::Kl, &h_a, &h_b, prior.prior_y(), &samples).unwrap());
        }
        let mean = values.iter().sum::<f64>() / draws as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (draws - 1) as f64;
        let stderr = (var / draws as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * stderr,
            "mean {mean} vs exact {exact} (stderr {stderr})"
        );
    }
}
