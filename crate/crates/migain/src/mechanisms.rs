//! Forecast elicitation without verification: the single-task log-agreement
//! payment, the multi-task gain payment, strategy modeling, and brute-force
//! equilibrium sweeps over a discretized report space.
//!
//! Two agents hold conditionally independent signals about the same latent
//! label and report forecasts for it. The single-task rule pays both agents
//! `log Σ_y r_A(y) r_B(y) / Pr[Y=y]`; against a truthful opponent this scores
//! the induced forecast of the opponent's signal with the log rule, so
//! truth-telling is an equilibrium, strictly so on stable priors. The
//! multi-task rule pays the realized forecast gain, whose truthful expectation
//! is the f-mutual information between the signals; no strategy profile pays
//! more, and on the sweep grid every non-permutation profile pays strictly
//! less.
//!
//! Relabeling the outcome space fools both rules by construction, so
//! "permutation" profiles tie truth-telling; the sweep reports them
//! separately. A grid sweep is a finite certificate, not a proof over the
//! continuous strategy space; reports say so.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{TripletPrior, View};
use crate::divergence::Divergence;
use crate::gain::{agreement, forecast_gain, ForecastTask, Hypothesis};
use crate::prior_analysis::simplex_grid;
use crate::simplex::Simplex;
use crate::{floored, Error, Result};

/// Pays both agents `ln Σ_y r_a(y) r_b(y) / prior_y(y)` (natural log).
///
/// Errors when the prior is not strictly positive or the inner sum vanishes.
pub fn single_task_payment(
    report_a: &Simplex,
    report_b: &Simplex,
    prior_y: &Simplex,
) -> Result<f64> {
    if !prior_y.is_strictly_positive() {
        return Err(Error::InvalidDistribution(
            "prior_y must have full support".into(),
        ));
    }
    if report_a.len() != prior_y.len() || report_b.len() != prior_y.len() {
        return Err(Error::LengthMismatch(report_a.len(), prior_y.len()));
    }
    let inner = agreement(report_a, report_b, prior_y);
    if inner <= 0.0 {
        return Err(Error::IncompatibleForecasts);
    }
    Ok(inner.ln())
}

/// The multi-task payment: the realized forecast gain of the reports, with
/// the reference vector fixed to the label prior. Both agents receive the
/// same amount.
///
/// Requires a differentiable generator (total variation is rejected); task
/// structure errors as in the gain estimator.
pub fn mcg_payment(div: Divergence, tasks: &[ForecastTask], prior_y: &Simplex) -> Result<f64> {
    if !div.derivative_invertible() {
        return Err(Error::InvalidConfig(
            "the multi-task mechanism needs a differentiable generator".into(),
        ));
    }
    forecast_gain(div, tasks, prior_y)
}

/// A (possibly mixed) reporting strategy: for each private signal, a finite
/// mixture over report vectors. Reports depend only on the signal, never the
/// task index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    mixtures: Vec<Vec<(f64, Simplex)>>,
}

impl Strategy {
    /// One deterministic report per signal.
    pub fn pure(reports: Vec<Simplex>) -> Self {
        Strategy {
            mixtures: reports.into_iter().map(|r| vec![(1.0, r)]).collect(),
        }
    }

    /// Mixture weights must be nonnegative and sum to one per signal.
    pub fn mixed(mixtures: Vec<Vec<(f64, Simplex)>>) -> Result<Self> {
        for mixture in &mixtures {
            if mixture.is_empty() {
                return Err(Error::InvalidDistribution("empty mixture".into()));
            }
            let total: f64 = mixture.iter().map(|(w, _)| *w).sum();
            if (total - 1.0).abs() > 1e-9 || mixture.iter().any(|(w, _)| *w < 0.0) {
                return Err(Error::InvalidDistribution(
                    "mixture weights must be a distribution".into(),
                ));
            }
        }
        Ok(Strategy { mixtures })
    }

    /// The truthful strategy: report the Bayesian posterior of each signal.
    pub fn truthful(prior: &TripletPrior, view: View) -> Result<Self> {
        Ok(Strategy::pure(
            Hypothesis::bayes(prior, view)?.rows().to_vec(),
        ))
    }

    /// Report the relabeled posterior `π ∘ posterior`.
    pub fn permuted_truthful(prior: &TripletPrior, view: View, perm: &[usize]) -> Result<Self> {
        Ok(Strategy::pure(
            Hypothesis::bayes(prior, view)?.permuted(perm).rows().to_vec(),
        ))
    }

    /// Ignore the signal and always report `report`.
    pub fn constant(n_signals: usize, report: Simplex) -> Self {
        Strategy::pure(vec![report; n_signals])
    }

    pub fn n_signals(&self) -> usize {
        self.mixtures.len()
    }

    fn components(&self, x: usize) -> &[(f64, Simplex)] {
        &self.mixtures[x]
    }
}

/// Which payment rule to verify.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Single,
    Mcg(Divergence),
}

impl Mechanism {
    pub fn name(&self) -> String {
        match self {
            Mechanism::Single => "single".into(),
            Mechanism::Mcg(d) => format!("mcg({d})"),
        }
    }
}

/// Exact expected payment of a strategy profile, enumerating signals and
/// mixture components. Tasks are i.i.d. and reports depend only on signals,
/// so same-task pairs weight by the joint and cross-task pairs by the product
/// of marginals; the expectation does not depend on the task counts.
pub fn expected_payment(
    strategy_a: &Strategy,
    strategy_b: &Strategy,
    prior: &TripletPrior,
    mechanism: Mechanism,
) -> Result<f64> {
    if strategy_a.n_signals() != prior.n_a() || strategy_b.n_signals() != prior.n_b() {
        return Err(Error::LengthMismatch(strategy_a.n_signals(), prior.n_a()));
    }
    let joint = prior.induce_joint();
    let prior_y = prior.prior_y();
    match mechanism {
        Mechanism::Single => {
            let mut total = 0.0;
            for a in 0..prior.n_a() {
                for b in 0..prior.n_b() {
                    let cell = joint.cell(a, b);
                    if cell == 0.0 {
                        continue;
                    }
                    for (wa, ra) in strategy_a.components(a) {
                        for (wb, rb) in strategy_b.components(b) {
                            total += cell * wa * wb * single_task_payment(ra, rb, prior_y)?;
                        }
                    }
                }
            }
            Ok(total)
        }
        Mechanism::Mcg(div) => {
            if !div.derivative_invertible() {
                return Err(Error::InvalidConfig(
                    "the multi-task mechanism needs a differentiable generator".into(),
                ));
            }
            let ma = joint.marginal_a();
            let mb = joint.marginal_b();
            let mut total = 0.0;
            for a in 0..prior.n_a() {
                for b in 0..prior.n_b() {
                    for (wa, ra) in strategy_a.components(a) {
                        for (wb, rb) in strategy_b.components(b) {
                            let s = floored(agreement(ra, rb, prior_y));
                            total += wa
                                * wb
                                * (joint.cell(a, b) * div.subgradient(s)
                                    - ma[a] * mb[b] * div.conj_of_g(s));
                        }
                    }
                }
            }
            Ok(total)
        }
    }
}

/// Result of the unilateral-deviation sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthfulnessReport {
    pub mechanism: String,
    /// No swept deviation beats truth-telling by more than `tol`.
    pub is_equilibrium: bool,
    /// Every non-truthful grid deviation pays strictly less (margin beyond
    /// `tol`).
    pub is_strict: bool,
    /// Largest conditional-payoff excess of a non-truthful grid deviation
    /// over the truthful report; negative means all deviations lose.
    pub worst_deviation: f64,
    /// `-worst_deviation`.
    pub margin: f64,
    /// Expected payment when both agents are truthful.
    pub truthful_payoff: f64,
    /// Best expected payment any single agent can reach against a truthful
    /// opponent using grid reports (truthful reports included).
    pub best_unilateral_payoff: f64,
    pub grid_resolution: f64,
    pub tol: f64,
    pub n_deviations_checked: u64,
    /// Grid sweeps certify only the swept reports, not the whole simplex.
    pub note: String,
}

/// Conditional expected payoff of reporting `report` on signal `x`, with the
/// opponent truthful. `None` stands for payoff negative infinity (the log
/// payment hit a zero inner sum).
fn conditional_payoff(
    mechanism: Mechanism,
    prior: &TripletPrior,
    deviator: View,
    x: usize,
    report: &Simplex,
) -> Option<f64> {
    let joint = prior.induce_joint();
    let prior_y = prior.prior_y();
    let opposite = match deviator {
        View::A => View::B,
        View::B => View::A,
    };
    let opponent = Hypothesis::bayes(prior, opposite).ok()?;
    let n_opp = prior.n_signals(opposite);
    // Pr[opponent signal | own signal] and opponent marginal
    let (own_marginal, cond, opp_marginal): (f64, Vec<f64>, Vec<f64>) = match deviator {
        View::A => {
            let ma = joint.marginal_a();
            let mb = joint.marginal_b();
            let cond = (0..n_opp).map(|b| joint.cell(x, b) / ma[x]).collect();
            (ma[x], cond, mb)
        }
        View::B => {
            let ma = joint.marginal_a();
            let mb = joint.marginal_b();
            let cond = (0..n_opp).map(|a| joint.cell(a, x) / mb[x]).collect();
            (mb[x], cond, ma)
        }
    };
    if own_marginal <= 0.0 {
        return Some(0.0);
    }
    match mechanism {
        Mechanism::Single => {
            let mut total = 0.0;
            for opp in 0..n_opp {
                if cond[opp] == 0.0 {
                    continue;
                }
                let inner = agreement(report, opponent.row(opp), prior_y);
                if inner <= 0.0 {
                    return None;
                }
                total += cond[opp] * inner.ln();
            }
            Some(total)
        }
        Mechanism::Mcg(div) => {
            let mut total = 0.0;
            for opp in 0..n_opp {
                let s = floored(agreement(report, opponent.row(opp), prior_y));
                total += cond[opp] * div.subgradient(s) - opp_marginal[opp] * div.conj_of_g(s);
            }
            Some(total)
        }
    }
}

/// Sweeps one agent's unilateral deviations over all grid reports, holding
/// the other agent truthful, for both choices of deviator.
///
/// The expected payoff separates over the deviator's signals, so per-signal
/// sweeps are exhaustive over pure grid strategies; mixtures are convex
/// combinations and cannot beat the best pure report.
pub fn verify_truthful(
    prior: &TripletPrior,
    mechanism: Mechanism,
    grid_resolution: f64,
    tol: f64,
) -> Result<TruthfulnessReport> {
    if let Mechanism::Mcg(div) = mechanism {
        if !div.derivative_invertible() {
            return Err(Error::InvalidConfig(
                "the multi-task mechanism needs a differentiable generator".into(),
            ));
        }
    }
    let m = (1.0 / grid_resolution).round().max(1.0) as usize;
    let grid: Vec<Simplex> = simplex_grid(prior.n_labels(), m, false)
        .into_iter()
        .map(|v| Simplex::new(v).expect("grid points are distributions"))
        .collect();

    let joint = prior.induce_joint();
    let marginals = [joint.marginal_a(), joint.marginal_b()];
    let mut worst_deviation = f64::NEG_INFINITY;
    let mut n_checked = 0u64;
    let mut best_unilateral = f64::NEG_INFINITY;

    for (side, deviator) in [View::A, View::B].into_iter().enumerate() {
        let truth = Hypothesis::bayes(prior, deviator)?;
        let mut side_best = 0.0;
        for x in 0..prior.n_signals(deviator) {
            if marginals[side][x] <= 0.0 {
                continue;
            }
            let truthful_report = truth.row(x);
            let truthful_payoff =
                conditional_payoff(mechanism, prior, deviator, x, truthful_report)
                    .expect("truthful payoff is finite");
            let mut best_here = truthful_payoff;
            for report in &grid {
                let Some(payoff) = conditional_payoff(mechanism, prior, deviator, x, report)
                else {
                    continue; // payoff negative infinity, never a best response
                };
                best_here = best_here.max(payoff);
                if report.tv_distance(truthful_report) > 1e-9 {
                    n_checked += 1;
                    worst_deviation = worst_deviation.max(payoff - truthful_payoff);
                }
            }
            side_best += marginals[side][x] * best_here;
        }
        best_unilateral = best_unilateral.max(side_best);
    }

    let truthful_payoff = expected_payment(
        &Strategy::truthful(prior, View::A)?,
        &Strategy::truthful(prior, View::B)?,
        prior,
        mechanism,
    )?;
    Ok(TruthfulnessReport {
        mechanism: mechanism.name(),
        is_equilibrium: worst_deviation <= tol,
        is_strict: worst_deviation < -tol,
        worst_deviation,
        margin: -worst_deviation,
        truthful_payoff,
        best_unilateral_payoff: best_unilateral,
        grid_resolution,
        tol,
        n_deviations_checked: n_checked,
        note: "grid certificate: deviations swept over the report grid only".into(),
    })
}

/// Classification of a pure strategy profile against truth-telling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "permutation", rename_all = "snake_case")]
pub enum ProfileClass {
    /// Every signal maps to its Bayesian posterior (within tolerance).
    Truthful,
    /// Both agents report a shared relabeling of their posteriors.
    Permutation(Vec<usize>),
    Other,
}

impl std::fmt::Display for ProfileClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileClass::Truthful => write!(f, "truthful"),
            ProfileClass::Permutation(p) => write!(f, "permutation{p:?}"),
            ProfileClass::Other => write!(f, "other"),
        }
    }
}

/// Classifies a pure profile (one report table per view): truthful when every
/// report sits within `tolerance` max row TV of the Bayesian posterior,
/// permutation when some shared relabeling does, other otherwise.
pub fn classify_profile(
    reports_a: &Hypothesis,
    reports_b: &Hypothesis,
    prior: &TripletPrior,
    tolerance: f64,
) -> Result<ProfileClass> {
    use itertools::Itertools;
    let posts_a = Hypothesis::bayes(prior, View::A)?;
    let posts_b = Hypothesis::bayes(prior, View::B)?;
    let n = prior.n_labels();
    for perm in (0..n).permutations(n) {
        if reports_a.max_row_tv(&posts_a.permuted(&perm)) <= tolerance
            && reports_b.max_row_tv(&posts_b.permuted(&perm)) <= tolerance
        {
            return Ok(if perm.iter().enumerate().all(|(i, &v)| i == v) {
                ProfileClass::Truthful
            } else {
                ProfileClass::Permutation(perm)
            });
        }
    }
    Ok(ProfileClass::Other)
}

/// One row of the focality payoff table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRow {
    pub class: ProfileClass,
    pub label: String,
    pub payoff: f64,
    /// Truthful payoff minus this profile's payoff.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationTie {
    pub permutation: Vec<usize>,
    pub payoff: f64,
    /// Within `1e-10` of the truthful payoff.
    pub ties_truthful: bool,
}

/// Result of the joint-profile grid enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocalReport {
    pub truthful_payoff: f64,
    /// The f-mutual information of the induced joint, which the truthful
    /// payoff should equal.
    pub mutual_information: f64,
    /// Truthful payoff at least every enumerated profile's (within `tol`).
    pub truthful_is_max: bool,
    /// Exact relabeled-truthful profiles and whether each ties.
    pub permutation_ties: Vec<PermutationTie>,
    /// Every grid profile outside the permutation cluster pays less than
    /// truthful by more than `tol`.
    pub nonpermutation_strictly_below: bool,
    /// Truthful payoff minus the best non-permutation grid profile.
    pub margin: f64,
    pub best_nonpermutation_payoff: f64,
    pub n_profiles: u64,
    pub n_nonpermutation_profiles: u64,
    pub grid_resolution: f64,
    /// Profiles within this max-row TV of a relabeled truthful profile
    /// cluster as permutation profiles.
    pub classification_tolerance: f64,
    pub tol: f64,
    pub rows: Vec<ProfileRow>,
    pub note: String,
}

/// Enumerates every pure strategy profile on the report grid (both agents
/// deviate jointly), classifies each as truthful / permutation / other, and
/// checks that truth-telling pays the most, relabelings at best tie, and
/// everything else pays strictly less.
///
/// Needs a differentiable generator and at most `budget` profiles; the label
/// space is capped at 5 so permutation classification fits a bitmask.
pub fn verify_focal(
    prior: &TripletPrior,
    div: Divergence,
    grid_resolution: f64,
    budget: u64,
    tol: f64,
) -> Result<FocalReport> {
    if !div.derivative_invertible() {
        return Err(Error::InvalidConfig(
            "the multi-task mechanism needs a differentiable generator".into(),
        ));
    }
    let n_y = prior.n_labels();
    if n_y > 5 {
        return Err(Error::PermutationSearchTooLarge(n_y));
    }
    let (n_a, n_b) = (prior.n_a(), prior.n_b());
    let m = (1.0 / grid_resolution).round().max(1.0) as usize;
    let grid: Vec<Simplex> = simplex_grid(n_y, m, false)
        .into_iter()
        .map(|v| Simplex::new(v).expect("grid points are distributions"))
        .collect();
    let g = grid.len();
    let needed = (g as u128).pow((n_a + n_b) as u32);
    if needed > budget as u128 {
        return Err(Error::EnumerationBudgetExceeded {
            needed,
            budget,
        });
    }

    let joint = prior.induce_joint();
    let ma = joint.marginal_a();
    let mb = joint.marginal_b();
    let prior_y = prior.prior_y();
    let posts_a = Hypothesis::bayes(prior, View::A)?;
    let posts_b = Hypothesis::bayes(prior, View::B)?;
    let mutual_information = div.mutual_information(&joint);

    // Reward and conjugate for every ordered pair of grid reports.
    let g_tab: Vec<Vec<f64>> = grid
        .iter()
        .map(|ra| {
            grid.iter()
                .map(|rb| div.subgradient(floored(agreement(ra, rb, prior_y))))
                .collect()
        })
        .collect();
    let c_tab: Vec<Vec<f64>> = grid
        .iter()
        .map(|ra| {
            grid.iter()
                .map(|rb| div.conj_of_g(floored(agreement(ra, rb, prior_y))))
                .collect()
        })
        .collect();

    // Permutation-compatibility masks: bit p set when the grid report is
    // within the clustering tolerance of that signal's posterior relabeled by
    // permutation p.
    use itertools::Itertools;
    let perms: Vec<Vec<usize>> = (0..n_y).permutations(n_y).collect();
    let cls_tol = 2.0 * grid_resolution;
    let masks = |posts: &Hypothesis| -> Vec<Vec<u128>> {
        (0..posts.n_signals())
            .map(|x| {
                grid.iter()
                    .map(|r| {
                        let mut mask = 0u128;
                        for (p, perm) in perms.iter().enumerate() {
                            if r.tv_distance(&posts.row(x).permuted(perm)) <= cls_tol {
                                mask |= 1 << p;
                            }
                        }
                        mask
                    })
                    .collect()
            })
            .collect()
    };
    let mask_a = masks(&posts_a);
    let mask_b = masks(&posts_b);
    // perms[0] is the identity (itertools emits lexicographic order).
    debug_assert!(perms[0].iter().enumerate().all(|(i, &v)| i == v));

    // Exact special profiles.
    let truthful_strategy_a = Strategy::truthful(prior, View::A)?;
    let truthful_strategy_b = Strategy::truthful(prior, View::B)?;
    let truthful_payoff = expected_payment(
        &truthful_strategy_a,
        &truthful_strategy_b,
        prior,
        Mechanism::Mcg(div),
    )?;
    let mut rows = vec![ProfileRow {
        class: ProfileClass::Truthful,
        label: "exact posteriors".into(),
        payoff: truthful_payoff,
        gap: 0.0,
    }];
    let mut permutation_ties = Vec::new();
    for perm in perms.iter().skip(1) {
        let payoff = expected_payment(
            &Strategy::permuted_truthful(prior, View::A, perm)?,
            &Strategy::permuted_truthful(prior, View::B, perm)?,
            prior,
            Mechanism::Mcg(div),
        )?;
        permutation_ties.push(PermutationTie {
            permutation: perm.clone(),
            payoff,
            ties_truthful: (payoff - truthful_payoff).abs() <= 1e-10,
        });
        rows.push(ProfileRow {
            class: ProfileClass::Permutation(perm.clone()),
            label: format!("relabeled posteriors {perm:?}"),
            payoff,
            gap: truthful_payoff - payoff,
        });
    }
    let constant_payoff = expected_payment(
        &Strategy::constant(n_a, prior_y.clone()),
        &Strategy::constant(n_b, prior_y.clone()),
        prior,
        Mechanism::Mcg(div),
    )?;
    rows.push(ProfileRow {
        class: classify_profile(
            &Hypothesis::constant(n_a, prior_y.clone()),
            &Hypothesis::constant(n_b, prior_y.clone()),
            prior,
            cls_tol,
        )?,
        label: "constant report of the prior".into(),
        payoff: constant_payoff,
        gap: truthful_payoff - constant_payoff,
    });

    // Enumerate grid profiles: A-side assignments in parallel, B-side inner.
    struct SweepStat {
        max_payoff: f64,
        best_other: f64,
        n_other: u64,
        n_profiles: u64,
    }
    let b_assignments: Vec<Vec<usize>> = mixed_radix(n_b, g);
    let stats: Vec<SweepStat> = mixed_radix(n_a, g)
        .into_par_iter()
        .map(|ia| {
            let a_mask = ia
                .iter()
                .enumerate()
                .fold(u128::MAX, |acc, (a, &i)| acc & mask_a[a][i]);
            // For this A-assignment, payoff contribution per (b, report j).
            let mut gsum = vec![vec![0.0; g]; n_b];
            for b in 0..n_b {
                for j in 0..g {
                    let mut acc = 0.0;
                    for (a, &i) in ia.iter().enumerate() {
                        acc += joint.cell(a, b) * g_tab[i][j] - ma[a] * mb[b] * c_tab[i][j];
                    }
                    gsum[b][j] = acc;
                }
            }
            let mut stat = SweepStat {
                max_payoff: f64::NEG_INFINITY,
                best_other: f64::NEG_INFINITY,
                n_other: 0,
                n_profiles: 0,
            };
            for jb in &b_assignments {
                let payoff: f64 = jb.iter().enumerate().map(|(b, &j)| gsum[b][j]).sum();
                let mask = jb
                    .iter()
                    .enumerate()
                    .fold(a_mask, |acc, (b, &j)| acc & mask_b[b][j]);
                stat.n_profiles += 1;
                stat.max_payoff = stat.max_payoff.max(payoff);
                if mask == 0 {
                    stat.n_other += 1;
                    stat.best_other = stat.best_other.max(payoff);
                }
            }
            stat
        })
        .collect();

    let mut max_payoff = f64::NEG_INFINITY;
    let mut best_other = f64::NEG_INFINITY;
    let mut n_other = 0;
    let mut n_profiles = 0;
    for s in stats {
        max_payoff = max_payoff.max(s.max_payoff);
        best_other = best_other.max(s.best_other);
        n_other += s.n_other;
        n_profiles += s.n_profiles;
    }
    rows.push(ProfileRow {
        class: ProfileClass::Other,
        label: "best non-permutation grid profile".into(),
        payoff: best_other,
        gap: truthful_payoff - best_other,
    });

    Ok(FocalReport {
        truthful_payoff,
        mutual_information,
        truthful_is_max: truthful_payoff >= max_payoff - tol
            && permutation_ties.iter().all(|t| t.payoff <= truthful_payoff + tol),
        permutation_ties,
        nonpermutation_strictly_below: truthful_payoff - best_other > tol,
        margin: truthful_payoff - best_other,
        best_nonpermutation_payoff: best_other,
        n_profiles,
        n_nonpermutation_profiles: n_other,
        grid_resolution,
        classification_tolerance: cls_tol,
        tol,
        rows,
        note: "grid certificate over pure profiles; continuous and mixed \
               strategies are not enumerated"
            .into(),
    })
}

/// All `base^slots` index assignments, counter order.
fn mixed_radix(slots: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; slots];
    loop {
        out.push(current.clone());
        let mut slot = 0;
        loop {
            current[slot] += 1;
            if current[slot] < base {
                break;
            }
            current[slot] = 0;
            slot += 1;
            if slot == slots {
                return out;
            }
        }
    }
}
