//! The scoring-rule route: treat `(v_B(x_B) · h_A(x_A))_{x_B}` as a forecast
//! for the other view's signal and score it with a strictly proper rule.
//! With the log rule this is the maximum-likelihood objective; the column
//! constraint on `v_B` is what keeps its maximizer meaningful.
//!
//! ```bash
//! cargo run --release --example likelihood_gain
//! ```

use migain::cotrain::OptimizerConfig;
use migain::dist::View;
use migain::prior_analysis::generate_separable_prior;
use migain::psgain::{
    column_sum_deviation, expected_ps_gain, log_likelihood_ceiling, optimize_ps_gain,
    LikelihoodTable, ScoringRule,
};
use migain::Hypothesis;

fn main() {
    let prior = generate_separable_prior(4, 4, 2, 3, 1.0, 0.02, true).unwrap();
    let truth_h = Hypothesis::bayes(&prior, View::A).unwrap();
    let truth_v = LikelihoodTable::truth(&prior);
    let ceiling = log_likelihood_ceiling(&prior);

    println!("log-rule ceiling  Σ Pr[a,b] ln Pr[b|a] = {ceiling:.6}");
    println!(
        "truth point gain                       = {:.6}",
        expected_ps_gain(&truth_h, &truth_v, &prior, ScoringRule::Log)
    );
    println!(
        "Brier gain at the truth point          = {:.6}\n",
        expected_ps_gain(&truth_h, &truth_v, &prior, ScoringRule::Brier)
    );

    let cfg = OptimizerConfig {
        restarts: 8,
        max_iters: 3000,
        seed: 17,
        ..OptimizerConfig::default()
    };

    // Constrained: columns of v are distributions over x_B by construction.
    let fit = optimize_ps_gain(&prior, ScoringRule::Log, &cfg, true).unwrap();
    let (perm, tv) = fit.align_to_truth(&prior).unwrap();
    println!("constrained maximization:");
    println!("  objective            = {:.6} (ceiling {:.6})", fit.objective, ceiling);
    println!("  recovered up to perm {perm:?}, max aligned TV = {tv:.4}");
    println!(
        "  column-sum deviation = {:.2e}\n",
        column_sum_deviation(&fit.v_b_star)
    );

    // Unconstrained: the optimizer drifts to the useless supremum where the
    // table saturates at one and the forecaster collapses to a point mass.
    let broken = optimize_ps_gain(&prior, ScoringRule::Log, &cfg, false).unwrap();
    println!("constraint disabled:");
    println!("  objective            = {:.6} (approaches 0 from below)", broken.objective);
    println!(
        "  column-sum deviation = {:.3} (all-ones table would give {})",
        column_sum_deviation(&broken.v_b_star),
        prior.n_b() - 1
    );
}
