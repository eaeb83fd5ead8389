//! The multi-task payment rule pays the realized forecast gain. Enumerating
//! every pure strategy profile on a report grid shows the truthful profile
//! pays the f-mutual information and tops the table, the label-swap profile
//! ties it exactly (uniform label prior), and everything else trails by a
//! positive margin.
//!
//! ```bash
//! cargo run --release --example multi_task_focality
//! ```

use migain::gain::ForecastTask;
use migain::mechanisms::{mcg_payment, verify_focal};
use migain::{Divergence, Simplex, TripletPrior};

fn main() {
    // One exclusive anchor signal per label in each view keeps the solution
    // set pinned to the two label permutations.
    let prior = TripletPrior::new(
        Simplex::new(vec![0.5, 0.5]).unwrap(),
        vec![
            Simplex::new(vec![0.55, 0.0, 0.45]).unwrap(),
            Simplex::new(vec![0.0, 0.7, 0.3]).unwrap(),
        ],
        vec![
            Simplex::new(vec![0.6, 0.0, 0.4]).unwrap(),
            Simplex::new(vec![0.0, 0.75, 0.25]).unwrap(),
        ],
    )
    .unwrap();

    // A two-task payment on realized reports.
    let posts_a = migain::Hypothesis::bayes(&prior, migain::View::A).unwrap();
    let posts_b = migain::Hypothesis::bayes(&prior, migain::View::B).unwrap();
    let tasks: Vec<ForecastTask> = [(0usize, 0usize), (2, 2)]
        .iter()
        .enumerate()
        .map(|(id, &(xa, xb))| ForecastTask {
            task_id: id as u64,
            forecast_a: Some(posts_a.row(xa).clone()),
            forecast_b: Some(posts_b.row(xb).clone()),
        })
        .collect();
    let pay = mcg_payment(Divergence::Kl, &tasks, prior.prior_y()).unwrap();
    println!("two-task truthful payment on one realization: {pay:+.6}");

    let report = verify_focal(&prior, Divergence::Kl, 0.05, 200_000_000, 1e-10).unwrap();
    println!(
        "\nsweep of {} pure grid profiles ({} non-permutation):",
        report.n_profiles, report.n_nonpermutation_profiles
    );
    println!("{:>14} {:>38} {:>12} {:>10}", "class", "profile", "payoff", "gap");
    for row in &report.rows {
        println!(
            "{:>14} {:>38} {:>12.6} {:>10.6}",
            row.class, row.label, row.payoff, row.gap
        );
    }
    println!("\ntruthful payoff equals MI = {:.6}", report.mutual_information);
    println!("truthful is max: {}", report.truthful_is_max);
    println!(
        "label swap ties truthful: {}",
        report.permutation_ties[0].ties_truthful
    );
    println!(
        "non-permutation profiles trail by at least {:.5}",
        report.margin
    );
    println!("\n{}", report.note);
}
