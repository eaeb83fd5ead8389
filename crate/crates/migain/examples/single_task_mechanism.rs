//! The single-task payment rule: both agents report a forecast for the same
//! task and are paid `ln Σ_y r_A(y) r_B(y) / Pr[Y=y]`. Against a truthful
//! opponent this is a proper score of the induced forecast, so truth-telling
//! is an equilibrium, strictly so when the prior is stable.
//!
//! ```bash
//! cargo run --release --example single_task_mechanism
//! ```

use migain::mechanisms::{
    expected_payment, single_task_payment, verify_truthful, Mechanism, Strategy,
};
use migain::prior_analysis::{check_stable, generate_prior};
use migain::{Divergence, Simplex, TripletPrior};

fn main() {
    let prior = generate_prior(3, 3, 2, 41, 1.0, true).unwrap();
    let mi = Divergence::Kl.mutual_information(&prior.induce_joint());

    let truthful_a = Strategy::truthful(&prior, migain::View::A).unwrap();
    let truthful_b = Strategy::truthful(&prior, migain::View::B).unwrap();
    let honest = expected_payment(&truthful_a, &truthful_b, &prior, Mechanism::Single).unwrap();
    println!("truthful expected payment = {honest:.6}");
    println!("Shannon mutual information = {mi:.6} (they agree)\n");

    // One-shot payments for a few report pairs.
    let uniform = Simplex::uniform(2);
    println!("single payments under a uniform label prior:");
    for (ra, rb) in [
        (vec![0.7, 0.3], vec![0.6, 0.4]),
        (vec![0.9, 0.1], vec![0.9, 0.1]),
        (vec![0.9, 0.1], vec![0.1, 0.9]),
    ] {
        let pay = single_task_payment(
            &Simplex::new(ra.clone()).unwrap(),
            &Simplex::new(rb.clone()).unwrap(),
            &uniform,
        )
        .unwrap();
        println!("  {ra:?} vs {rb:?}: {pay:+.4}");
    }

    let report = verify_truthful(&prior, Mechanism::Single, 0.05, 1e-9).unwrap();
    println!("\nunilateral deviation sweep at grid resolution {}:", report.grid_resolution);
    println!("  deviations checked  = {}", report.n_deviations_checked);
    println!("  is equilibrium      = {}", report.is_equilibrium);
    println!("  is strict           = {}", report.is_strict);
    println!("  margin              = {:.2e}", report.margin);

    // When one view is uninformative the prior is unstable and every report
    // ties: truthfulness survives, strictness does not.
    let unstable = TripletPrior::new(
        Simplex::new(vec![0.5, 0.5]).unwrap(),
        vec![
            Simplex::new(vec![0.8, 0.2]).unwrap(),
            Simplex::new(vec![0.3, 0.7]).unwrap(),
        ],
        vec![Simplex::uniform(2), Simplex::uniform(2)],
    )
    .unwrap();
    let stability = check_stable(&unstable);
    let tie_report = verify_truthful(&unstable, Mechanism::Single, 0.05, 1e-9).unwrap();
    println!(
        "\nuninformative-B prior: stable = {}, is_strict = {} (worst deviation {:+.1e})",
        stability.stable, tie_report.is_strict, tie_report.worst_deviation
    );
}
