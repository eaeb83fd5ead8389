//! The three-task worked example: two predictors forecast a binary label on
//! three shared tasks, and the gain rewards same-task agreement while
//! punishing cross-task agreement through the convex conjugate.
//!
//! ```bash
//! cargo run --release --example three_task_gain
//! ```

use migain::divergence::ALL_DIVERGENCES;
use migain::gain::{agreement, empirical_gain, reward};
use migain::{Divergence, Hypothesis, Simplex, TaskSample};

fn main() {
    let h_a = Hypothesis::new(vec![
        Simplex::new(vec![0.7, 0.3]).unwrap(),
        Simplex::new(vec![0.1, 0.9]).unwrap(),
        Simplex::new(vec![0.5, 0.5]).unwrap(),
    ])
    .unwrap();
    let h_b = Hypothesis::new(vec![
        Simplex::new(vec![0.6, 0.4]).unwrap(),
        Simplex::new(vec![0.2, 0.8]).unwrap(),
        Simplex::new(vec![0.4, 0.6]).unwrap(),
    ])
    .unwrap();
    let p = Simplex::uniform(2);
    let samples: Vec<TaskSample> = (0..3)
        .map(|i| TaskSample::both(i, i as usize, i as usize))
        .collect();

    println!("agreement matrix (rows: A's task, cols: B's task):");
    for i in 0..3 {
        let row: Vec<String> = (0..3)
            .map(|j| format!("{:.2}", agreement(h_a.row(i), h_b.row(j), &p)))
            .collect();
        println!("  task {i}: [{}]", row.join(", "));
    }

    println!("\nKL rewards on the diagonal (same task):");
    for i in 0..3 {
        println!(
            "  task {i}: g(s) = 1 + ln s = {:.4}",
            reward(Divergence::Kl, h_a.row(i), h_b.row(i), &p)
        );
    }

    println!("\ngain per divergence (same-task mean minus conjugated cross-task mean):");
    for d in ALL_DIVERGENCES {
        let g = empirical_gain(d, &h_a, &h_b, &p, &samples).unwrap();
        println!("  {d:>17}: {g:+.6}");
    }

    // Two predictors that always agree on the same constant earn nothing:
    // their cross-task agreement is just as high as their same-task one.
    let constant_a = Hypothesis::constant(3, p.clone());
    let constant_b = Hypothesis::constant(3, p.clone());
    let naive = empirical_gain(Divergence::Kl, &constant_a, &constant_b, &p, &samples).unwrap();
    println!("\nconstant predictors (naive agreement): KL gain = {naive:+.6}");
}
