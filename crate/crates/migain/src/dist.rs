//! Finite discrete probability machinery: factored triplet priors, induced
//! joints, pointwise mutual information, posterior predictors, forecast
//! aggregation, and seeded task sampling.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::simplex::Simplex;
use crate::{floored, Error, Result};

/// Which view a signal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum View {
    A,
    B,
}

impl View {
    pub(crate) fn tag(self) -> &'static str {
        match self {
            View::A => "x_a",
            View::B => "x_b",
        }
    }
}

/// Joint distribution over `(X_A, X_B, Y)` stored in conditionally independent
/// factored form: `Pr[Y]`, `Pr[X_A | Y]`, `Pr[X_B | Y]`.
///
/// The factored storage makes the conditional independence of the two views
/// given `Y` structural. `Pr[Y]` must have full support so that divisions by
/// `Pr[Y = y]` are always defined.
///
/// Serializes as `{sigma_a, sigma_b, sigma_y, prior_y, cond_a, cond_b}` where
/// `cond_a[y]` is the row `Pr[X_A | Y = y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorFile", into = "PriorFile")]
pub struct TripletPrior {
    prior_y: Simplex,
    cond_a: Vec<Simplex>,
    cond_b: Vec<Simplex>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorFile {
    sigma_a: usize,
    sigma_b: usize,
    sigma_y: usize,
    prior_y: Vec<f64>,
    cond_a: Vec<Vec<f64>>,
    cond_b: Vec<Vec<f64>>,
}

impl TryFrom<PriorFile> for TripletPrior {
    type Error = Error;

    fn try_from(f: PriorFile) -> Result<Self> {
        let prior_y = Simplex::new(f.prior_y)?;
        let rows = |table: Vec<Vec<f64>>, width: usize, name: &str| -> Result<Vec<Simplex>> {
            table
                .into_iter()
                .map(|row| {
                    if row.len() != width {
                        return Err(Error::LengthMismatch(row.len(), width));
                    }
                    Simplex::new(row)
                })
                .collect::<Result<Vec<_>>>()
                .and_then(|rows| {
                    if rows.len() != prior_y.len() {
                        Err(Error::InvalidDistribution(format!(
                            "{name} has {} rows, expected sigma_y = {}",
                            rows.len(),
                            prior_y.len()
                        )))
                    } else {
                        Ok(rows)
                    }
                })
        };
        let cond_a = rows(f.cond_a, f.sigma_a, "cond_a")?;
        let cond_b = rows(f.cond_b, f.sigma_b, "cond_b")?;
        if f.sigma_y != prior_y.len() {
            return Err(Error::LengthMismatch(f.sigma_y, prior_y.len()));
        }
        TripletPrior::new(prior_y, cond_a, cond_b)
    }
}

impl From<TripletPrior> for PriorFile {
    fn from(p: TripletPrior) -> PriorFile {
        PriorFile {
            sigma_a: p.n_a(),
            sigma_b: p.n_b(),
            sigma_y: p.n_labels(),
            prior_y: p.prior_y.clone().into(),
            cond_a: p.cond_a.into_iter().map(Vec::from).collect(),
            cond_b: p.cond_b.into_iter().map(Vec::from).collect(),
        }
    }
}

impl TripletPrior {
    /// Builds a prior from its factors. `cond_a[y]` and `cond_b[y]` are the
    /// channel rows for label `y`; `prior_y` must be strictly positive.
    pub fn new(prior_y: Simplex, cond_a: Vec<Simplex>, cond_b: Vec<Simplex>) -> Result<Self> {
        if !prior_y.is_strictly_positive() {
            return Err(Error::InvalidDistribution(
                "prior_y must have full support".into(),
            ));
        }
        if cond_a.len() != prior_y.len() || cond_b.len() != prior_y.len() {
            return Err(Error::LengthMismatch(cond_a.len(), prior_y.len()));
        }
        for table in [&cond_a, &cond_b] {
            if table.iter().any(|row| row.len() != table[0].len()) {
                return Err(Error::InvalidDistribution(
                    "conditional rows have unequal widths".into(),
                ));
            }
        }
        Ok(TripletPrior {
            prior_y,
            cond_a,
            cond_b,
        })
    }

    pub fn n_labels(&self) -> usize {
        self.prior_y.len()
    }

    pub fn n_a(&self) -> usize {
        self.cond_a[0].len()
    }

    pub fn n_b(&self) -> usize {
        self.cond_b[0].len()
    }

    /// Number of signals in the given view.
    pub fn n_signals(&self, view: View) -> usize {
        match view {
            View::A => self.n_a(),
            View::B => self.n_b(),
        }
    }

    pub fn prior_y(&self) -> &Simplex {
        &self.prior_y
    }

    /// Channel row `Pr[X_view | Y = y]`.
    pub fn cond_row(&self, view: View, y: usize) -> &Simplex {
        match view {
            View::A => &self.cond_a[y],
            View::B => &self.cond_b[y],
        }
    }

    /// Marginal distribution of one view, `Pr[X_view = x] = Σ_y Pr[y] Pr[x|y]`.
    pub fn marginal(&self, view: View) -> Simplex {
        let n = self.n_signals(view);
        let mut m = vec![0.0; n];
        for (y, &py) in self.prior_y.iter().enumerate() {
            let row = self.cond_row(view, y);
            for x in 0..n {
                m[x] += py * row[x];
            }
        }
        Simplex::from_weights(m).expect("marginal of a valid prior normalizes")
    }

    /// Marginalizes `Y` out: `table[a][b] = Σ_y Pr[y] Pr[a|y] Pr[b|y]`.
    pub fn induce_joint(&self) -> JointAb {
        let (na, nb) = (self.n_a(), self.n_b());
        let mut table = vec![vec![0.0; nb]; na];
        for (y, &py) in self.prior_y.iter().enumerate() {
            for a in 0..na {
                let pa = py * self.cond_a[y][a];
                for b in 0..nb {
                    table[a][b] += pa * self.cond_b[y][b];
                }
            }
        }
        JointAb::new(table).expect("induced joint of a valid prior is a joint")
    }

    /// Bayesian posterior `Pr[Y = y | X_view = x]`.
    ///
    /// Errors when the signal has zero marginal probability.
    pub fn posterior(&self, view: View, x: usize) -> Result<Simplex> {
        let weights: Vec<f64> = self
            .prior_y
            .iter()
            .enumerate()
            .map(|(y, &py)| py * self.cond_row(view, y)[x])
            .collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroProbabilitySignal {
                view: view.tag(),
                index: x,
            });
        }
        Simplex::from_weights(weights)
    }

    /// Posterior given both signals, `Pr[Y = y | X_A = a, X_B = b]`, computed
    /// directly from the factored triple joint.
    pub fn joint_posterior(&self, a: usize, b: usize) -> Result<Simplex> {
        let weights: Vec<f64> = self
            .prior_y
            .iter()
            .enumerate()
            .map(|(y, &py)| py * self.cond_a[y][a] * self.cond_b[y][b])
            .collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::IncompatibleForecasts);
        }
        Simplex::from_weights(weights)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// Joint distribution over `(X_A, X_B)` as a dense `|Σ_A| x |Σ_B|` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct JointAb {
    table: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for JointAb {
    type Error = Error;

    fn try_from(table: Vec<Vec<f64>>) -> Result<Self> {
        JointAb::new(table)
    }
}

impl From<JointAb> for Vec<Vec<f64>> {
    fn from(j: JointAb) -> Vec<Vec<f64>> {
        j.table
    }
}

impl JointAb {
    /// Validates a table of cell probabilities: nonnegative, total mass one
    /// within `1e-9`, rectangular.
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::InvalidDistribution("empty joint table".into()));
        }
        let width = table[0].len();
        let mut total = 0.0;
        for row in &table {
            if row.len() != width {
                return Err(Error::LengthMismatch(row.len(), width));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "joint cell is {v}, expected a finite nonnegative value"
                    )));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "joint mass is {total}, expected 1 within 1e-9"
            )));
        }
        Ok(JointAb { table })
    }

    pub fn n_a(&self) -> usize {
        self.table.len()
    }

    pub fn n_b(&self) -> usize {
        self.table[0].len()
    }

    pub fn cell(&self, a: usize, b: usize) -> f64 {
        self.table[a][b]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        self.table.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_b()];
        for row in &self.table {
            for (b, &v) in row.iter().enumerate() {
                m[b] += v;
            }
        }
        m
    }

    /// Pointwise mutual information `Pr[a,b] / (Pr[a] Pr[b])`.
    ///
    /// Errors when either signal has zero marginal mass.
    pub fn pmi(&self, a: usize, b: usize) -> Result<f64> {
        let ma: f64 = self.table[a].iter().sum();
        let mb: f64 = self.table.iter().map(|row| row[b]).sum();
        if ma <= 0.0 {
            return Err(Error::ZeroProbabilitySignal {
                view: "x_a",
                index: a,
            });
        }
        if mb <= 0.0 {
            return Err(Error::ZeroProbabilitySignal {
                view: "x_b",
                index: b,
            });
        }
        Ok(self.table[a][b] / (ma * mb))
    }

    /// Full PMI table; errors as [`JointAb::pmi`] on any zero marginal.
    pub fn pmi_table(&self) -> Result<Vec<Vec<f64>>> {
        let ma = self.marginal_a();
        let mb = self.marginal_b();
        for (a, &m) in ma.iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::ZeroProbabilitySignal {
                    view: "x_a",
                    index: a,
                });
            }
        }
        for (b, &m) in mb.iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::ZeroProbabilitySignal {
                    view: "x_b",
                    index: b,
                });
            }
        }
        Ok((0..self.n_a())
            .map(|a| (0..self.n_b()).map(|b| self.table[a][b] / (ma[a] * mb[b])).collect())
            .collect())
    }

    /// Product of the marginals, as a joint table.
    pub fn product_of_marginals(&self) -> JointAb {
        let ma = self.marginal_a();
        let mb = self.marginal_b();
        let table = ma
            .iter()
            .map(|&pa| mb.iter().map(|&pb| pa * pb).collect())
            .collect();
        JointAb::new(table).expect("product of marginals is a joint")
    }

    /// The same joint with the two views swapped.
    pub fn transposed(&self) -> JointAb {
        let table = (0..self.n_b())
            .map(|b| (0..self.n_a()).map(|a| self.table[a][b]).collect())
            .collect();
        JointAb::new(table).expect("transpose preserves mass")
    }

    /// Merges column `keep` with column `drop`, removing `drop`.
    ///
    /// Coarse-graining one view; useful for data-processing checks.
    pub fn merge_columns(&self, keep: usize, drop: usize) -> JointAb {
        assert!(keep != drop && keep < self.n_b() && drop < self.n_b());
        let table = self
            .table
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(b, _)| b != drop)
                    .map(|(b, &v)| if b == keep { v + row[drop] } else { v })
                    .collect()
            })
            .collect();
        JointAb::new(table).expect("merging columns preserves mass")
    }
}

/// Combines two single-view forecasts with the label prior:
/// entry `y` is proportional to `p_a(y) p_b(y) / prior_y(y)`.
///
/// With both forecasts Bayesian posteriors this reproduces the posterior given
/// both signals. Errors when the product vector is identically zero.
pub fn aggregate_forecast(p_a: &Simplex, p_b: &Simplex, prior_y: &Simplex) -> Result<Simplex> {
    if p_a.len() != p_b.len() || p_a.len() != prior_y.len() {
        return Err(Error::LengthMismatch(p_a.len(), prior_y.len()));
    }
    if !prior_y.is_strictly_positive() {
        return Err(Error::InvalidDistribution(
            "prior_y must have full support".into(),
        ));
    }
    let weights: Vec<f64> = (0..p_a.len())
        .map(|y| p_a[y] * p_b[y] / floored(prior_y[y]))
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::IncompatibleForecasts);
    }
    Simplex::from_weights(weights)
}

/// Largest absolute residual of the conditional-independence identity
/// `pmi(a, b) = Σ_y Pr[y|a] Pr[y|b] / Pr[y]` over all signal pairs.
///
/// Exact (up to rounding) for every factored prior. Signals with zero marginal
/// mass are skipped; both sides are undefined there.
pub fn verify_ci_identity(prior: &TripletPrior) -> f64 {
    let joint = prior.induce_joint();
    let ma = joint.marginal_a();
    let mb = joint.marginal_b();
    let mut worst: f64 = 0.0;
    for a in 0..prior.n_a() {
        if ma[a] <= 0.0 {
            continue;
        }
        let post_a = prior.posterior(View::A, a).expect("positive marginal");
        for b in 0..prior.n_b() {
            if mb[b] <= 0.0 {
                continue;
            }
            let post_b = prior.posterior(View::B, b).expect("positive marginal");
            let pmi = joint.cell(a, b) / (ma[a] * mb[b]);
            let agreement: f64 = (0..prior.n_labels())
                .map(|y| post_a[y] * post_b[y] / prior.prior_y()[y])
                .sum();
            worst = worst.max((pmi - agreement).abs());
        }
    }
    worst
}

/// One task's realized signals. At least one side is present; tasks with both
/// signals form the overlap set `L_A ∩ L_B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSample {
    pub task_id: u64,
    pub x_a: Option<usize>,
    pub x_b: Option<usize>,
}

impl TaskSample {
    pub fn both(task_id: u64, x_a: usize, x_b: usize) -> Self {
        TaskSample {
            task_id,
            x_a: Some(x_a),
            x_b: Some(x_b),
        }
    }

    pub fn a_only(task_id: u64, x_a: usize) -> Self {
        TaskSample {
            task_id,
            x_a: Some(x_a),
            x_b: None,
        }
    }

    pub fn b_only(task_id: u64, x_b: usize) -> Self {
        TaskSample {
            task_id,
            x_a: None,
            x_b: Some(x_b),
        }
    }
}

/// Draws `n_total` tasks i.i.d. from the joint induced by `prior`.
///
/// The first `overlap` tasks keep both signals; the remaining tasks alternate
/// A-only / B-only. Deterministic given `seed`.
pub fn sample_tasks(
    prior: &TripletPrior,
    n_total: usize,
    overlap: usize,
    seed: u64,
) -> Result<Vec<TaskSample>> {
    if overlap > n_total {
        return Err(Error::InvalidConfig(format!(
            "overlap {overlap} exceeds n_total {n_total}"
        )));
    }
    let joint = prior.induce_joint();
    let (na, nb) = (joint.n_a(), joint.n_b());
    let mut cum = Vec::with_capacity(na * nb);
    let mut acc = 0.0;
    for a in 0..na {
        for b in 0..nb {
            acc += joint.cell(a, b);
            cum.push(acc);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_total);
    for i in 0..n_total {
        let u: f64 = rng.random::<f64>() * acc;
        let flat = cum.partition_point(|&c| c < u).min(na * nb - 1);
        let (a, b) = (flat / nb, flat % nb);
        let id = i as u64;
        let sample = if i < overlap {
            TaskSample::both(id, a, b)
        } else if (i - overlap) % 2 == 0 {
            TaskSample::a_only(id, a)
        } else {
            TaskSample::b_only(id, b)
        };
        out.push(sample);
    }
    Ok(out)
}

/// Writes samples as CSV with columns `task_id, x_a, x_b` (blank when absent).
/// Lines starting with `#` are treated as comments by [`read_samples_csv`].
pub fn write_samples_csv<W: Write>(mut w: W, samples: &[TaskSample]) -> Result<()> {
    writeln!(w, "task_id,x_a,x_b")?;
    for s in samples {
        let fmt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{}", s.task_id, fmt(s.x_a), fmt(s.x_b))?;
    }
    Ok(())
}

/// Reads the CSV form written by [`write_samples_csv`].
pub fn read_samples_csv<R: BufRead>(r: R) -> Result<Vec<TaskSample>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("task_id") {
            continue;
        }
        let mut fields = trimmed.split(',');
        let parse_err = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
        let task_id: u64 = fields
            .next()
            .ok_or_else(|| parse_err("missing task_id"))?
            .trim()
            .parse()
            .map_err(|_| parse_err("bad task_id"))?;
        let mut opt = |name: &'static str| -> Result<Option<usize>> {
            let field = fields.next().ok_or_else(|| parse_err(name))?.trim();
            if field.is_empty() {
                Ok(None)
            } else {
                field
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("line {}: bad {name}", lineno + 1)))
            }
        };
        let x_a = opt("x_a")?;
        let x_b = opt("x_b")?;
        if x_a.is_none() && x_b.is_none() {
            return Err(parse_err("task carries neither signal"));
        }
        out.push(TaskSample { task_id, x_a, x_b });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn demo_prior() -> TripletPrior {
        TripletPrior::new(
            Simplex::new(vec![0.5, 0.5]).unwrap(),
            vec![
                Simplex::new(vec![0.8, 0.2]).unwrap(),
                Simplex::new(vec![0.2, 0.8]).unwrap(),
            ],
            vec![
                Simplex::new(vec![0.8, 0.2]).unwrap(),
                Simplex::new(vec![0.2, 0.8]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_zero_mass_label() {
        let r = TripletPrior::new(
            Simplex::new(vec![1.0, 0.0]).unwrap(),
            vec![Simplex::uniform(2), Simplex::uniform(2)],
            vec![Simplex::uniform(2), Simplex::uniform(2)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_label_joint_is_outer_product() {
        let prior = TripletPrior::new(
            Simplex::new(vec![1.0]).unwrap(),
            vec![Simplex::new(vec![0.3, 0.7]).unwrap()],
            vec![Simplex::new(vec![0.6, 0.4]).unwrap()],
        )
        .unwrap();
        let joint = prior.induce_joint();
        for a in 0..2 {
            for b in 0..2 {
                let expect = prior.cond_row(View::A, 0)[a] * prior.cond_row(View::B, 0)[b];
                assert!((joint.cell(a, b) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_channels_give_diagonal_joint() {
        let prior = TripletPrior::new(
            Simplex::new(vec![0.5, 0.5]).unwrap(),
            vec![Simplex::point_mass(2, 0), Simplex::point_mass(2, 1)],
            vec![Simplex::point_mass(2, 0), Simplex::point_mass(2, 1)],
        )
        .unwrap();
        let joint = prior.induce_joint();
        assert_eq!(joint.rows(), &[vec![0.5, 0.0], vec![0.0, 0.5]]);
    }

    #[test]
    fn induced_joint_matches_triple_sum_by_hand() {
        let joint = demo_prior().induce_joint();
        // 0.5*0.8*0.8 + 0.5*0.2*0.2 = 0.34 on the diagonal, 0.16 off it.
        assert!((joint.cell(0, 0) - 0.34).abs() < 1e-15);
        assert!((joint.cell(0, 1) - 0.16).abs() < 1e-15);
        assert!((joint.cell(1, 0) - 0.16).abs() < 1e-15);
        assert!((joint.cell(1, 1) - 0.34).abs() < 1e-15);
    }

    #[test]
    fn pmi_of_product_joint_is_one() {
        let joint = JointAb::new(vec![vec![0.06, 0.14], vec![0.24, 0.56]]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((joint.pmi(a, b).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pmi_hand_values() {
        let joint = JointAb::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!((joint.pmi(0, 0).unwrap() - 1.6).abs() < 1e-12);
        assert!((joint.pmi(0, 1).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pmi_zero_marginal_errors() {
        let joint = JointAb::new(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            joint.pmi(1, 0),
            Err(Error::ZeroProbabilitySignal { .. })
        ));
    }

    #[test]
    fn pmi_symmetric_under_transpose() {
        let joint = JointAb::new(vec![vec![0.3, 0.1, 0.05], vec![0.15, 0.2, 0.2]]).unwrap();
        let t = joint.transposed();
        for a in 0..2 {
            for b in 0..3 {
                assert!((joint.pmi(a, b).unwrap() - t.pmi(b, a).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn posterior_uninformative_view_returns_prior() {
        let prior_y = Simplex::new(vec![0.3, 0.7]).unwrap();
        let prior = TripletPrior::new(
            prior_y.clone(),
            vec![Simplex::uniform(3), Simplex::uniform(3)],
            vec![Simplex::uniform(2), Simplex::uniform(2)],
        )
        .unwrap();
        for x in 0..3 {
            let post = prior.posterior(View::A, x).unwrap();
            assert!(post.tv_distance(&prior_y) < 1e-12);
        }
    }

    #[test]
    fn posterior_deterministic_channel_returns_point_mass() {
        let prior = TripletPrior::new(
            Simplex::new(vec![0.4, 0.6]).unwrap(),
            vec![Simplex::point_mass(2, 0), Simplex::point_mass(2, 1)],
            vec![Simplex::uniform(2), Simplex::uniform(2)],
        )
        .unwrap();
        for x in 0..2 {
            let post = prior.posterior(View::A, x).unwrap();
            assert!(post.tv_distance(&Simplex::point_mass(2, x)) < 1e-12);
        }
    }

    #[test]
    fn posterior_hand_value() {
        let post = demo_prior().posterior(View::A, 0).unwrap();
        assert!(post.tv_distance(&Simplex::new(vec![0.8, 0.2]).unwrap()) < 1e-12);
    }

    #[test]
    fn posterior_zero_probability_signal_errors() {
        let prior = TripletPrior::new(
            Simplex::new(vec![0.5, 0.5]).unwrap(),
            vec![Simplex::point_mass(3, 0), Simplex::point_mass(3, 1)],
            vec![Simplex::uniform(2), Simplex::uniform(2)],
        )
        .unwrap();
        assert!(prior.posterior(View::A, 2).is_err());
    }

    #[test]
    fn aggregate_drops_uninformative_view() {
        let prior_y = Simplex::new(vec![0.5, 0.5]).unwrap();
        let p_b = Simplex::new(vec![0.9, 0.1]).unwrap();
        let agg = aggregate_forecast(&prior_y, &p_b, &prior_y).unwrap();
        assert!(agg.tv_distance(&p_b) < 1e-12);
        let both_prior = aggregate_forecast(&prior_y, &prior_y, &prior_y).unwrap();
        assert!(both_prior.tv_distance(&prior_y) < 1e-12);
    }

    #[test]
    fn aggregate_hand_value() {
        let agg = aggregate_forecast(
            &Simplex::new(vec![0.7, 0.3]).unwrap(),
            &Simplex::new(vec![0.6, 0.4]).unwrap(),
            &Simplex::new(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        assert!((agg[0] - 0.42 / 0.54).abs() < 1e-12);
        assert!((agg[1] - 0.12 / 0.54).abs() < 1e-12);
    }

    #[test]
    fn aggregate_incompatible_forecasts_error() {
        let r = aggregate_forecast(
            &Simplex::point_mass(2, 0),
            &Simplex::point_mass(2, 1),
            &Simplex::uniform(2),
        );
        assert!(matches!(r, Err(Error::IncompatibleForecasts)));
    }

    #[test]
    fn aggregation_matches_direct_joint_posterior() {
        let prior = demo_prior();
        for a in 0..2 {
            for b in 0..2 {
                let agg = aggregate_forecast(
                    &prior.posterior(View::A, a).unwrap(),
                    &prior.posterior(View::B, b).unwrap(),
                    prior.prior_y(),
                )
                .unwrap();
                let direct = prior.joint_posterior(a, b).unwrap();
                assert!(agg.tv_distance(&direct) < 1e-10);
            }
        }
    }

    #[test]
    fn ci_identity_exact_on_factored_priors() {
        assert!(verify_ci_identity(&demo_prior()) <= 1e-12);
        let single = TripletPrior::new(
            Simplex::new(vec![1.0]).unwrap(),
            vec![Simplex::new(vec![0.3, 0.7]).unwrap()],
            vec![Simplex::new(vec![0.6, 0.4]).unwrap()],
        )
        .unwrap();
        // both sides equal 1; only marginal-sum rounding remains
        assert!(verify_ci_identity(&single) <= 1e-15);
    }

    #[test]
    fn ci_formula_fails_on_non_ci_joint() {
        // A joint over (X_A, X_B) that is not conditionally independent given
        // the mismatched Y below: evaluate both sides of the identity by hand.
        let joint = JointAb::new(vec![vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        // Pretend Y is uniform binary with uninformative channels. The RHS is
        // then 1 everywhere while the true PMI is far from 1.
        let fake = TripletPrior::new(
            Simplex::new(vec![0.5, 0.5]).unwrap(),
            vec![Simplex::uniform(2), Simplex::uniform(2)],
            vec![Simplex::uniform(2), Simplex::uniform(2)],
        )
        .unwrap();
        let mut residual: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let rhs: f64 = (0..2)
                    .map(|y| {
                        fake.posterior(View::A, a).unwrap()[y]
                            * fake.posterior(View::B, b).unwrap()[y]
                            / fake.prior_y()[y]
                    })
                    .sum();
                residual = residual.max((joint.pmi(a, b).unwrap() - rhs).abs());
            }
        }
        assert!(residual > 0.5);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_overlap() {
        let prior = demo_prior();
        let s1 = sample_tasks(&prior, 9, 4, 7).unwrap();
        let s2 = sample_tasks(&prior, 9, 4, 7).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 9);
        let n_both = s1.iter().filter(|t| t.x_a.is_some() && t.x_b.is_some()).count();
        assert_eq!(n_both, 4);
        // Remaining tasks alternate A-only / B-only.
        assert!(s1[4].x_a.is_some() && s1[4].x_b.is_none());
        assert!(s1[5].x_a.is_none() && s1[5].x_b.is_some());
        assert!(sample_tasks(&prior, 0, 0, 1).unwrap().is_empty());
        assert!(sample_tasks(&prior, 1, 2, 1).is_err());
    }

    #[test]
    fn empirical_joint_approaches_induced_joint() {
        let prior = demo_prior();
        let n = 10_000;
        let samples = sample_tasks(&prior, n, n, 123).unwrap();
        let joint = prior.induce_joint();
        let mut counts = vec![vec![0.0; 2]; 2];
        for s in &samples {
            counts[s.x_a.unwrap()][s.x_b.unwrap()] += 1.0 / n as f64;
        }
        let bound = 3.0 / (n as f64).sqrt();
        for a in 0..2 {
            for b in 0..2 {
                assert!((counts[a][b] - joint.cell(a, b)).abs() <= bound);
            }
        }
    }

    #[test]
    fn samples_csv_round_trip() {
        let samples = vec![
            TaskSample::both(0, 1, 0),
            TaskSample::a_only(1, 2),
            TaskSample::b_only(2, 1),
        ];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples).unwrap();
        let back = read_samples_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn prior_json_round_trip_uses_spec_field_names() {
        let prior = demo_prior();
        let text = serde_json::to_string(&prior).unwrap();
        for key in ["sigma_a", "sigma_b", "sigma_y", "prior_y", "cond_a", "cond_b"] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        let back: TripletPrior = serde_json::from_str(&text).unwrap();
        assert_eq!(back, prior);
        // Unknown keys are rejected.
        let bad = text.replace("\"sigma_a\"", "\"sigma_a\":2,\"extra\"");
        assert!(serde_json::from_str::<TripletPrior>(&bad).is_err());
    }
}
