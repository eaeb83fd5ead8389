//! Probability vectors over a finite signal set.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for the sum-to-one check at construction.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A distribution over a finite signal set: nonnegative entries summing to one
/// within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Simplex(Vec<f64>);

impl Simplex {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, &v) in probs.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {v}, expected a finite nonnegative value"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1 within {SUM_TOLERANCE}"
            )));
        }
        Ok(Simplex(probs))
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, cannot normalize"
            )));
        }
        Simplex::new(weights.into_iter().map(|w| w / sum).collect())
    }

    /// The uniform distribution over `n` signals.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one signal");
        Simplex(vec![1.0 / n as f64; n])
    }

    /// Point mass on signal `at`.
    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass index out of range");
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Simplex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Smallest entry.
    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when every entry is strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    /// Total variation distance, `0.5 * Σ |p_i - q_i|`.
    pub fn tv_distance(&self, other: &Simplex) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        0.5 * self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Entries relabeled so that output position `y` holds `self[perm[y]]`.
    pub fn permuted(&self, perm: &[usize]) -> Simplex {
        debug_assert_eq!(perm.len(), self.len());
        Simplex(perm.iter().map(|&src| self.0[src]).collect())
    }
}

impl std::ops::Index<usize> for Simplex {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl TryFrom<Vec<f64>> for Simplex {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Simplex::new(v)
    }
}

impl From<Simplex> for Vec<f64> {
    fn from(s: Simplex) -> Vec<f64> {
        s.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_negative_entries() {
        assert!(Simplex::new(vec![0.5, 0.6, -0.1]).is_err());
    }

    #[test]
    fn rejects_bad_sum() {
        assert!(Simplex::new(vec![0.5, 0.4]).is_err());
        assert!(Simplex::new(vec![0.5, 0.5 + 2e-9]).is_err());
        assert!(Simplex::new(vec![0.5, 0.5 + 5e-10]).is_ok());
    }

    #[test]
    fn tv_distance_of_disjoint_point_masses_is_one() {
        let p = Simplex::point_mass(3, 0);
        let q = Simplex::point_mass(3, 2);
        assert_eq!(p.tv_distance(&q), 1.0);
    }

    #[test]
    fn permuted_swaps_entries() {
        let p = Simplex::new(vec![0.2, 0.8]).unwrap();
        let swapped = p.permuted(&[1, 0]);
        assert_eq!(swapped.as_slice(), &[0.8, 0.2]);
    }

    #[test]
    fn json_round_trip_is_a_bare_array() {
        let p = Simplex::new(vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.25,0.75]");
        let back: Simplex = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn from_weights_always_yields_valid_simplex(
            w in proptest::collection::vec(0.0f64..10.0, 1..9)
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let s = Simplex::from_weights(w).unwrap();
            prop_assert!((s.as_slice().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
            prop_assert!(s.as_slice().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn tv_distance_is_symmetric_and_bounded(
            a in proptest::collection::vec(1e-3f64..10.0, 4),
            b in proptest::collection::vec(1e-3f64..10.0, 4),
        ) {
            let p = Simplex::from_weights(a).unwrap();
            let q = Simplex::from_weights(b).unwrap();
            let d = p.tv_distance(&q);
            prop_assert!((d - q.tv_distance(&p)).abs() < 1e-15);
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&d));
        }
    }
}
