//! The f-divergence family, its Fenchel dual representation, and f-mutual
//! information for finite joints.
//!
//! A divergence is specified by a convex generator `f` with `f(1) = 0` and is
//! evaluated as `D_f(p, q) = Σ_σ q(σ) f(p(σ) / q(σ))`. Each built-in carries a
//! chosen subgradient `g ∈ ∂f`, the convex conjugate `f*` on its domain, and
//! the analytically composed pair `(g, f* ∘ g)`:
//!
//! | name | `f(t)` | `g(t)` | `f*(g(t))` |
//! |------|--------|--------|------------|
//! | `tvd` | `\|t-1\|` | `sign(log t)` | `sign(log t)` |
//! | `kl` | `t log t` | `1 + log t` | `t` |
//! | `reverse_kl` | `-log t` | `-1/t` | `-1 + log t` |
//! | `pearson` | `(t-1)^2` | `2(t-1)` | `t^2 - 1` |
//! | `squared_hellinger` | `(sqrt t - 1)^2` | `1 - sqrt(1/t)` | `sqrt t - 1` |
//!
//! Storing the composed pair avoids both the restricted domain of `f*` (for
//! `tvd` it is finite only on `[-1, 1]`) and floating-point conjugation error.
//! The f-mutual information of a joint is the divergence of the joint from the
//! product of its marginals; the dual value `E_U[u] - E_V[f*(u)]` never
//! exceeds it, with equality exactly at `u = g(pmi)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::JointAb;
use crate::simplex::Simplex;
use crate::{floored, Error, Result};

/// One f-divergence: the generator, a chosen subgradient, the conjugate, and
/// the composed best-distinguisher pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Divergence {
    /// Total variation distance. `∂f(1) = [-1, 1]`; the symmetric choice
    /// `g(1) = 0` is used. Not differentiable, so recovery results that need
    /// an invertible derivative exclude it.
    TotalVariation,
    /// KL divergence of the first argument from the second.
    Kl,
    ReverseKl,
    Pearson,
    SquaredHellinger,
}

pub const ALL_DIVERGENCES: [Divergence; 5] = [
    Divergence::TotalVariation,
    Divergence::Kl,
    Divergence::ReverseKl,
    Divergence::Pearson,
    Divergence::SquaredHellinger,
];

impl Divergence {
    /// Looks up a built-in by its config name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "tvd" => Ok(Divergence::TotalVariation),
            "kl" => Ok(Divergence::Kl),
            "reverse_kl" => Ok(Divergence::ReverseKl),
            "pearson" => Ok(Divergence::Pearson),
            "squared_hellinger" => Ok(Divergence::SquaredHellinger),
            other => Err(Error::UnknownDivergence(other.into())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Divergence::TotalVariation => "tvd",
            Divergence::Kl => "kl",
            Divergence::ReverseKl => "reverse_kl",
            Divergence::Pearson => "pearson",
            Divergence::SquaredHellinger => "squared_hellinger",
        }
    }

    /// Whether `f` is differentiable with an invertible derivative. False only
    /// for total variation, whose uniqueness guarantees are therefore void.
    pub fn derivative_invertible(self) -> bool {
        !matches!(self, Divergence::TotalVariation)
    }

    /// The convex generator `f`, with `f(1) = 0`.
    pub fn f(self, t: f64) -> f64 {
        match self {
            Divergence::TotalVariation => (t - 1.0).abs(),
            Divergence::Kl => t * t.ln(),
            Divergence::ReverseKl => -t.ln(),
            Divergence::Pearson => (t - 1.0) * (t - 1.0),
            Divergence::SquaredHellinger => {
                let d = t.sqrt() - 1.0;
                d * d
            }
        }
    }

    /// The chosen subgradient `g(t) ∈ ∂f(t)`, monotone nondecreasing.
    pub fn subgradient(self, t: f64) -> f64 {
        match self {
            Divergence::TotalVariation => {
                if t > 1.0 {
                    1.0
                } else if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Divergence::Kl => 1.0 + t.ln(),
            Divergence::ReverseKl => -1.0 / t,
            Divergence::Pearson => 2.0 * (t - 1.0),
            Divergence::SquaredHellinger => 1.0 - (1.0 / t).sqrt(),
        }
    }

    /// The composition `f*(g(t))`, in closed form.
    pub fn conj_of_g(self, t: f64) -> f64 {
        match self {
            Divergence::TotalVariation => self.subgradient(t),
            Divergence::Kl => t,
            Divergence::ReverseKl => -1.0 + t.ln(),
            Divergence::Pearson => t * t - 1.0,
            Divergence::SquaredHellinger => t.sqrt() - 1.0,
        }
    }

    /// Derivative of [`Divergence::subgradient`] where it exists (zero almost
    /// everywhere for total variation).
    pub fn subgradient_slope(self, t: f64) -> f64 {
        match self {
            Divergence::TotalVariation => 0.0,
            Divergence::Kl => 1.0 / t,
            Divergence::ReverseKl => 1.0 / (t * t),
            Divergence::Pearson => 2.0,
            Divergence::SquaredHellinger => 0.5 * t.powf(-1.5),
        }
    }

    /// Derivative of [`Divergence::conj_of_g`] where it exists.
    pub fn conj_of_g_slope(self, t: f64) -> f64 {
        match self {
            Divergence::TotalVariation => 0.0,
            Divergence::Kl => 1.0,
            Divergence::ReverseKl => 1.0 / t,
            Divergence::Pearson => 2.0 * t,
            Divergence::SquaredHellinger => 0.5 / t.sqrt(),
        }
    }

    /// The convex conjugate `f*(x) = sup_t (t x - f(t))` on its domain.
    ///
    /// Inputs outside the domain are an error, not a clamp; silently clamping
    /// would invalidate the duality inequality.
    pub fn conjugate(self, x: f64) -> Result<f64> {
        let out_of_domain = || Error::ConjugateUndefined {
            name: self.name(),
            value: x,
        };
        if !x.is_finite() {
            return Err(out_of_domain());
        }
        match self {
            Divergence::TotalVariation => {
                if (-1.0..=1.0).contains(&x) {
                    Ok(x)
                } else {
                    Err(out_of_domain())
                }
            }
            Divergence::Kl => Ok((x - 1.0).exp()),
            Divergence::ReverseKl => {
                if x < 0.0 {
                    Ok(-1.0 - (-x).ln())
                } else {
                    Err(out_of_domain())
                }
            }
            Divergence::Pearson => Ok(x + 0.25 * x * x),
            Divergence::SquaredHellinger => {
                if x < 1.0 {
                    Ok(x / (1.0 - x))
                } else {
                    Err(out_of_domain())
                }
            }
        }
    }

    /// `D_f(p, q) = Σ_σ q(σ) f(p(σ) / q(σ))`, with the probability floor
    /// applied to both coordinates before the ratio.
    ///
    /// Nonnegative, and zero iff `p = q` for strictly convex `f`. For the `kl`
    /// spec this is `Σ p log(p/q)`; for `tvd` it is `Σ |p - q|`.
    pub fn f_divergence(self, p: &Simplex, q: &Simplex) -> Result<f64> {
        if p.len() != q.len() {
            return Err(Error::LengthMismatch(p.len(), q.len()));
        }
        Ok(p
            .iter()
            .zip(q.iter())
            .map(|(&pi, &qi)| {
                let (pf, qf) = (floored(pi), floored(qi));
                qf * self.f(pf / qf)
            })
            .sum())
    }

    /// `MI^f(X_A; X_B)`: the divergence of the joint from the product of its
    /// marginals. Nonnegative; zero when the joint is a product.
    pub fn mutual_information(self, joint: &JointAb) -> f64 {
        let ma = joint.marginal_a();
        let mb = joint.marginal_b();
        let mut total = 0.0;
        for a in 0..joint.n_a() {
            for b in 0..joint.n_b() {
                let v = floored(ma[a] * mb[b]);
                let u = floored(joint.cell(a, b));
                total += v * self.f(u / v);
            }
        }
        total
    }

    /// The dual value `E_U[u] - E_V[f*(u)]` for an arbitrary distinguisher
    /// table `u` over signal pairs.
    ///
    /// Always at most [`Divergence::mutual_information`]; equality holds
    /// exactly at `u = g(pmi)` (see [`Divergence::best_distinguisher`]).
    /// Errors when some entry of `u` lies outside the domain of `f*`.
    pub fn dual_value(self, joint: &JointAb, u: &[Vec<f64>]) -> Result<f64> {
        if u.len() != joint.n_a() {
            return Err(Error::LengthMismatch(u.len(), joint.n_a()));
        }
        let ma = joint.marginal_a();
        let mb = joint.marginal_b();
        let mut total = 0.0;
        for (a, row) in u.iter().enumerate() {
            if row.len() != joint.n_b() {
                return Err(Error::LengthMismatch(row.len(), joint.n_b()));
            }
            for (b, &ui) in row.iter().enumerate() {
                total += joint.cell(a, b) * ui - ma[a] * mb[b] * self.conjugate(ui)?;
            }
        }
        Ok(total)
    }

    /// The optimal distinguisher table `u*(a, b) = g(pmi(a, b))`, with the
    /// probability floor applied to the PMI so that `g` stays finite on
    /// zero-probability cells.
    pub fn best_distinguisher(self, joint: &JointAb) -> Result<Vec<Vec<f64>>> {
        let pmi = joint.pmi_table()?;
        Ok(pmi
            .into_iter()
            .map(|row| row.into_iter().map(|k| self.subgradient(floored(k))).collect())
            .collect())
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Divergence::by_name(s)
    }
}

impl TryFrom<String> for Divergence {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Divergence::by_name(&s)
    }
}

impl From<Divergence> for String {
    fn from(d: Divergence) -> String {
        d.name().into()
    }
}
