//! Rademacher sums `∏ x_k^{r_k}` over abelian metric groups: exact laws by
//! enumeration of all sign vectors, seeded sampling, moments, and checkers
//! for the Khinchin–Kahane, Lévy, tail-product and maximal inequalities.

mod enumerate;
mod kk;
mod levy;
mod moments;
mod mont;
mod report;
mod scenario;

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};
use serde::Serialize;

use crate::scalar::Scalar;

pub use enumerate::{enumerate_rademacher, sample_rademacher, SignSpace, EXACT_MAX_N};
pub use kk::{check_kk, kk_exponent_l, sharpness_ratio, SharpnessReport};
pub use levy::{check_levy, check_tail_product, levy_table, validate_laminar, LaminarFamily, LevyTable};
pub use moments::{kk_constant, moment, KkConstant, Moment, Regime};
pub use mont::{check_mont, MontMode, PathLaw};
pub use report::{ConstantTag, InequalityReport, Slack};
pub use scenario::RademacherScenario;

/// A finite law of a nonnegative distance: atoms sorted ascending, distinct,
/// with exact probabilities summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceDistribution {
    atoms: Vec<(Scalar, BigRational)>,
}

#[derive(Serialize)]
struct AtomView<'a> {
    distance: &'a Scalar,
    #[serde(with = "crate::scalar::serde_rational")]
    probability: &'a BigRational,
}

impl Serialize for DistanceDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let atoms: Vec<AtomView> = self.atoms.iter().map(|(d, p)| AtomView { distance: d, probability: p }).collect();
        atoms.serialize(s)
    }
}

impl DistanceDistribution {
    /// Builds a law from outcome counts out of `total`.
    pub fn from_counts(counts: BTreeMap<Scalar, u64>, total: u64) -> Self {
        let t = BigInt::from(total);
        let atoms = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(d, c)| (d, BigRational::new(BigInt::from(c), t.clone())))
            .collect();
        DistanceDistribution { atoms }
    }

    /// Builds a law from weighted outcomes; weights are normalized.
    pub fn from_weights(weights: BTreeMap<Scalar, BigRational>) -> Self {
        let total: BigRational = weights.values().fold(BigRational::zero(), |a, b| a + b);
        let atoms = weights.into_iter().filter(|(_, w)| !w.is_zero()).map(|(d, w)| (d, w / &total)).collect();
        DistanceDistribution { atoms }
    }

    pub fn point(value: Scalar) -> Self {
        DistanceDistribution { atoms: vec![(value, BigRational::one())] }
    }

    pub fn atoms(&self) -> &[(Scalar, BigRational)] {
        &self.atoms
    }

    pub fn is_exact(&self) -> bool {
        self.atoms.iter().all(|(d, _)| d.is_exact())
    }

    pub fn total_probability(&self) -> BigRational {
        self.atoms.iter().fold(BigRational::zero(), |a, (_, p)| a + p)
    }

    /// `P(Z > t)`.
    pub fn tail_gt(&self, t: &Scalar) -> BigRational {
        self.atoms.iter().filter(|(d, _)| d > t).fold(BigRational::zero(), |a, (_, p)| a + p)
    }

    /// `P(Z ≥ t)`.
    pub fn tail_ge(&self, t: &Scalar) -> BigRational {
        self.atoms.iter().filter(|(d, _)| d >= t).fold(BigRational::zero(), |a, (_, p)| a + p)
    }

    /// Atoms other than zero.
    pub fn nonzero_atoms(&self) -> impl Iterator<Item = &(Scalar, BigRational)> {
        self.atoms.iter().filter(|(d, _)| !d.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.nonzero_atoms().next().is_none()
    }
}
