use std::collections::BTreeMap;

use num::{BigRational, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::enumerate::SignSpace;
use super::report::{ConstantTag, InequalityReport};
use super::{enumerate_rademacher, DistanceDistribution, RademacherScenario, EXACT_MAX_N};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Subsets `B_1..B_m` of `{1..n}` (1-based) with `B_j ∩ B_k ∈ {B_j, ∅}`
/// for `j <= k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaminarFamily {
    pub sets: Vec<Vec<usize>>,
}

impl LaminarFamily {
    pub fn new(sets: Vec<Vec<usize>>) -> Self {
        LaminarFamily { sets }
    }

    /// `{1}, {1,2}, …, {1..n}`
    pub fn prefixes(n: usize) -> Self {
        Self::new((1..=n).map(|k| (1..=k).collect()).collect())
    }

    /// `{n}, {n-1,n}, …, {1..n}`
    pub fn suffixes(n: usize) -> Self {
        Self::new((1..=n).map(|k| (n - k + 1..=n).collect()).collect())
    }

    /// `{1}, {2}, …, {n}`
    pub fn singletons(n: usize) -> Self {
        Self::new((1..=n).map(|k| vec![k]).collect())
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let sets = v.get("sets").unwrap_or(v);
        serde_json::from_value(sets.clone()).map_err(|e| Error::InvalidFamily(e.to_string()))
    }

    fn masks(&self, n: usize) -> Result<Vec<u64>> {
        if !validate_laminar(self) {
            return Err(Error::InvalidFamily("sets must be nonempty and each B_j ∩ B_k (j <= k) must be B_j or empty".into()));
        }
        self.sets
            .iter()
            .map(|set| {
                set.iter().try_fold(0u64, |mask, &i| {
                    if i == 0 || i > n {
                        Err(Error::InvalidFamily(format!("index {i} is outside 1..={n}")))
                    } else {
                        Ok(mask | 1 << (i - 1))
                    }
                })
            })
            .collect()
    }
}

pub fn validate_laminar(family: &LaminarFamily) -> bool {
    let sets: Vec<std::collections::BTreeSet<usize>> =
        family.sets.iter().map(|s| s.iter().copied().collect()).collect();
    if sets.iter().any(|s| s.is_empty()) {
        return false;
    }
    for (j, bj) in sets.iter().enumerate() {
        for bk in &sets[j + 1..] {
            let common = bj.intersection(bk).count();
            if common != 0 && common != bj.len() {
                return false;
            }
        }
    }
    true
}

/// Laws of `M = max_k d(1, X_{B_k}^2)` and `D = d(1, S_n)` from one joint
/// pass over all sign vectors, where `X_i = x_i^{r_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevyTable {
    pub max_law: DistanceDistribution,
    pub sum_law: DistanceDistribution,
    #[serde(skip)]
    witness: Value,
}

pub fn levy_table(scenario: &RademacherScenario, family: &LaminarFamily) -> Result<LevyTable> {
    let n = scenario.n();
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds the exact-mode limit of {EXACT_MAX_N}")));
    }
    let masks = family.masks(n)?;
    let squares = SignSpace::new(&scenario.instance, &scenario.elements, 2)?;
    let plain = SignSpace::new(&scenario.instance, &scenario.elements, 1)?;
    let inst = &scenario.instance;
    type Hist = (BTreeMap<Scalar, u64>, BTreeMap<Scalar, u64>);
    let parts: Vec<Result<Hist>> = plain
        .chunks()
        .into_par_iter()
        .map(|(start, end)| {
            let mut hist: Hist = Default::default();
            let mut failure = None;
            plain.for_each_gray(start, end, |signs, sum| {
                let step = || -> Result<(Scalar, Scalar)> {
                    let mut max = Scalar::zero();
                    for &mask in &masks {
                        let d = inst.norm(&squares.product_over(signs, mask)?)?;
                        if d > max {
                            max = d;
                        }
                    }
                    Ok((max, inst.norm(sum)?))
                };
                match step() {
                    Ok((m, d)) => {
                        *hist.0.entry(m).or_insert(0) += 1;
                        *hist.1.entry(d).or_insert(0) += 1;
                    }
                    Err(e) => failure = failure.take().or(Some(e)),
                }
            })?;
            match failure {
                Some(e) => Err(e),
                None => Ok(hist),
            }
        })
        .collect();
    let mut max_counts = BTreeMap::new();
    let mut sum_counts = BTreeMap::new();
    for part in parts {
        let (m, d) = part?;
        for (k, c) in m {
            *max_counts.entry(k).or_insert(0) += c;
        }
        for (k, c) in d {
            *sum_counts.entry(k).or_insert(0) += c;
        }
    }
    let total = 1u64 << n;
    let mut witness = scenario.to_json();
    witness["family"] = serde_json::to_value(family)?;
    Ok(LevyTable {
        max_law: DistanceDistribution::from_counts(max_counts, total),
        sum_law: DistanceDistribution::from_counts(sum_counts, total),
        witness,
    })
}

fn require_positive(name: &str, x: &Scalar) -> Result<()> {
    let positive = match x {
        Scalar::Exact(r) => r.is_positive(),
        Scalar::Approx(f) => *f > 0.0,
    };
    if positive {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive")))
    }
}

fn probability(r: BigRational) -> Scalar {
    Scalar::Exact(r)
}

impl LevyTable {
    /// `P(M > s+t) <= P(D > s) + P(D > t)`.
    pub fn check(&self, s: &Scalar, t: &Scalar) -> Result<InequalityReport> {
        require_positive("s", s)?;
        require_positive("t", t)?;
        let lhs = self.max_law.tail_gt(&s.add(t));
        let rhs = self.sum_law.tail_gt(s) + self.sum_law.tail_gt(t);
        let mut witness = self.witness.clone();
        witness["s"] = json!(s.to_string());
        witness["t"] = json!(t.to_string());
        let exact = self.max_law.is_exact() && self.sum_law.is_exact() && s.is_exact() && t.is_exact();
        Ok(InequalityReport::new(
            "levy",
            probability(lhs.clone()),
            probability(rhs.clone()),
            ConstantTag { value: Scalar::from_int(1), formula: "P(max_k d(1,X_{B_k}^2)>s+t)<=P(d(1,S_n)>s)+P(d(1,S_n)>t)".into() },
            lhs <= rhs,
            exact,
            witness,
        ))
    }
}

pub fn check_levy(scenario: &RademacherScenario, family: &LaminarFamily, s: &Scalar, t: &Scalar) -> Result<InequalityReport> {
    require_positive("s", s)?;
    require_positive("t", t)?;
    levy_table(scenario, family)?.check(s, t)
}

/// `P(d(1, ∏ x_k^{2 r_k}) > s+t+u+v) <= (P(P_n > s) + P(P_n > t)) (P(P_n > u) + P(P_n > v))`.
pub fn check_tail_product(
    scenario: &RademacherScenario,
    s: &Scalar,
    t: &Scalar,
    u: &Scalar,
    v: &Scalar,
) -> Result<InequalityReport> {
    for (name, x) in [("s", s), ("t", t), ("u", u), ("v", v)] {
        require_positive(name, x)?;
    }
    let doubled = enumerate_rademacher(scenario, 2)?;
    let base = enumerate_rademacher(scenario, 1)?;
    let lhs = doubled.tail_gt(&s.add(t).add(u).add(v));
    let rhs = (base.tail_gt(s) + base.tail_gt(t)) * (base.tail_gt(u) + base.tail_gt(v));
    let mut witness = scenario.to_json();
    for (name, x) in [("s", s), ("t", t), ("u", u), ("v", v)] {
        witness[name] = json!(x.to_string());
    }
    let exact = doubled.is_exact() && base.is_exact() && [s, t, u, v].iter().all(|x| x.is_exact());
    Ok(InequalityReport::new(
        "tail-product",
        probability(lhs.clone()),
        probability(rhs.clone()),
        ConstantTag { value: Scalar::from_int(1), formula: "(P(P_n>s)+P(P_n>t))(P(P_n>u)+P(P_n>v))".into() },
        lhs <= rhs,
        exact,
        witness,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Element, GroupInstance};
    use crate::scalar::{int, ratio};

    fn z(xs: &[i64]) -> RademacherScenario {
        RademacherScenario::new(
            GroupInstance::free_abelian(1),
            xs.iter().map(|x| Element::Ints(vec![*x])).collect(),
            int(1),
            int(1),
        )
        .unwrap()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::Exact(ratio(n, d))
    }

    /// Direct evaluation over sign vectors, independent of the Gray walk.
    fn brute_levy(xs: &[i64], family: &[Vec<usize>], s: i64, t: i64) -> (BigRational, BigRational) {
        let n = xs.len();
        let (mut lhs, mut rhs) = (0i64, 0i64);
        for signs in 0..1u32 << n {
            let r = |i: usize| if signs >> i & 1 == 1 { -1 } else { 1 };
            let max = family.iter().map(|b| (2 * b.iter().map(|&i| r(i - 1) * xs[i - 1]).sum::<i64>()).abs()).max().unwrap();
            let sum: i64 = (0..n).map(|i| r(i) * xs[i]).sum();
            lhs += (max > s + t) as i64;
            rhs += (sum.abs() > s) as i64 + (sum.abs() > t) as i64;
        }
        (ratio(lhs, 1 << n), ratio(rhs, 1 << n))
    }

    #[test]
    fn laminar_examples() {
        assert!(validate_laminar(&LaminarFamily::new(vec![vec![1], vec![1, 2], vec![1, 2, 3]])));
        assert!(validate_laminar(&LaminarFamily::new(vec![vec![1], vec![1, 2], vec![3, 4, 5], vec![3, 4, 5, 6]])));
        assert!(!validate_laminar(&LaminarFamily::new(vec![vec![1, 2], vec![2, 3]])));
        assert!(!validate_laminar(&LaminarFamily::new(vec![vec![1, 2], vec![1]])));
        assert!(!validate_laminar(&LaminarFamily::new(vec![vec![]])));
        assert!(validate_laminar(&LaminarFamily::suffixes(4)));
        assert!(validate_laminar(&LaminarFamily::singletons(4)));
    }

    #[test]
    fn levy_examples() {
        let fam = LaminarFamily::prefixes(2);
        let r = check_levy(&z(&[1, 1]), &fam, &q(1, 1), &q(1, 1)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone()), (q(1, 2), q(1, 1)));
        assert!(r.satisfied && r.exact);

        let r = check_levy(&z(&[1, 2, 3]), &LaminarFamily::suffixes(3), &q(2, 1), &q(2, 1)).unwrap();
        let (l, rr) = brute_levy(&[1, 2, 3], &LaminarFamily::suffixes(3).sets, 2, 2);
        assert_eq!((r.lhs.clone(), r.rhs.clone()), (Scalar::Exact(l), Scalar::Exact(rr)));
        assert!(r.satisfied);

        // s + t >= 2 Σ |x_k| caps every distance
        let r = check_levy(&z(&[1, 2]), &fam, &q(3, 1), &q(3, 1)).unwrap();
        assert_eq!(r.lhs, Scalar::zero());
        assert_eq!(r.slack.to_string(), "inf");
    }

    #[test]
    fn levy_matches_brute_force() {
        for xs in [vec![1, -2, 2], vec![2, 2, 0, 1], vec![-1, 1, 1, -2, 2]] {
            let n = xs.len();
            for fam in [LaminarFamily::prefixes(n), LaminarFamily::singletons(n)] {
                let table = levy_table(&z(&xs), &fam).unwrap();
                for (s, t) in [(1, 1), (1, 3), (2, 1)] {
                    let r = table.check(&Scalar::from_int(s), &Scalar::from_int(t)).unwrap();
                    let (l, rr) = brute_levy(&xs, &fam.sets, s, t);
                    assert_eq!((r.lhs, r.rhs), (Scalar::Exact(l), Scalar::Exact(rr)));
                }
            }
        }
    }

    #[test]
    fn invalid_families_and_parameters() {
        let s = z(&[1, 1]);
        let err = check_levy(&s, &LaminarFamily::new(vec![vec![1, 2], vec![2, 3]]), &q(1, 1), &q(1, 1)).unwrap_err();
        assert_eq!(err.code(), "invalid-family");
        let err = check_levy(&s, &LaminarFamily::new(vec![vec![3]]), &q(1, 1), &q(1, 1)).unwrap_err();
        assert_eq!(err.code(), "invalid-family");
        assert!(check_levy(&s, &LaminarFamily::prefixes(2), &q(0, 1), &q(1, 1)).is_err());
        let fam = LaminarFamily::from_json(&json!([[1], [1, 2]])).unwrap();
        assert_eq!(fam, LaminarFamily::prefixes(2));
    }

    #[test]
    fn tail_product_examples() {
        let half = q(1, 2);
        let r = check_tail_product(&z(&[1, 1, 1]), &half, &half, &half, &half).unwrap();
        // |2 S_3| > 2 iff |S_3| = 3: probability 2/8
        assert_eq!(r.lhs, q(1, 4));
        // P(|S_3| > 1/2) = 1, so the right side is (1 + 1)(1 + 1)
        assert_eq!(r.rhs, q(4, 1));
        assert!(r.satisfied && r.exact);
        let r = check_tail_product(&z(&[0, 0]), &half, &half, &half, &half).unwrap();
        assert_eq!(r.lhs, Scalar::zero());
        assert!(r.satisfied);
        let z2 = GroupInstance::free_abelian(2);
        let xs = vec![Element::Ints(vec![1, 0]), Element::Ints(vec![0, 1]), Element::Ints(vec![-1, 0])];
        let s = RademacherScenario::new(z2, xs, int(1), int(1)).unwrap();
        let one = q(1, 1);
        assert!(check_tail_product(&s, &one, &one, &one, &one).unwrap().satisfied);
    }
}
