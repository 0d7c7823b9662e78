//! Sample-based checks of `J`-normedness, torsion and weak commutativity.
//!
//! A verdict that "holds" is a certificate on the sample only; a reported
//! counterexample is a proof that the instance is not normed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Exactness, MetricSemigroup};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance for the normedness equation on float-valued families.
pub const FLOAT_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormCounterexample {
    pub element: String,
    pub n: u64,
    /// `d(z, z^{n+1})`
    pub lhs: Scalar,
    /// `n · d(z, z^2)`
    pub rhs: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormednessVerdict {
    pub j_tested: Vec<u64>,
    pub holds: BTreeMap<u64, bool>,
    pub counterexample: Option<NormCounterexample>,
    /// No sampled `z` is `{2}`-normed along its squaring chain while failing
    /// some `n` in `J`; a violation would indicate an implementation bug.
    pub equivalence_consistent: bool,
    pub elements_checked: usize,
}

impl NormednessVerdict {
    pub fn all_hold(&self) -> bool {
        self.holds.values().all(|h| *h)
    }
}

fn scalars_equal<S: MetricSemigroup>(s: &S, a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x == y,
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            (x - y).abs() <= FLOAT_RELATIVE_TOLERANCE * x.abs().max(y.abs()) + s.tolerance()
        }
    }
}

/// `(d(z, z^{n+1}), n · d(z, z^2))`.
pub fn normedness_sides<S: MetricSemigroup>(s: &S, z: &S::Elem, n: u64) -> Result<(Scalar, Scalar)> {
    let k = i64::try_from(n).map_err(|_| Error::PowerOverflow)?;
    let zn1 = s.power(z, k.checked_add(1).ok_or(Error::PowerOverflow)?)?;
    let z2 = s.compose(z, z)?;
    let lhs = s.distance(z, &zn1)?;
    let rhs = s.distance(z, &z2)?.scale(&num::BigRational::from_integer(n.into()));
    Ok((lhs, rhs))
}

fn holds_at<S: MetricSemigroup>(s: &S, z: &S::Elem, n: u64) -> Result<(bool, Scalar, Scalar)> {
    let (lhs, rhs) = normedness_sides(s, z, n)?;
    Ok((scalars_equal(s, &lhs, &rhs), lhs, rhs))
}

/// `{2}`-normed at `z, z^2, z^4, …, z^{2^{k-1}}` where `2^k > n_max`. By the
/// doubling argument this forces `d(z, z^{m+1}) = m d(z, z^2)` for all
/// `m <= n_max`.
fn two_normed_on_chain<S: MetricSemigroup>(s: &S, z: &S::Elem, n_max: u64) -> Result<bool> {
    let mut w = z.clone();
    let mut reach = 1u64;
    loop {
        if !holds_at(s, &w, 2)?.0 {
            return Ok(false);
        }
        reach *= 2;
        if reach > n_max {
            return Ok(true);
        }
        w = s.compose(&w, &w)?;
    }
}

struct ElementResult {
    per_n: Vec<(u64, bool, Scalar, Scalar)>,
    chain_two: bool,
}

/// Checks `d(z, z^{n+1}) = n · d(z, z^2)` for every `z` in `elements` and `n`
/// in `J`. Elements are evaluated in parallel; the reported counterexample is
/// the first in (element, n) order.
pub fn check_j_normed<S: MetricSemigroup>(s: &S, j: &[u64], elements: &[S::Elem]) -> Result<NormednessVerdict> {
    if j.is_empty() || j.contains(&0) {
        return Err(Error::InvalidParameter("J must be a nonempty set of positive integers".into()));
    }
    if elements.is_empty() {
        return Err(Error::InvalidParameter("at least one element is required".into()));
    }
    let mut js: Vec<u64> = j.to_vec();
    js.sort_unstable();
    js.dedup();
    let n_max = *js.last().expect("nonempty");

    let results: Vec<Result<ElementResult>> = elements
        .par_iter()
        .map(|z| {
            let mut per_n = Vec::with_capacity(js.len());
            for &n in &js {
                let (ok, lhs, rhs) = holds_at(s, z, n)?;
                per_n.push((n, ok, lhs, rhs));
            }
            let chain_two = two_normed_on_chain(s, z, n_max)?;
            Ok(ElementResult { per_n, chain_two })
        })
        .collect();

    let mut holds: BTreeMap<u64, bool> = js.iter().map(|n| (*n, true)).collect();
    let mut counterexample = None;
    let mut consistent = true;
    for (z, r) in elements.iter().zip(results) {
        let r = r?;
        let mut all_ok = true;
        for (n, ok, lhs, rhs) in r.per_n {
            if !ok {
                all_ok = false;
                holds.insert(n, false);
                if counterexample.is_none() {
                    counterexample = Some(NormCounterexample { element: s.describe(z), n, lhs, rhs });
                }
            }
        }
        if r.chain_two && !all_ok {
            consistent = false;
        }
    }
    Ok(NormednessVerdict {
        j_tested: js,
        holds,
        counterexample,
        equivalence_consistent: consistent,
        elements_checked: elements.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n_max: u64,
    pub elements_checked: usize,
    /// `{2}`-normed along every squaring chain of the sample.
    pub two_normed: bool,
    /// `{1, …, n_max}`-normed at every sampled element.
    pub n_normed: bool,
    pub consistent: bool,
    pub violations: Vec<String>,
}

/// Empirical check that `{2}`-normedness and `{1..n_max}`-normedness agree.
/// Each sampled `z` contributes its squaring chain, which is exactly what the
/// doubling argument consumes.
pub fn check_normed_equivalence<S: MetricSemigroup>(s: &S, elements: &[S::Elem], n_max: u64) -> Result<EquivalenceReport> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("n_max must be at least 2".into()));
    }
    let js: Vec<u64> = (1..=n_max).collect();
    let rows: Vec<Result<(bool, bool)>> = elements
        .par_iter()
        .map(|z| {
            let chain = two_normed_on_chain(s, z, n_max)?;
            let mut full = true;
            for &n in &js {
                if !holds_at(s, z, n)?.0 {
                    full = false;
                    break;
                }
            }
            Ok((chain, full))
        })
        .collect();
    let mut two_normed = true;
    let mut n_normed = true;
    let mut violations = Vec::new();
    for (z, row) in elements.iter().zip(rows) {
        let (chain, full) = row?;
        two_normed &= chain;
        n_normed &= full;
        if chain != full {
            violations.push(s.describe(z));
        }
    }
    Ok(EquivalenceReport {
        n_max,
        elements_checked: elements.len(),
        two_normed,
        n_normed,
        consistent: violations.is_empty(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorsionWitness {
    pub element: String,
    pub order: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorsionReport {
    pub order_max: u64,
    pub torsion_free: bool,
    pub witnesses: Vec<TorsionWitness>,
    /// Every torsion element also refutes normedness.
    pub cross_check_consistent: bool,
}

/// Finds sampled `z ≠ 1` with `z^n = 1` for some `n <= order_max`, and
/// confirms each such `z` is a normedness counterexample.
pub fn check_torsion_free<S: MetricSemigroup>(s: &S, elements: &[S::Elem], order_max: u64) -> Result<TorsionReport> {
    let unit = s
        .identity()
        .ok_or_else(|| Error::InvalidParameter("torsion check needs an identity; adjoin one first".into()))?;
    let mut witnesses = Vec::new();
    let mut consistent = true;
    for z in elements {
        if s.same_element(z, &unit) {
            continue;
        }
        let mut acc = z.clone();
        for order in 2..=order_max {
            acc = s.compose(&acc, z)?;
            if s.same_element(&acc, &unit) {
                let j: Vec<u64> = (2..=order.max(2)).collect();
                let verdict = check_j_normed(s, &j, std::slice::from_ref(z))?;
                if verdict.counterexample.is_none() {
                    consistent = false;
                }
                witnesses.push(TorsionWitness { element: s.describe(z), order });
                break;
            }
        }
    }
    Ok(TorsionReport { order_max, torsion_free: witnesses.is_empty(), witnesses, cross_check_consistent: consistent })
}

/// Least `n` in `1..=n_max` with `(gh)^{2^n} = g^{2^n} h^{2^n}`.
pub fn check_weak_commutativity<S: MetricSemigroup>(s: &S, g: &S::Elem, h: &S::Elem, n_max: u32) -> Result<Option<u32>> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut gh = s.compose(g, h)?;
    let mut gp = g.clone();
    let mut hp = h.clone();
    for n in 1..=n_max {
        gh = s.compose(&gh, &gh)?;
        gp = s.compose(&gp, &gp)?;
        hp = s.compose(&hp, &hp)?;
        if s.same_element(&gh, &s.compose(&gp, &hp)?) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Quick `{2..n_max}` gate used by the normed inequality regimes.
pub fn normed_gate<S: MetricSemigroup>(s: &S, elements: &[S::Elem], n_max: u64) -> Result<NormednessVerdict> {
    let j: Vec<u64> = (2..=n_max).collect();
    check_j_normed(s, &j, elements)
}

pub(crate) fn is_float<S: MetricSemigroup>(s: &S) -> bool {
    s.capabilities().distance_exactness == Exactness::Float
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Element, GroupInstance};
    use crate::scalar::{int, ratio};
    use crate::word_norm::parse_word;

    fn ints(v: &[i64]) -> Element {
        Element::Ints(v.to_vec())
    }

    #[test]
    fn integers_are_normed() {
        let z = GroupInstance::free_abelian(1);
        let j: Vec<u64> = (2..=10).collect();
        let v = check_j_normed(&z, &j, &[ints(&[1]), ints(&[3]), ints(&[-7])]).unwrap();
        assert!(v.all_hold() && v.counterexample.is_none() && v.equivalence_consistent);
    }

    #[test]
    fn cyclic_five_is_refuted_at_two() {
        let g = GroupInstance::cyclic(5, 1).unwrap();
        let v = check_j_normed(&g, &[2], &[Element::Residues(vec![2])]).unwrap();
        let c = v.counterexample.unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.lhs, Scalar::Exact(int(1)));
        assert_eq!(c.rhs, Scalar::Exact(int(4)));
        // 1 and 4 pass at n = 2 but every nonzero residue fails on {2,3,4}
        for z in 1..5 {
            let v = check_j_normed(&g, &[2], &[Element::Residues(vec![z])]).unwrap();
            assert_eq!(v.counterexample.is_some(), z == 2 || z == 3, "z = {z}");
            let v = check_j_normed(&g, &[2, 3, 4], &[Element::Residues(vec![z])]).unwrap();
            assert!(v.counterexample.is_some() && v.equivalence_consistent, "z = {z}");
        }
    }

    #[test]
    fn torus_is_refuted() {
        let t = GroupInstance::torus(1);
        let v = check_j_normed(&t, &[2], &[Element::Angles(vec![0.3])]).unwrap();
        let c = v.counterexample.unwrap();
        assert!((c.lhs.to_f64() - 0.4).abs() < 1e-12);
        assert!((c.rhs.to_f64() - 0.6).abs() < 1e-12);
        assert!(is_float(&t));
    }

    #[test]
    fn equivalence_on_weighted_lattice_and_graph_space() {
        let g = GroupInstance::weighted_free_abelian(vec![int(1), ratio(1, 2)]).unwrap();
        let elems = g.enumerate_elements(Some(3)).unwrap();
        let r = check_normed_equivalence(&g, &elems, 16).unwrap();
        assert!(r.consistent && r.two_normed && r.n_normed);

        let h = GroupInstance::graph_space(3).unwrap();
        let elems = h.enumerate_elements(None).unwrap();
        let r = check_normed_equivalence(&h, &elems, 16).unwrap();
        assert!(r.consistent && !r.two_normed && !r.n_normed);
    }

    #[test]
    fn large_cyclic_group_stays_consistent() {
        // {2} holds at 1 in Z/100 but fails further along the squaring chain
        let g = GroupInstance::cyclic(100, 1).unwrap();
        let v = check_j_normed(&g, &(2..=60).collect::<Vec<_>>(), &[Element::Residues(vec![1])]).unwrap();
        assert!(v.counterexample.is_some());
        assert!(v.equivalence_consistent);
    }

    #[test]
    fn torsion_examples() {
        let z = GroupInstance::free_abelian(1);
        let r = check_torsion_free(&z, &z.enumerate_elements(Some(5)).unwrap(), 20).unwrap();
        assert!(r.torsion_free);

        let h = GroupInstance::graph_space(3).unwrap();
        let r = check_torsion_free(&h, &h.enumerate_elements(None).unwrap(), 10).unwrap();
        assert_eq!(r.witnesses.len(), 7);
        assert!(r.witnesses.iter().all(|w| w.order == 2));
        assert!(r.cross_check_consistent);

        let c6 = GroupInstance::cyclic(6, 1).unwrap();
        let r = check_torsion_free(&c6, &[Element::Residues(vec![2])], 10).unwrap();
        assert_eq!(r.witnesses, vec![TorsionWitness { element: "(2)".into(), order: 3 }]);
        assert!(r.cross_check_consistent);
    }

    #[test]
    fn torsion_needs_identity() {
        let n = GroupInstance::positive_naturals(1);
        assert!(check_torsion_free(&n, &[ints(&[1])], 5).is_err());
    }

    #[test]
    fn weak_commutativity_examples() {
        let c5 = GroupInstance::cyclic(5, 1).unwrap();
        let r = check_weak_commutativity(&c5, &Element::Residues(vec![1]), &Element::Residues(vec![2]), 3).unwrap();
        assert_eq!(r, Some(1));
        let z2 = GroupInstance::free_abelian(2);
        assert_eq!(check_weak_commutativity(&z2, &ints(&[1, 0]), &ints(&[4, -2]), 3).unwrap(), Some(1));
        let f2 = GroupInstance::free_group(2).unwrap();
        let a = Element::Word(parse_word("a").unwrap());
        let b = Element::Word(parse_word("b").unwrap());
        assert_eq!(check_weak_commutativity(&f2, &a, &b, 6).unwrap(), None);
    }
}
