//! The metric-semigroup abstraction: composition plus a translation-invariant
//! metric, with the structural operations every instance shares.
//!
//! Concrete families live in [`crate::instances`]; test fixtures implement
//! [`MetricSemigroup`] directly to exercise the failure paths.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num::BigRational;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    ExactRational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub has_identity: bool,
    pub has_inverses: bool,
    pub is_abelian: bool,
    pub distance_exactness: Exactness,
}

/// A semigroup with a translation-invariant metric.
///
/// Only `compose`, `distance`, `identity`, `capabilities` and `sample` are
/// required. The remaining hooks default to "not available" and are
/// overridden by families that have inverses or a linear model.
pub trait MetricSemigroup: Sync {
    type Elem: Clone + PartialEq + Debug + Send + Sync;

    fn compose(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;

    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Scalar>;

    fn identity(&self) -> Option<Self::Elem>;

    fn capabilities(&self) -> Capabilities;

    /// Draws one element; used by seeded audits.
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elem;

    fn inverse(&self, _a: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    /// Element equality. Float-valued families compare up to [`Self::tolerance`].
    fn same_element(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        a == b
    }

    /// Absolute tolerance for distance comparisons; zero for exact families.
    fn tolerance(&self) -> f64 {
        0.0
    }

    /// `k`-fold composition. Non-positive `k` needs an identity (and inverses
    /// when negative).
    fn power(&self, g: &Self::Elem, k: i64) -> Result<Self::Elem> {
        if k <= 0 {
            let unit = self.identity().ok_or(Error::NonPositivePower(k))?;
            if k == 0 {
                return Ok(unit);
            }
            let inv = self.inverse(g).ok_or(Error::NonPositivePower(k))?;
            return self.power(&inv, k.checked_neg().ok_or(Error::PowerOverflow)?);
        }
        let mut base = g.clone();
        let mut acc: Option<Self::Elem> = None;
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => self.compose(&a, &base)?,
                });
            }
            e >>= 1;
            if e > 0 {
                base = self.compose(&base, &base)?;
            }
        }
        Ok(acc.expect("k >= 1"))
    }

    fn describe(&self, e: &Self::Elem) -> String {
        format!("{e:?}")
    }

    /// Canonical representative of the formal difference `p - q`, when the
    /// family can subtract. `None` means "compare by cross-composition".
    fn cancel_common(&self, _p: &Self::Elem, _q: &Self::Elem) -> Option<(Self::Elem, Self::Elem)> {
        None
    }

    /// `e / k` when `e` is exactly divisible by `k`.
    fn divide_exact(&self, _e: &Self::Elem, _k: u64) -> Option<Self::Elem> {
        None
    }

    /// Coordinates in the identified Banach space, for families with a
    /// linear model.
    fn coordinates(&self, _e: &Self::Elem) -> Option<Vec<BigRational>> {
        None
    }

    /// Weights of the weighted-L1 norm on the coordinate space.
    fn norm_weights(&self) -> Option<Vec<BigRational>> {
        None
    }

    /// Inverse of [`Self::coordinates`] on points the family contains.
    fn from_coordinates(&self, _v: &[BigRational]) -> Option<Self::Elem> {
        None
    }
}

/// The common value `d(a, ab) = d(b, b^2) = d(a, ba)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Displacement(pub Scalar);

impl Displacement {
    pub fn value(&self) -> &Scalar {
        &self.0
    }
}

/// `d(a, a∘b)`, which does not depend on the base point `a`.
pub fn displacement<S: MetricSemigroup>(s: &S, a: &S::Elem, b: &S::Elem) -> Result<Displacement> {
    let ab = s.compose(a, b)?;
    s.distance(a, &ab).map(Displacement)
}

/// Returns the unique idempotent among `candidates`, checking that it acts as
/// a two-sided identity on all of them.
pub fn find_idempotent<S: MetricSemigroup>(s: &S, candidates: &[S::Elem]) -> Result<Option<S::Elem>> {
    let mut found: Option<S::Elem> = None;
    for c in candidates {
        let cc = s.compose(c, c)?;
        if !s.same_element(&cc, c) {
            continue;
        }
        match &found {
            Some(prev) if !s.same_element(prev, c) => {
                return Err(Error::TwoIdempotents(s.describe(prev), s.describe(c)));
            }
            Some(_) => {}
            None => found = Some(c.clone()),
        }
    }
    if let Some(e) = &found {
        for c in candidates {
            let left = s.compose(e, c)?;
            let right = s.compose(c, e)?;
            if !s.same_element(&left, c) || !s.same_element(&right, c) {
                return Err(Error::BrokenInstance(format!(
                    "idempotent {} does not fix {}",
                    s.describe(e),
                    s.describe(c)
                )));
            }
        }
    }
    Ok(found)
}

/// An element of `G' = G ⊔ {1'}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WithUnit<E> {
    Unit,
    Of(E),
}

/// The metric monoid obtained by adjoining an identity `1'` with
/// `d(1', b) = d(b, b^2)`. If the inner semigroup already has an identity the
/// wrapper is a pass-through and `Unit` is identified with it.
#[derive(Clone, Debug)]
pub struct Adjoined<S: MetricSemigroup> {
    inner: S,
    native: Option<S::Elem>,
}

pub fn adjoin_identity<S: MetricSemigroup>(inner: S) -> Adjoined<S> {
    let native = inner.identity();
    Adjoined { inner, native }
}

impl<S: MetricSemigroup> Adjoined<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }

    /// True when the inner semigroup already had an identity.
    pub fn is_pass_through(&self) -> bool {
        self.native.is_some()
    }

    pub fn embed(&self, e: S::Elem) -> WithUnit<S::Elem> {
        WithUnit::Of(e)
    }

    fn normalize<'a>(&'a self, e: &'a WithUnit<S::Elem>) -> Option<&'a S::Elem> {
        match e {
            WithUnit::Of(x) => Some(x),
            WithUnit::Unit => self.native.as_ref(),
        }
    }
}

impl<S: MetricSemigroup> MetricSemigroup for Adjoined<S> {
    type Elem = WithUnit<S::Elem>;

    fn compose(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        match (self.normalize(a), self.normalize(b)) {
            (None, _) => Ok(b.clone()),
            (_, None) => Ok(a.clone()),
            (Some(x), Some(y)) => self.inner.compose(x, y).map(WithUnit::Of),
        }
    }

    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Scalar> {
        match (self.normalize(a), self.normalize(b)) {
            (None, None) => Ok(Scalar::zero()),
            (None, Some(y)) | (Some(y), None) => {
                let yy = self.inner.compose(y, y)?;
                self.inner.distance(y, &yy)
            }
            (Some(x), Some(y)) => self.inner.distance(x, y),
        }
    }

    fn identity(&self) -> Option<Self::Elem> {
        Some(match &self.native {
            Some(e) => WithUnit::Of(e.clone()),
            None => WithUnit::Unit,
        })
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_identity: true, ..self.inner.capabilities() }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elem {
        if self.native.is_none() && rng.next_u32().is_multiple_of(8) {
            WithUnit::Unit
        } else {
            WithUnit::Of(self.inner.sample(rng))
        }
    }

    fn inverse(&self, a: &Self::Elem) -> Option<Self::Elem> {
        match self.normalize(a) {
            None => Some(WithUnit::Unit),
            Some(x) => self.inner.inverse(x).map(WithUnit::Of),
        }
    }

    fn same_element(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        match (self.normalize(a), self.normalize(b)) {
            (None, None) => true,
            (Some(x), Some(y)) => self.inner.same_element(x, y),
            _ => false,
        }
    }

    fn tolerance(&self) -> f64 {
        self.inner.tolerance()
    }

    fn describe(&self, e: &Self::Elem) -> String {
        match self.normalize(e) {
            None => "1'".to_string(),
            Some(x) => self.inner.describe(x),
        }
    }

    fn cancel_common(&self, p: &Self::Elem, q: &Self::Elem) -> Option<(Self::Elem, Self::Elem)> {
        let dims = self.inner.norm_weights()?.len();
        let cp = self.coordinates(p)?;
        let cq = self.coordinates(q)?;
        debug_assert_eq!(cp.len(), dims);
        let diff: Vec<BigRational> = cp.iter().zip(&cq).map(|(a, b)| a - b).collect();
        let zero = BigRational::from_integer(0.into());
        let pos: Vec<BigRational> = diff.iter().map(|d| if d > &zero { d.clone() } else { zero.clone() }).collect();
        let neg: Vec<BigRational> = diff.iter().map(|d| if d < &zero { -d.clone() } else { zero.clone() }).collect();
        let lift = |v: &[BigRational]| -> Option<Self::Elem> {
            if v.iter().all(|x| x == &zero) {
                return self.identity();
            }
            self.inner.from_coordinates(v).map(WithUnit::Of)
        };
        Some((lift(&pos)?, lift(&neg)?))
    }

    fn divide_exact(&self, e: &Self::Elem, k: u64) -> Option<Self::Elem> {
        match self.normalize(e) {
            None => Some(WithUnit::Unit),
            Some(x) => self.inner.divide_exact(x, k).map(WithUnit::Of),
        }
    }

    fn coordinates(&self, e: &Self::Elem) -> Option<Vec<BigRational>> {
        match self.normalize(e) {
            None => {
                let n = self.inner.norm_weights()?.len();
                Some(vec![BigRational::from_integer(0.into()); n])
            }
            Some(x) => self.inner.coordinates(x),
        }
    }

    fn norm_weights(&self) -> Option<Vec<BigRational>> {
        self.inner.norm_weights()
    }

    fn from_coordinates(&self, v: &[BigRational]) -> Option<Self::Elem> {
        if v.iter().all(|x| x == &BigRational::from_integer(0.into())) {
            return self.identity();
        }
        self.inner.from_coordinates(v).map(WithUnit::Of)
    }
}

/// One failed axiom check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub elements: Vec<String>,
    pub lhs: Option<Scalar>,
    pub rhs: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub sample_size: usize,
    pub seed: u64,
    pub checks: BTreeMap<String, u64>,
    pub skipped: Vec<String>,
    pub counterexample: Option<AxiomViolation>,
    pub passed: bool,
}

/// Seeded audit of the semigroup and metric axioms on random tuples: the
/// first violation found is reported, never raised.
pub fn audit_axioms<S: MetricSemigroup>(s: &S, sample_size: usize, seed: u64) -> AuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caps = s.capabilities();
    let tol = s.tolerance();
    let mut checks: BTreeMap<String, u64> = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut counterexample = None;
    let mut metric_available = true;

    let le = |x: &Scalar, y: &Scalar| -> bool {
        match (x, y) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a <= b,
            _ => x.to_f64() <= y.to_f64() + tol,
        }
    };
    let eq = |x: &Scalar, y: &Scalar| -> bool { x.approx_eq(y, tol) };

    'outer: for _ in 0..sample_size.max(1) {
        let a = s.sample(&mut rng);
        let b = s.sample(&mut rng);
        let c = s.sample(&mut rng);
        let e = s.sample(&mut rng);
        let names = |xs: &[&S::Elem]| xs.iter().map(|x| s.describe(x)).collect::<Vec<_>>();
        macro_rules! fail {
            ($axiom:expr, $els:expr, $lhs:expr, $rhs:expr) => {{
                counterexample = Some(AxiomViolation {
                    axiom: $axiom.to_string(),
                    elements: names($els),
                    lhs: $lhs,
                    rhs: $rhs,
                });
                break 'outer;
            }};
        }
        macro_rules! tick {
            ($axiom:expr) => {
                *checks.entry($axiom.to_string()).or_insert(0) += 1;
            };
        }

        let (Ok(ab), Ok(bc)) = (s.compose(&a, &b), s.compose(&b, &c)) else {
            fail!("closure", &[&a, &b, &c], None, None);
        };
        let (Ok(ab_c), Ok(a_bc)) = (s.compose(&ab, &c), s.compose(&a, &bc)) else {
            fail!("closure", &[&a, &b, &c], None, None);
        };
        tick!("associativity");
        if !s.same_element(&ab_c, &a_bc) {
            fail!("associativity", &[&a, &b, &c], None, None);
        }
        if caps.is_abelian {
            tick!("commutativity");
            let ba = s.compose(&b, &a).expect("closure checked");
            if !s.same_element(&ab, &ba) {
                fail!("commutativity", &[&a, &b], None, None);
            }
        }

        if !metric_available {
            continue;
        }
        let dab = match s.distance(&a, &b) {
            Ok(d) => d,
            Err(err) => {
                metric_available = false;
                skipped.push(format!("metric axioms: {err}"));
                continue;
            }
        };
        let d = |x: &S::Elem, y: &S::Elem| s.distance(x, y).expect("distance available");
        let dba = d(&b, &a);
        let daa = d(&a, &a);
        let dbc = d(&b, &c);
        let dac = d(&a, &c);

        tick!("nonnegativity");
        if dab.to_f64() < 0.0 {
            fail!("nonnegativity", &[&a, &b], Some(dab), None);
        }
        tick!("symmetry");
        if !eq(&dab, &dba) {
            fail!("symmetry", &[&a, &b], Some(dab), Some(dba));
        }
        tick!("identity-of-indiscernibles");
        if !eq(&daa, &Scalar::zero()) {
            fail!("identity-of-indiscernibles", &[&a], Some(daa), Some(Scalar::zero()));
        }
        if eq(&dab, &Scalar::zero()) != s.same_element(&a, &b) {
            fail!("identity-of-indiscernibles", &[&a, &b], Some(dab), Some(Scalar::zero()));
        }
        tick!("triangle");
        let via = dab.add(&dbc);
        if !le(&dac, &via) {
            fail!("triangle", &[&a, &b, &c], Some(dac), Some(via));
        }

        let ac = s.compose(&a, &c).expect("closure");
        let bc2 = s.compose(&b, &c).expect("closure");
        let ca = s.compose(&c, &a).expect("closure");
        let cb = s.compose(&c, &b).expect("closure");
        tick!("translation-invariance");
        let right = d(&ac, &bc2);
        if !eq(&right, &dab) {
            fail!("translation-invariance", &[&a, &b, &c], Some(right), Some(dab));
        }
        let left = d(&ca, &cb);
        if !eq(&left, &dab) {
            fail!("translation-invariance", &[&c, &a, &b], Some(left), Some(dab));
        }

        // d(y1 y2, z1 z2) <= d(y1, z1) + d(y2, z2)
        tick!("composite-triangle");
        let y = s.compose(&a, &b).expect("closure");
        let z = s.compose(&c, &e).expect("closure");
        let lhs = d(&y, &z);
        let rhs = d(&a, &c).add(&d(&b, &e));
        if !le(&lhs, &rhs) {
            fail!("composite-triangle", &[&a, &b, &c, &e], Some(lhs), Some(rhs));
        }
    }

    AuditReport {
        sample_size,
        seed,
        checks,
        skipped,
        passed: counterexample.is_none(),
        counterexample,
    }
}
