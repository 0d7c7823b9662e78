//! The envelope chain `G → G′ → G_Z → G_Q → B(G)` for normed abelian metric
//! semigroups.
//!
//! * `G′` adjoins an identity ([`crate::algebra::adjoin_identity`]).
//! * `G_Z` is the group of formal differences `p − q` with
//!   `d(p − q, r − s) = d(p + s, q + r)`.
//! * `G_Q` holds `x / n` with `x ∈ G_Z`; `d(g, h) = d(n_h x_g, n_g x_h) / (n_g n_h)`
//!   where `n_g` is the least denominator.
//! * `B(G)` is identified with coordinate space under the weighted L1 norm,
//!   which is available for the families with a linear model.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::algebra::{adjoin_identity, Adjoined, Capabilities, MetricSemigroup, WithUnit};
use crate::error::{Error, Result};
use crate::instances::{Element, GroupInstance, GroupKind};
use crate::normedness::check_torsion_free;
use crate::scalar::{format_rational, rational_from_json, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CancellativityReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: u64,
    /// `(a, b, c)` with `a ≠ b` but `a c = b c` (or `c a = c b`).
    pub counterexample: Option<Vec<String>>,
    pub passed: bool,
}

/// Checks `a c = b c ⇒ a = b` (and the left-handed version) on seeded
/// triples. Each triple is also tried with `b` replaced by `a c`'s partner
/// drawn from the same sample, so collapsing elements are hit quickly.
pub fn check_cancellative<S: MetricSemigroup>(s: &S, samples: usize, seed: u64) -> CancellativityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = 0;
    let mut counterexample = None;
    let pool: Vec<S::Elem> = (0..samples.max(1)).map(|_| s.sample(&mut rng)).collect();
    'outer: for i in 0..pool.len() {
        let a = &pool[i];
        let b = &pool[rng.gen_range(0..pool.len())];
        let c = &pool[rng.gen_range(0..pool.len())];
        for (x, y) in [(a, b), (b, a)] {
            checks += 1;
            let (Ok(xc), Ok(yc), Ok(cx), Ok(cy)) = (s.compose(x, c), s.compose(y, c), s.compose(c, x), s.compose(c, y))
            else {
                continue;
            };
            let collapses = s.same_element(&xc, &yc) || s.same_element(&cx, &cy);
            if collapses && !s.same_element(x, y) {
                counterexample = Some(vec![s.describe(x), s.describe(y), s.describe(c)]);
                break 'outer;
            }
        }
    }
    CancellativityReport { samples, seed, checks, passed: counterexample.is_none(), counterexample }
}

/// The formal difference `p − q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Difference<E> {
    pub p: E,
    pub q: E,
}

impl<E> Difference<E> {
    /// A representative pair, not canonicalized.
    pub fn raw(p: E, q: E) -> Self {
        Difference { p, q }
    }
}

/// The Grothendieck group of a cancellative commutative metric monoid.
#[derive(Clone, Debug)]
pub struct GrothendieckGroup<M: MetricSemigroup> {
    monoid: M,
    gate: CancellativityReport,
}

impl<M: MetricSemigroup> GrothendieckGroup<M> {
    /// Runs the cancellativity gate on `samples` seeded triples. A failing
    /// gate is recorded; [`Self::lift`] then refuses to build differences.
    pub fn new(monoid: M, samples: usize, seed: u64) -> Result<Self> {
        if monoid.identity().is_none() {
            return Err(Error::InvalidParameter("the Grothendieck construction needs a monoid; adjoin an identity".into()));
        }
        if !monoid.capabilities().is_abelian {
            return Err(Error::InvalidParameter("the Grothendieck construction needs a commutative monoid".into()));
        }
        let gate = check_cancellative(&monoid, samples, seed);
        Ok(GrothendieckGroup { monoid, gate })
    }

    pub fn monoid(&self) -> &M {
        &self.monoid
    }

    pub fn gate(&self) -> &CancellativityReport {
        &self.gate
    }

    fn unit(&self) -> M::Elem {
        self.monoid.identity().expect("checked in new")
    }

    /// Subtracts the common part when the monoid can, else keeps the pair.
    pub fn canonical(&self, p: M::Elem, q: M::Elem) -> Difference<M::Elem> {
        match self.monoid.cancel_common(&p, &q) {
            Some((p, q)) => Difference { p, q },
            None => Difference { p, q },
        }
    }

    pub fn lift(&self, p: &M::Elem, q: &M::Elem) -> Result<Difference<M::Elem>> {
        if !self.gate.passed {
            let ce = self.gate.counterexample.clone().unwrap_or_default().join(", ");
            return Err(Error::GateNotPassed(format!("monoid is not cancellative: {ce}")));
        }
        Ok(self.canonical(p.clone(), q.clone()))
    }

    /// Embeds a monoid element as `p − 1`.
    pub fn embed(&self, p: &M::Elem) -> Result<Difference<M::Elem>> {
        self.lift(p, &self.unit())
    }

    /// `(p − q) = (r − s)` iff `p + s = q + r`.
    pub fn equal(&self, x: &Difference<M::Elem>, y: &Difference<M::Elem>) -> Result<bool> {
        let ps = self.monoid.compose(&x.p, &y.q)?;
        let qr = self.monoid.compose(&x.q, &y.p)?;
        Ok(self.monoid.same_element(&ps, &qr))
    }

    /// `d(p − q, r − s) = d(p + s, q + r)`.
    pub fn difference_distance(&self, x: &Difference<M::Elem>, y: &Difference<M::Elem>) -> Result<Scalar> {
        let ps = self.monoid.compose(&x.p, &y.q)?;
        let qr = self.monoid.compose(&x.q, &y.p)?;
        self.monoid.distance(&ps, &qr)
    }
}

impl<M: MetricSemigroup> MetricSemigroup for GrothendieckGroup<M> {
    type Elem = Difference<M::Elem>;

    fn compose(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok(self.canonical(self.monoid.compose(&a.p, &b.p)?, self.monoid.compose(&a.q, &b.q)?))
    }

    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Scalar> {
        self.difference_distance(a, b)
    }

    fn identity(&self) -> Option<Self::Elem> {
        Some(Difference { p: self.unit(), q: self.unit() })
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_identity: true, has_inverses: true, ..self.monoid.capabilities() }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elem {
        let p = self.monoid.sample(rng);
        let q = self.monoid.sample(rng);
        self.canonical(p, q)
    }

    fn inverse(&self, a: &Self::Elem) -> Option<Self::Elem> {
        Some(Difference { p: a.q.clone(), q: a.p.clone() })
    }

    fn same_element(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.equal(a, b).unwrap_or(false)
    }

    fn tolerance(&self) -> f64 {
        self.monoid.tolerance()
    }

    fn describe(&self, e: &Self::Elem) -> String {
        format!("{} - {}", self.monoid.describe(&e.p), self.monoid.describe(&e.q))
    }

    fn divide_exact(&self, e: &Self::Elem, k: u64) -> Option<Self::Elem> {
        let c = self.canonical(e.p.clone(), e.q.clone());
        Some(Difference { p: self.monoid.divide_exact(&c.p, k)?, q: self.monoid.divide_exact(&c.q, k)? })
    }

    fn coordinates(&self, e: &Self::Elem) -> Option<Vec<BigRational>> {
        let cp = self.monoid.coordinates(&e.p)?;
        let cq = self.monoid.coordinates(&e.q)?;
        Some(cp.iter().zip(&cq).map(|(a, b)| a - b).collect())
    }

    fn norm_weights(&self) -> Option<Vec<BigRational>> {
        self.monoid.norm_weights()
    }

    fn from_coordinates(&self, v: &[BigRational]) -> Option<Self::Elem> {
        let zero = BigRational::zero();
        let pos: Vec<BigRational> = v.iter().map(|x| if x > &zero { x.clone() } else { zero.clone() }).collect();
        let neg: Vec<BigRational> = v.iter().map(|x| if x < &zero { -x.clone() } else { zero.clone() }).collect();
        Some(Difference { p: self.monoid.from_coordinates(&pos)?, q: self.monoid.from_coordinates(&neg)? })
    }
}

/// `num / den` in `G_Q`, with `den` the least denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational<E> {
    pub num: E,
    pub den: u64,
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        while n.is_multiple_of(f) {
            out.push(f);
            n /= f;
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `Q ⊗ G_Z` for a torsion-free abelian metric group `G_Z`.
#[derive(Clone, Debug)]
pub struct RationalHull<G: MetricSemigroup> {
    group: G,
}

impl<G: MetricSemigroup> RationalHull<G> {
    pub fn new(group: G) -> Result<Self> {
        let caps = group.capabilities();
        if !caps.has_identity || !caps.has_inverses || !caps.is_abelian {
            return Err(Error::InvalidParameter("rationalization needs an abelian group".into()));
        }
        Ok(RationalHull { group })
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    /// Cancels every prime of `den` that divides `num`, leaving the least
    /// denominator.
    pub fn reduce(&self, num: G::Elem, den: u64) -> Rational<G::Elem> {
        let mut num = num;
        let mut den = den;
        for f in prime_factors(den) {
            match self.group.divide_exact(&num, f) {
                Some(q) => {
                    num = q;
                    den /= f;
                }
                None => continue,
            }
        }
        Rational { num, den }
    }

    /// `x / k`.
    pub fn rationalize(&self, x: &G::Elem, k: u64) -> Result<Rational<G::Elem>> {
        if k == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.reduce(x.clone(), k))
    }

    fn times(&self, x: &G::Elem, k: u64) -> Result<G::Elem> {
        self.group.power(x, i64::try_from(k).map_err(|_| Error::PowerOverflow)?)
    }

    /// `r · g` for a rational `r`.
    pub fn scale(&self, g: &Rational<G::Elem>, r: &BigRational) -> Result<Rational<G::Elem>> {
        let a = r.numer().to_i64().ok_or(Error::PowerOverflow)?;
        let b = r.denom().to_u64().ok_or(Error::PowerOverflow)?;
        let num = self.group.power(&g.num, a)?;
        let den = g.den.checked_mul(b).ok_or(Error::PowerOverflow)?;
        Ok(self.reduce(num, den))
    }

    /// `d(g, h) = d(n_h x_g, n_g x_h) / (n_g n_h)`.
    pub fn rational_distance(&self, g: &Rational<G::Elem>, h: &Rational<G::Elem>) -> Result<Scalar> {
        let a = self.times(&g.num, h.den)?;
        let b = self.times(&h.num, g.den)?;
        let d = self.group.distance(&a, &b)?;
        Ok(d.scale(&BigRational::new(BigInt::one(), BigInt::from(g.den) * BigInt::from(h.den))))
    }
}

impl<G: MetricSemigroup> MetricSemigroup for RationalHull<G> {
    type Elem = Rational<G::Elem>;

    fn compose(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        let l = a.den.lcm(&b.den);
        let x = self.times(&a.num, l / a.den)?;
        let y = self.times(&b.num, l / b.den)?;
        Ok(self.reduce(self.group.compose(&x, &y)?, l))
    }

    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Scalar> {
        self.rational_distance(a, b)
    }

    fn identity(&self) -> Option<Self::Elem> {
        Some(Rational { num: self.group.identity()?, den: 1 })
    }

    fn capabilities(&self) -> Capabilities {
        self.group.capabilities()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elem {
        let x = self.group.sample(rng);
        let k = rng.gen_range(1..=6u64);
        self.reduce(x, k)
    }

    fn inverse(&self, a: &Self::Elem) -> Option<Self::Elem> {
        Some(Rational { num: self.group.inverse(&a.num)?, den: a.den })
    }

    fn same_element(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        match (self.times(&a.num, b.den), self.times(&b.num, a.den)) {
            (Ok(x), Ok(y)) => self.group.same_element(&x, &y),
            _ => false,
        }
    }

    fn tolerance(&self) -> f64 {
        self.group.tolerance()
    }

    fn describe(&self, e: &Self::Elem) -> String {
        if e.den == 1 {
            self.group.describe(&e.num)
        } else {
            format!("({}) / {}", self.group.describe(&e.num), e.den)
        }
    }

    fn coordinates(&self, e: &Self::Elem) -> Option<Vec<BigRational>> {
        let d = BigRational::from_integer(BigInt::from(e.den));
        Some(self.group.coordinates(&e.num)?.into_iter().map(|x| x / &d).collect())
    }

    fn norm_weights(&self) -> Option<Vec<BigRational>> {
        self.group.norm_weights()
    }

    fn from_coordinates(&self, v: &[BigRational]) -> Option<Self::Elem> {
        let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let lr = BigRational::from_integer(l.clone());
        let scaled: Vec<BigRational> = v.iter().map(|x| x * &lr).collect();
        let num = self.group.from_coordinates(&scaled)?;
        Some(self.reduce(num, l.to_u64()?))
    }
}

/// Weighted L1 norm of a coordinate vector.
pub fn weighted_norm(weights: &[BigRational], v: &[BigRational]) -> BigRational {
    weights.iter().zip(v).map(|(w, x)| w * x.abs()).fold(BigRational::zero(), |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Semigroup,
    Monoid,
    Difference,
    Rational,
    Banach,
}

pub type MonoidOf = Adjoined<GroupInstance>;
pub type DifferenceGroup = GrothendieckGroup<MonoidOf>;
pub type QHull = RationalHull<DifferenceGroup>;
pub type DiffElem = Difference<WithUnit<Element>>;

/// A value at one stage of the chain over a concrete instance.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvelopeElement {
    Semigroup(Element),
    Monoid(WithUnit<Element>),
    Difference(DiffElem),
    Rational(Rational<DiffElem>),
    Banach(Vec<BigRational>),
}

impl EnvelopeElement {
    pub fn stage(&self) -> Stage {
        match self {
            EnvelopeElement::Semigroup(_) => Stage::Semigroup,
            EnvelopeElement::Monoid(_) => Stage::Monoid,
            EnvelopeElement::Difference(_) => Stage::Difference,
            EnvelopeElement::Rational(_) => Stage::Rational,
            EnvelopeElement::Banach(_) => Stage::Banach,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BanachVector {
    #[serde(with = "crate::scalar::serde_rational_vec")]
    pub coords: Vec<BigRational>,
    #[serde(with = "crate::scalar::serde_rational")]
    pub norm: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageImage {
    pub stage: Stage,
    pub value: String,
    /// Distance to the identity of the stage (for the semigroup stage, to
    /// the adjoined identity).
    pub norm: Scalar,
}

/// A finitely supported law on an instance with exact probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    support: Vec<(Element, BigRational)>,
}

impl FiniteDistribution {
    pub fn new(instance: &GroupInstance, support: Vec<(Element, BigRational)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = BigRational::zero();
        for (i, (e, p)) in support.iter().enumerate() {
            instance.validate(e).map_err(|err| Error::InvalidDistribution(err.to_string()))?;
            if !p.is_positive() {
                return Err(Error::InvalidDistribution(format!("probability {} is not positive", format_rational(p))));
            }
            if support[..i].iter().any(|(f, _)| f == e) {
                return Err(Error::InvalidDistribution(format!("element {e} listed twice")));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {}", format_rational(&total))));
        }
        Ok(FiniteDistribution { support })
    }

    /// Point mass at `e`.
    pub fn point(instance: &GroupInstance, e: Element) -> Result<Self> {
        Self::new(instance, vec![(e, BigRational::one())])
    }

    /// Uniform law on distinct elements.
    pub fn uniform(instance: &GroupInstance, elements: Vec<Element>) -> Result<Self> {
        let n = elements.len() as i64;
        if n == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let p = BigRational::new(1.into(), n.into());
        Self::new(instance, elements.into_iter().map(|e| (e, p.clone())).collect())
    }

    /// Accepts `{"support": [{"element": e, "probability": "p/q"}, …]}` or a
    /// bare list of `[e, "p/q"]` pairs.
    pub fn from_json(instance: &GroupInstance, v: &Value) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidDistribution(msg.to_string());
        let items = match v {
            Value::Object(o) => o.get("support").and_then(Value::as_array).ok_or_else(|| bad("missing `support` array"))?,
            Value::Array(a) => a,
            _ => return Err(bad("expected an object or an array")),
        };
        let mut support = Vec::with_capacity(items.len());
        for item in items {
            let (e, p) = match item {
                Value::Object(o) => (
                    o.get("element").ok_or_else(|| bad("missing `element`"))?,
                    o.get("probability").or_else(|| o.get("p")).ok_or_else(|| bad("missing `probability`"))?,
                ),
                Value::Array(pair) if pair.len() == 2 => (&pair[0], &pair[1]),
                _ => return Err(bad("support entries are objects or [element, probability] pairs")),
            };
            support.push((instance.element_from_json(e)?, rational_from_json(p)?));
        }
        Self::new(instance, support)
    }

    pub fn support(&self) -> &[(Element, BigRational)] {
        &self.support
    }

    /// `λ · self + (1 − λ) · other`, merging shared atoms.
    pub fn mixture(&self, other: &FiniteDistribution, lambda: &BigRational) -> Result<FiniteDistribution> {
        if lambda.is_negative() || lambda > &BigRational::one() {
            return Err(Error::InvalidDistribution("mixture weight must lie in [0, 1]".into()));
        }
        let mu = BigRational::one() - lambda;
        let mut out: Vec<(Element, BigRational)> = Vec::new();
        let parts = self.support.iter().map(|(e, p)| (e, p * lambda)).chain(other.support.iter().map(|(e, p)| (e, p * &mu)));
        for (e, p) in parts {
            if p.is_zero() {
                continue;
            }
            match out.iter_mut().find(|(f, _)| f == e) {
                Some((_, q)) => *q += p,
                None => out.push((e.clone(), p)),
            }
        }
        Ok(FiniteDistribution { support: out })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: BTreeMap<String, u64>,
    pub mismatches: Vec<String>,
    pub passed: bool,
}

/// The chain over one concrete instance with a linear model.
#[derive(Clone, Debug)]
pub struct Envelope {
    hull: QHull,
}

const GATE_SAMPLES: usize = 256;
const GATE_SEED: u64 = 0x5eed;

impl Envelope {
    /// Builds the chain, refusing instances with torsion, without a linear
    /// model, or failing the cancellativity gate.
    pub fn new(instance: GroupInstance) -> Result<Self> {
        if matches!(instance.kind(), GroupKind::FreeGroup { .. }) {
            return Err(Error::NotNormed("free groups are not abelian".into()));
        }
        let monoid = adjoin_identity(instance.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(GATE_SEED);
        let probe: Vec<_> = (0..64).map(|_| monoid.sample(&mut rng)).collect();
        let torsion = check_torsion_free(&monoid, &probe, 64)?;
        if let Some(w) = torsion.witnesses.first() {
            return Err(Error::NotNormed(format!("torsion element {} of order {}", w.element, w.order)));
        }
        if !instance.has_linear_model() {
            return Err(Error::NotNormed(format!("{} has no linear model", instance.kind().name())));
        }
        let group = GrothendieckGroup::new(monoid, GATE_SAMPLES, GATE_SEED)?;
        if !group.gate().passed {
            return Err(Error::GateNotPassed("monoid is not cancellative".into()));
        }
        Ok(Envelope { hull: RationalHull::new(group)? })
    }

    pub fn instance(&self) -> &GroupInstance {
        self.monoid().inner()
    }

    pub fn monoid(&self) -> &MonoidOf {
        self.group().monoid()
    }

    pub fn group(&self) -> &DifferenceGroup {
        self.hull.group()
    }

    pub fn hull(&self) -> &QHull {
        &self.hull
    }

    pub fn weights(&self) -> &[BigRational] {
        self.instance().weights()
    }

    pub fn lift(&self, p: &WithUnit<Element>, q: &WithUnit<Element>) -> Result<DiffElem> {
        self.group().lift(p, q)
    }

    pub fn rationalize(&self, x: &DiffElem, k: u64) -> Result<Rational<DiffElem>> {
        self.hull.rationalize(x, k)
    }

    /// Moves `x` one stage forward along the chain.
    pub fn advance(&self, x: &EnvelopeElement) -> Result<EnvelopeElement> {
        Ok(match x {
            EnvelopeElement::Semigroup(e) => {
                self.instance().validate(e)?;
                EnvelopeElement::Monoid(WithUnit::Of(e.clone()))
            }
            EnvelopeElement::Monoid(m) => EnvelopeElement::Difference(self.group().embed(m)?),
            EnvelopeElement::Difference(d) => EnvelopeElement::Rational(self.rationalize(d, 1)?),
            EnvelopeElement::Rational(r) => EnvelopeElement::Banach(
                self.hull.coordinates(r).ok_or_else(|| Error::NotNormed("no coordinates".into()))?,
            ),
            EnvelopeElement::Banach(v) => EnvelopeElement::Banach(v.clone()),
        })
    }

    pub fn promote(&self, x: &EnvelopeElement, to: Stage) -> Result<EnvelopeElement> {
        if to < x.stage() {
            return Err(Error::InvalidParameter(format!("cannot move from {:?} back to {:?}", x.stage(), to)));
        }
        let mut cur = x.clone();
        while cur.stage() < to {
            cur = self.advance(&cur)?;
        }
        Ok(cur)
    }

    pub fn embed_to_banach(&self, x: &EnvelopeElement) -> Result<BanachVector> {
        match self.promote(x, Stage::Banach)? {
            EnvelopeElement::Banach(coords) => {
                let norm = weighted_norm(self.weights(), &coords);
                Ok(BanachVector { coords, norm })
            }
            _ => unreachable!("promote reaches the requested stage"),
        }
    }

    /// Distance after promoting both values to the later of their stages.
    pub fn distance(&self, x: &EnvelopeElement, y: &EnvelopeElement) -> Result<Scalar> {
        let stage = x.stage().max(y.stage()).max(Stage::Monoid);
        let (a, b) = (self.promote(x, stage)?, self.promote(y, stage)?);
        match (a, b) {
            (EnvelopeElement::Monoid(a), EnvelopeElement::Monoid(b)) => self.monoid().distance(&a, &b),
            (EnvelopeElement::Difference(a), EnvelopeElement::Difference(b)) => self.group().distance(&a, &b),
            (EnvelopeElement::Rational(a), EnvelopeElement::Rational(b)) => self.hull.distance(&a, &b),
            (EnvelopeElement::Banach(a), EnvelopeElement::Banach(b)) => {
                let diff: Vec<BigRational> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                Ok(Scalar::Exact(weighted_norm(self.weights(), &diff)))
            }
            _ => unreachable!("both promoted to the same stage"),
        }
    }

    /// Image and norm of `e` at every stage.
    pub fn trace(&self, e: &Element) -> Result<Vec<StageImage>> {
        let zero_at = |stage: Stage| -> Result<EnvelopeElement> {
            let unit = self.monoid().identity().expect("monoid");
            self.promote(&EnvelopeElement::Monoid(unit), stage)
        };
        let mut out = Vec::new();
        let mut cur = EnvelopeElement::Semigroup(e.clone());
        loop {
            let stage = cur.stage();
            let norm = self.distance(&zero_at(stage.max(Stage::Monoid))?, &cur)?;
            let value = match &cur {
                EnvelopeElement::Semigroup(x) => x.to_string(),
                EnvelopeElement::Monoid(m) => self.monoid().describe(m),
                EnvelopeElement::Difference(d) => self.group().describe(d),
                EnvelopeElement::Rational(r) => self.hull.describe(r),
                EnvelopeElement::Banach(v) => {
                    format!("({})", v.iter().map(format_rational).collect::<Vec<_>>().join(", "))
                }
            };
            out.push(StageImage { stage, value, norm });
            if stage == Stage::Banach {
                return Ok(out);
            }
            cur = self.advance(&cur)?;
        }
    }

    /// `Σ p_i · embed(x_i)` in exact arithmetic.
    pub fn expectation(&self, dist: &FiniteDistribution) -> Result<BanachVector> {
        let dim = self.weights().len();
        let parts: Vec<Result<Vec<BigRational>>> = dist
            .support()
            .par_iter()
            .map(|(e, p)| {
                let c = self
                    .instance()
                    .coordinates(e)
                    .ok_or_else(|| Error::NotNormed("no coordinates".into()))?;
                Ok(c.into_iter().map(|x| x * p).collect())
            })
            .collect();
        let mut coords = vec![BigRational::zero(); dim];
        for part in parts {
            for (acc, x) in coords.iter_mut().zip(part?) {
                *acc += x;
            }
        }
        let norm = weighted_norm(self.weights(), &coords);
        Ok(BanachVector { coords, norm })
    }

    /// Seeded check that distances agree across every arrow of the chain,
    /// and that `G_Q` built through `G_Z` matches the direct rational
    /// coordinate model, including the round trip back from coordinates.
    pub fn roundtrip(&self, samples: usize, seed: u64) -> Result<RoundtripReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checks: BTreeMap<String, u64> = BTreeMap::new();
        let mut mismatches = Vec::new();
        let weights = self.weights().to_vec();
        let mut record = |name: &str, ok: bool, detail: String| {
            *checks.entry(name.to_string()).or_insert(0) += 1;
            if !ok {
                mismatches.push(format!("{name}: {detail}"));
            }
        };
        for _ in 0..samples {
            let g = self.monoid().sample(&mut rng);
            let h = self.monoid().sample(&mut rng);
            let d_monoid = self.monoid().distance(&g, &h)?;
            if let (WithUnit::Of(x), WithUnit::Of(y)) = (&g, &h) {
                let d = self.instance().distance(x, y)?;
                record("semigroup-to-monoid", d == d_monoid, format!("{x} {y}"));
            }
            let (dg, dh) = (self.group().embed(&g)?, self.group().embed(&h)?);
            let d_diff = self.group().distance(&dg, &dh)?;
            record("monoid-to-difference", d_diff == d_monoid, self.monoid().describe(&g));
            let (qg, qh) = (self.rationalize(&dg, 1)?, self.rationalize(&dh, 1)?);
            let d_rat = self.hull.distance(&qg, &qh)?;
            record("difference-to-rational", d_rat == d_diff, self.group().describe(&dg));
            let (bg, bh) = (self.hull.coordinates(&qg).unwrap(), self.hull.coordinates(&qh).unwrap());
            let diff: Vec<BigRational> = bg.iter().zip(&bh).map(|(a, b)| a - b).collect();
            let d_banach = Scalar::Exact(weighted_norm(&weights, &diff));
            record("rational-to-banach", d_banach == d_rat, self.hull.describe(&qg));

            // composite G_Q(G_Z(G')) against the direct rational model Q^d
            let (k1, k2) = (rng.gen_range(1..=6u64), rng.gen_range(1..=6u64));
            let (rg, rh) = (self.rationalize(&dg, k1)?, self.rationalize(&dh, k2)?);
            let direct = |x: &WithUnit<Element>, k: u64| -> Vec<BigRational> {
                let kk = BigRational::from_integer(BigInt::from(k));
                self.monoid().coordinates(x).unwrap().into_iter().map(|c| c / &kk).collect()
            };
            let (vg, vh) = (direct(&g, k1), direct(&h, k2));
            let diff: Vec<BigRational> = vg.iter().zip(&vh).map(|(a, b)| a - b).collect();
            let d_direct = Scalar::Exact(weighted_norm(&weights, &diff));
            let d_composite = self.hull.distance(&rg, &rh)?;
            record("composite-vs-direct", d_direct == d_composite, format!("{} / {k1}", self.monoid().describe(&g)));
            let back = self.hull.from_coordinates(&vg);
            let ok = back.as_ref().is_some_and(|b| self.hull.same_element(b, &rg));
            record("coordinate-round-trip", ok, self.hull.describe(&rg));
        }
        Ok(RoundtripReport { samples, seed, checks, passed: mismatches.is_empty(), mismatches })
    }
}

/// Seeded envelope round trip on `instance`.
pub fn envelope_roundtrip(instance: &GroupInstance, samples: usize, seed: u64) -> Result<RoundtripReport> {
    Envelope::new(instance.clone())?.roundtrip(samples, seed)
}

/// Expectation of a finite law in the coordinate Banach space.
pub fn expectation(instance: &GroupInstance, dist: &FiniteDistribution) -> Result<BanachVector> {
    Envelope::new(instance.clone())?.expectation(dist)
}
