//! Concrete group families and the JSON group-specification schema.
//!
//! | kind                | carrier               | metric                                 |
//! |---------------------|-----------------------|----------------------------------------|
//! | `free-abelian`      | `Z^d`                 | weighted L1                            |
//! | `positive-naturals` | `{1,2,..}^d` under +  | weighted L1 (no identity)              |
//! | `cyclic`            | `(Z/m)^d`             | weighted sum of wrap distances         |
//! | `torus`             | `(R/Z)^d`             | weighted sum of arc lengths (floats)   |
//! | `graph-space`       | `(Z/2)^E`             | weighted Hamming                       |
//! | `free-group`        | `F_r`                 | bi-invariant word norm (search based)  |

use std::fmt;
use std::hash::{Hash, Hasher};

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{Capabilities, Exactness, MetricSemigroup};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, int, parse_rational, rational_to_f64, Scalar};
use crate::word_norm::{parse_word, ReducedWord};

/// Supported families, in the order printed by `--list-kinds`.
pub const KINDS: &[(&str, &str)] = &[
    ("free-abelian", "Z^d with weighted L1 distance (params: dim, weights)"),
    ("positive-naturals", "(N_{>=1})^d under addition, no identity (params: dim, weights)"),
    ("cyclic", "(Z/m)^d with weighted wrap distance (params: modulus, dim, weights)"),
    ("torus", "(R/Z)^d with weighted arc distance, float metric (params: dim, weights)"),
    ("graph-space", "(Z/2)^E labelled graphs under XOR, weighted Hamming (params: edges, weights)"),
    ("free-group", "free group F_r; distance via bi-invariant word norm (params: rank)"),
];

/// Absolute tolerance used for the float-valued torus metric.
pub const TORUS_TOLERANCE: f64 = 1e-12;

/// Maximum number of edges of a graph-space instance (one bit per edge).
pub const MAX_EDGES: u64 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    FreeAbelian { dim: usize },
    PositiveNaturals { dim: usize },
    Cyclic { modulus: u64, dim: usize },
    Torus { dim: usize },
    GraphSpace { edges: usize },
    FreeGroup { rank: usize },
}

impl GroupKind {
    pub fn name(&self) -> &'static str {
        match self {
            GroupKind::FreeAbelian { .. } => "free-abelian",
            GroupKind::PositiveNaturals { .. } => "positive-naturals",
            GroupKind::Cyclic { .. } => "cyclic",
            GroupKind::Torus { .. } => "torus",
            GroupKind::GraphSpace { .. } => "graph-space",
            GroupKind::FreeGroup { .. } => "free-group",
        }
    }

    fn arity(&self) -> usize {
        match *self {
            GroupKind::FreeAbelian { dim }
            | GroupKind::PositiveNaturals { dim }
            | GroupKind::Cyclic { dim, .. }
            | GroupKind::Torus { dim } => dim,
            GroupKind::GraphSpace { edges } => edges,
            GroupKind::FreeGroup { rank } => rank,
        }
    }
}

/// Element payloads. Canonical forms are enforced at construction: residues
/// lie in `[0, m)`, angles in `[0, 1)`, words are freely reduced.
#[derive(Clone, Debug)]
pub enum Element {
    Ints(Vec<i64>),
    Residues(Vec<u64>),
    Angles(Vec<f64>),
    Bits { mask: u64, len: u32 },
    Word(ReducedWord),
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Element::Ints(a), Element::Ints(b)) => a == b,
            (Element::Residues(a), Element::Residues(b)) => a == b,
            (Element::Angles(a), Element::Angles(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Element::Bits { mask: a, len: la }, Element::Bits { mask: b, len: lb }) => a == b && la == lb,
            (Element::Word(a), Element::Word(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Element {}

impl Hash for Element {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Element::Ints(v) => v.hash(state),
            Element::Residues(v) => v.hash(state),
            Element::Angles(v) => v.iter().for_each(|x| x.to_bits().hash(state)),
            Element::Bits { mask, len } => {
                mask.hash(state);
                len.hash(state);
            }
            Element::Word(w) => w.hash(state),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Ints(v) => write!(f, "({})", join(v)),
            Element::Residues(v) => write!(f, "({})", join(v)),
            Element::Angles(v) => write!(f, "({})", join(v)),
            Element::Bits { mask, len } => f.write_str(&bit_string(*mask, *len)),
            Element::Word(w) => write!(f, "{w}"),
        }
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn bit_string(mask: u64, len: u32) -> String {
    (0..len).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Element::Ints(v) => v.serialize(s),
            Element::Residues(v) => v.serialize(s),
            Element::Angles(v) => v.serialize(s),
            Element::Bits { mask, len } => s.serialize_str(&bit_string(*mask, *len)),
            Element::Word(w) => s.serialize_str(&w.to_string()),
        }
    }
}

/// Parsed form of the group specification schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
}

/// A concrete metric (semi)group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupInstance {
    kind: GroupKind,
    weights: Vec<BigRational>,
    float_weights: Vec<FloatBits>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct FloatBits(u64);

impl FloatBits {
    fn get(self) -> f64 {
        f64::from_bits(self.0)
    }
}

pub fn parse_group_spec(text: &[u8]) -> Result<GroupInstance> {
    let spec: InstanceSpec = serde_json::from_slice(text).map_err(|e| {
        if e.is_data() {
            Error::InvalidParameter(e.to_string())
        } else {
            Error::MalformedJson(e.to_string())
        }
    })?;
    GroupInstance::from_spec(&spec)
}

pub fn group_from_json(v: &Value) -> Result<GroupInstance> {
    let spec: InstanceSpec = serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    GroupInstance::from_spec(&spec)
}

impl GroupInstance {
    pub fn new(kind: GroupKind, weights: Option<Vec<BigRational>>) -> Result<Self> {
        let arity = kind.arity();
        if arity == 0 {
            return Err(Error::InvalidParameter("dimension/edges/rank must be >= 1".into()));
        }
        match kind {
            GroupKind::Cyclic { modulus, .. } if modulus < 2 => {
                return Err(Error::InvalidParameter("modulus must be >= 2".into()));
            }
            GroupKind::GraphSpace { edges } if edges as u64 > MAX_EDGES => {
                return Err(Error::InvalidParameter(format!("at most {MAX_EDGES} edges supported")));
            }
            GroupKind::FreeGroup { rank } if rank > 26 => {
                return Err(Error::InvalidParameter("free-group rank must be <= 26".into()));
            }
            _ => {}
        }
        let weights = match weights {
            None => vec![BigRational::one(); if matches!(kind, GroupKind::FreeGroup { .. }) { 0 } else { arity }],
            Some(w) => {
                if matches!(kind, GroupKind::FreeGroup { .. }) {
                    return Err(Error::InvalidParameter("free-group takes no weights".into()));
                }
                if w.len() != arity {
                    return Err(Error::InvalidParameter(format!(
                        "expected {arity} weights, got {}",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !x.is_positive()) {
                    return Err(Error::InvalidParameter("weights must be strictly positive".into()));
                }
                w
            }
        };
        let float_weights = weights.iter().map(|w| FloatBits(rational_to_f64(w).to_bits())).collect();
        Ok(GroupInstance { kind, weights, float_weights })
    }

    pub fn free_abelian(dim: usize) -> Self {
        Self::new(GroupKind::FreeAbelian { dim }, None).expect("valid")
    }

    pub fn weighted_free_abelian(weights: Vec<BigRational>) -> Result<Self> {
        Self::new(GroupKind::FreeAbelian { dim: weights.len() }, Some(weights))
    }

    pub fn positive_naturals(dim: usize) -> Self {
        Self::new(GroupKind::PositiveNaturals { dim }, None).expect("valid")
    }

    pub fn cyclic(modulus: u64, dim: usize) -> Result<Self> {
        Self::new(GroupKind::Cyclic { modulus, dim }, None)
    }

    pub fn torus(dim: usize) -> Self {
        Self::new(GroupKind::Torus { dim }, None).expect("valid")
    }

    pub fn graph_space(edges: usize) -> Result<Self> {
        Self::new(GroupKind::GraphSpace { edges }, None)
    }

    pub fn free_group(rank: usize) -> Result<Self> {
        Self::new(GroupKind::FreeGroup { rank }, None)
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self> {
        let need = |v: Option<u64>, name: &str| -> Result<u64> {
            let v = v.ok_or_else(|| Error::InvalidParameter(format!("`{name}` is required")))?;
            if v == 0 {
                return Err(Error::InvalidParameter(format!("`{name}` must be >= 1")));
            }
            Ok(v)
        };
        let only = |allowed: &[&str]| -> Result<()> {
            let present = [
                ("dim", spec.dim.is_some()),
                ("modulus", spec.modulus.is_some()),
                ("edges", spec.edges.is_some()),
                ("rank", spec.rank.is_some()),
            ];
            for (name, set) in present {
                if set && !allowed.contains(&name) {
                    return Err(Error::InvalidParameter(format!("`{name}` is not a parameter of {}", spec.kind)));
                }
            }
            Ok(())
        };
        let dim_or_one = || -> Result<usize> {
            match spec.dim {
                None => Ok(1),
                Some(0) => Err(Error::InvalidParameter("`dim` must be >= 1".into())),
                Some(d) => Ok(d as usize),
            }
        };
        let kind = match spec.kind.as_str() {
            "free-abelian" => {
                only(&["dim"])?;
                GroupKind::FreeAbelian { dim: need(spec.dim, "dim")? as usize }
            }
            "positive-naturals" => {
                only(&["dim"])?;
                GroupKind::PositiveNaturals { dim: dim_or_one()? }
            }
            "cyclic" => {
                only(&["modulus", "dim"])?;
                GroupKind::Cyclic { modulus: need(spec.modulus, "modulus")?, dim: dim_or_one()? }
            }
            "torus" => {
                only(&["dim"])?;
                GroupKind::Torus { dim: dim_or_one()? }
            }
            "graph-space" => {
                only(&["edges"])?;
                GroupKind::GraphSpace { edges: need(spec.edges, "edges")? as usize }
            }
            "free-group" => {
                only(&["rank"])?;
                GroupKind::FreeGroup { rank: need(spec.rank, "rank")? as usize }
            }
            other => return Err(Error::UnknownKind(other.to_string())),
        };
        let weights = match &spec.weights {
            None => None,
            Some(ws) => Some(ws.iter().map(|w| parse_rational(w)).collect::<Result<Vec<_>>>().map_err(
                |e| Error::InvalidParameter(format!("weight: {e}")),
            )?),
        };
        Self::new(kind, weights)
    }

    /// Normalized specification; weights are omitted when all equal one.
    pub fn to_spec(&self) -> InstanceSpec {
        let mut spec = InstanceSpec {
            kind: self.kind.name().to_string(),
            dim: None,
            modulus: None,
            edges: None,
            rank: None,
            weights: None,
        };
        match self.kind {
            GroupKind::FreeAbelian { dim } | GroupKind::PositiveNaturals { dim } | GroupKind::Torus { dim } => {
                spec.dim = Some(dim as u64)
            }
            GroupKind::Cyclic { modulus, dim } => {
                spec.modulus = Some(modulus);
                spec.dim = Some(dim as u64);
            }
            GroupKind::GraphSpace { edges } => spec.edges = Some(edges as u64),
            GroupKind::FreeGroup { rank } => spec.rank = Some(rank as u64),
        }
        if self.weights.iter().any(|w| !w.is_one()) {
            spec.weights = Some(self.weights.iter().map(format_rational).collect());
        }
        spec
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self.to_spec()).expect("spec serializes")
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    /// True for families that admit an isometric embedding into a weighted
    /// coordinate Banach space.
    pub fn has_linear_model(&self) -> bool {
        matches!(self.kind, GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. })
    }

    fn mismatch(&self, e: &Element) -> Error {
        Error::InstanceMismatch(format!("element {e} does not belong to {}", self.kind.name()))
    }

    /// Checks that `e` is a canonical element of this instance.
    pub fn validate(&self, e: &Element) -> Result<()> {
        let ok = match (&self.kind, e) {
            (GroupKind::FreeAbelian { dim }, Element::Ints(v)) => v.len() == *dim,
            (GroupKind::PositiveNaturals { dim }, Element::Ints(v)) => v.len() == *dim && v.iter().all(|&x| x >= 1),
            (GroupKind::Cyclic { modulus, dim }, Element::Residues(v)) => {
                v.len() == *dim && v.iter().all(|x| x < modulus)
            }
            (GroupKind::Torus { dim }, Element::Angles(v)) => {
                v.len() == *dim && v.iter().all(|x| (0.0..1.0).contains(x))
            }
            (GroupKind::GraphSpace { edges }, Element::Bits { mask, len }) => {
                *len as usize == *edges && (*edges == 64 || mask >> edges == 0)
            }
            (GroupKind::FreeGroup { rank }, Element::Word(w)) => w.max_generator() <= *rank,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.mismatch(e))
        }
    }

    /// Parses an element from its JSON form: integer arrays (or a bare
    /// integer in dimension one) for `Z^d`, `N^d` and `(Z/m)^d`; numbers or
    /// `"p/q"` strings for the torus; `"101"` or `[1,0,1]` for graph space;
    /// a word string such as `"aba^-1"` for free groups.
    pub fn element_from_json(&self, v: &Value) -> Result<Element> {
        let bad = |msg: &str| Error::InvalidElement(format!("{msg}: {v}"));
        let as_list = |v: &Value| -> Vec<Value> {
            match v {
                Value::Array(a) => a.clone(),
                other => vec![other.clone()],
            }
        };
        let e = match &self.kind {
            GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. } => {
                let xs = as_list(v)
                    .iter()
                    .map(|x| x.as_i64().ok_or_else(|| bad("expected integers")))
                    .collect::<Result<Vec<_>>>()?;
                Element::Ints(xs)
            }
            GroupKind::Cyclic { modulus, .. } => {
                let m = *modulus as i128;
                let xs = as_list(v)
                    .iter()
                    .map(|x| x.as_i64().map(|i| (i as i128).rem_euclid(m) as u64).ok_or_else(|| bad("expected integers")))
                    .collect::<Result<Vec<_>>>()?;
                Element::Residues(xs)
            }
            GroupKind::Torus { .. } => {
                let xs = as_list(v)
                    .iter()
                    .map(|x| match x {
                        Value::Number(n) => n.as_f64().ok_or_else(|| bad("expected numbers")),
                        Value::String(s) => parse_rational(s).map(|r| rational_to_f64(&r)),
                        _ => Err(bad("expected numbers or \"p/q\" strings")),
                    })
                    .map(|r| r.map(wrap_unit))
                    .collect::<Result<Vec<_>>>()?;
                Element::Angles(xs)
            }
            GroupKind::GraphSpace { edges } => {
                let bits: Vec<bool> = match v {
                    Value::String(s) => s
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(bad("bit strings use 0 and 1")),
                        })
                        .collect::<Result<_>>()?,
                    Value::Array(a) => a
                        .iter()
                        .map(|x| match x.as_u64() {
                            Some(0) => Ok(false),
                            Some(1) => Ok(true),
                            _ => Err(bad("bit arrays use 0 and 1")),
                        })
                        .collect::<Result<_>>()?,
                    _ => return Err(bad("expected a bit string")),
                };
                if bits.len() != *edges {
                    return Err(bad(&format!("expected {edges} bits")));
                }
                let mask = bits.iter().enumerate().fold(0u64, |m, (i, &b)| if b { m | 1 << i } else { m });
                Element::Bits { mask, len: *edges as u32 }
            }
            GroupKind::FreeGroup { .. } => {
                let s = v.as_str().ok_or_else(|| bad("expected a word string"))?;
                Element::Word(parse_word(s)?)
            }
        };
        self.validate(&e).map_err(|_| bad("not an element of this instance"))?;
        Ok(e)
    }

    pub fn element_to_json(&self, e: &Element) -> Value {
        serde_json::to_value(e).expect("element serializes")
    }

    /// Deterministic enumeration: complete for finite instances, complete up
    /// to `bound` (coordinate bound, grid resolution, or word length)
    /// otherwise.
    pub fn enumerate_elements(&self, bound: Option<u64>) -> Result<Vec<Element>> {
        const LIMIT: u128 = 1 << 22;
        let too_large = |count: u128| -> Result<()> {
            if count > LIMIT {
                Err(Error::TooLarge(format!("{count} elements to enumerate")))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            GroupKind::FreeAbelian { dim } => {
                let b = bound.ok_or(Error::BoundRequired)? as i64;
                too_large((2 * b as u128 + 1).saturating_pow(*dim as u32))?;
                Ok(grid(*dim, -b, b).into_iter().map(Element::Ints).collect())
            }
            GroupKind::PositiveNaturals { dim } => {
                let b = bound.ok_or(Error::BoundRequired)? as i64;
                too_large((b.max(0) as u128).saturating_pow(*dim as u32))?;
                if b < 1 {
                    return Ok(Vec::new());
                }
                Ok(grid(*dim, 1, b).into_iter().map(Element::Ints).collect())
            }
            GroupKind::Cyclic { modulus, dim } => {
                too_large((*modulus as u128).saturating_pow(*dim as u32))?;
                Ok(grid(*dim, 0, *modulus as i64 - 1)
                    .into_iter()
                    .map(|v| Element::Residues(v.into_iter().map(|x| x as u64).collect()))
                    .collect())
            }
            GroupKind::Torus { dim } => {
                let b = bound.ok_or(Error::BoundRequired)?;
                if b == 0 {
                    return Err(Error::InvalidParameter("torus grid resolution must be >= 1".into()));
                }
                too_large((b as u128).saturating_pow(*dim as u32))?;
                Ok(grid(*dim, 0, b as i64 - 1)
                    .into_iter()
                    .map(|v| Element::Angles(v.into_iter().map(|k| k as f64 / b as f64).collect()))
                    .collect())
            }
            GroupKind::GraphSpace { edges } => {
                too_large(1u128 << *edges)?;
                Ok((0..1u64 << *edges).map(|mask| Element::Bits { mask, len: *edges as u32 }).collect())
            }
            GroupKind::FreeGroup { rank } => {
                let b = bound.ok_or(Error::BoundRequired)? as usize;
                let mut out = vec![ReducedWord::empty()];
                let mut layer = vec![ReducedWord::empty()];
                for _ in 0..b {
                    let mut next = Vec::new();
                    for w in &layer {
                        for letter in ReducedWord::alphabet(*rank) {
                            if w.last() != Some(-letter) {
                                let mut v = w.letters().to_vec();
                                v.push(letter);
                                next.push(ReducedWord::from_reduced(v));
                            }
                        }
                    }
                    too_large((out.len() + next.len()) as u128)?;
                    out.extend(next.iter().cloned());
                    layer = next;
                }
                Ok(out.into_iter().map(Element::Word).collect())
            }
        }
    }

    /// In-place composition `acc ← acc ∘ b` for the abelian families; avoids
    /// allocation in enumeration loops.
    pub fn compose_into(&self, acc: &mut Element, b: &Element) -> Result<()> {
        match (&self.kind, acc, b) {
            (GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. }, Element::Ints(x), Element::Ints(y))
                if x.len() == y.len() =>
            {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = a.checked_add(*b).ok_or(Error::PowerOverflow)?;
                }
                Ok(())
            }
            (GroupKind::Cyclic { modulus, .. }, Element::Residues(x), Element::Residues(y)) if x.len() == y.len() => {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = ((*a as u128 + *b as u128) % *modulus as u128) as u64;
                }
                Ok(())
            }
            (GroupKind::Torus { .. }, Element::Angles(x), Element::Angles(y)) if x.len() == y.len() => {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = wrap_unit(*a + *b);
                }
                Ok(())
            }
            (GroupKind::GraphSpace { .. }, Element::Bits { mask, len }, Element::Bits { mask: m2, len: l2 })
                if len == l2 =>
            {
                *mask ^= m2;
                Ok(())
            }
            (_, acc, b) => {
                let r = self.compose(acc, b)?;
                *acc = r;
                Ok(())
            }
        }
    }

    /// `d(1, g)` for instances with an identity.
    pub fn norm(&self, g: &Element) -> Result<Scalar> {
        let unit = self.identity().ok_or_else(|| Error::InvalidParameter("instance has no identity".into()))?;
        self.distance(&unit, g)
    }

    fn weighted_sum_exact<I: Iterator<Item = BigRational>>(&self, terms: I) -> Scalar {
        let mut total = BigRational::zero();
        for (w, t) in self.weights.iter().zip(terms) {
            if !t.is_zero() {
                total += w * t;
            }
        }
        Scalar::Exact(total)
    }
}

/// Reduces a float into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 || r == 0.0 {
        0.0
    } else {
        r
    }
}

fn grid(dim: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
        for prefix in &out {
            for x in lo..=hi {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn arc(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

impl MetricSemigroup for GroupInstance {
    type Elem = Element;

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        match (&self.kind, a, b) {
            (GroupKind::FreeGroup { .. }, Element::Word(x), Element::Word(y)) => Ok(Element::Word(x.concat(y))),
            (GroupKind::FreeGroup { .. }, _, _) => Err(self.mismatch(if matches!(a, Element::Word(_)) { b } else { a })),
            _ => {
                self.validate(a)?;
                self.validate(b)?;
                let mut acc = a.clone();
                self.compose_into(&mut acc, b)?;
                Ok(acc)
            }
        }
    }

    fn distance(&self, a: &Element, b: &Element) -> Result<Scalar> {
        self.validate(a)?;
        self.validate(b)?;
        match (&self.kind, a, b) {
            (GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. }, Element::Ints(x), Element::Ints(y)) => {
                Ok(self.weighted_sum_exact(x.iter().zip(y).map(|(p, q)| int((*p as i128 - *q as i128).unsigned_abs() as i64))))
            }
            (GroupKind::Cyclic { modulus, .. }, Element::Residues(x), Element::Residues(y)) => {
                Ok(self.weighted_sum_exact(x.iter().zip(y).map(|(p, q)| {
                    let d = p.abs_diff(*q);
                    int(d.min(modulus - d) as i64)
                })))
            }
            (GroupKind::Torus { .. }, Element::Angles(x), Element::Angles(y)) => Ok(Scalar::Approx(
                x.iter().zip(y).zip(&self.float_weights).map(|((p, q), w)| w.get() * arc(*p, *q)).sum(),
            )),
            (GroupKind::GraphSpace { .. }, Element::Bits { mask: x, .. }, Element::Bits { mask: y, .. }) => {
                let diff = x ^ y;
                Ok(self.weighted_sum_exact((0..self.weights.len()).map(|i| int((diff >> i & 1) as i64))))
            }
            (GroupKind::FreeGroup { .. }, _, _) => Err(Error::DistanceUnavailable(
                "free-group distances come from the bi-invariant word norm (word-norm)".into(),
            )),
            _ => Err(self.mismatch(a)),
        }
    }

    fn identity(&self) -> Option<Element> {
        Some(match &self.kind {
            GroupKind::FreeAbelian { dim } => Element::Ints(vec![0; *dim]),
            GroupKind::PositiveNaturals { .. } => return None,
            GroupKind::Cyclic { dim, .. } => Element::Residues(vec![0; *dim]),
            GroupKind::Torus { dim } => Element::Angles(vec![0.0; *dim]),
            GroupKind::GraphSpace { edges } => Element::Bits { mask: 0, len: *edges as u32 },
            GroupKind::FreeGroup { .. } => Element::Word(ReducedWord::empty()),
        })
    }

    fn capabilities(&self) -> Capabilities {
        let group = !matches!(self.kind, GroupKind::PositiveNaturals { .. });
        Capabilities {
            has_identity: group,
            has_inverses: group,
            is_abelian: !matches!(self.kind, GroupKind::FreeGroup { .. }),
            distance_exactness: if matches!(self.kind, GroupKind::Torus { .. }) {
                Exactness::Float
            } else {
                Exactness::ExactRational
            },
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Element {
        match &self.kind {
            GroupKind::FreeAbelian { dim } => Element::Ints((0..*dim).map(|_| rng.gen_range(-20..=20)).collect()),
            GroupKind::PositiveNaturals { dim } => Element::Ints((0..*dim).map(|_| rng.gen_range(1..=20)).collect()),
            GroupKind::Cyclic { modulus, dim } => Element::Residues((0..*dim).map(|_| rng.gen_range(0..*modulus)).collect()),
            GroupKind::Torus { dim } => Element::Angles((0..*dim).map(|_| rng.gen_range(0.0..1.0)).collect()),
            GroupKind::GraphSpace { edges } => {
                let full = if *edges == 64 { u64::MAX } else { (1u64 << edges) - 1 };
                Element::Bits { mask: rng.next_u64() & full, len: *edges as u32 }
            }
            GroupKind::FreeGroup { rank } => {
                let len = rng.gen_range(0..=6);
                let alphabet = ReducedWord::alphabet(*rank);
                let letters: Vec<i8> = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
                Element::Word(ReducedWord::reduce(&letters))
            }
        }
    }

    fn inverse(&self, a: &Element) -> Option<Element> {
        Some(match (&self.kind, a) {
            (GroupKind::FreeAbelian { .. }, Element::Ints(v)) => Element::Ints(v.iter().map(|x| -x).collect()),
            (GroupKind::Cyclic { modulus, .. }, Element::Residues(v)) => {
                Element::Residues(v.iter().map(|x| (modulus - x) % modulus).collect())
            }
            (GroupKind::Torus { .. }, Element::Angles(v)) => Element::Angles(v.iter().map(|x| wrap_unit(-x)).collect()),
            (GroupKind::GraphSpace { .. }, Element::Bits { .. }) => a.clone(),
            (GroupKind::FreeGroup { .. }, Element::Word(w)) => Element::Word(w.inverse()),
            _ => return None,
        })
    }

    fn same_element(&self, a: &Element, b: &Element) -> bool {
        match (a, b) {
            (Element::Angles(x), Element::Angles(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| arc(*p, *q) <= TORUS_TOLERANCE)
            }
            _ => a == b,
        }
    }

    fn tolerance(&self) -> f64 {
        match self.kind {
            GroupKind::Torus { .. } => TORUS_TOLERANCE,
            _ => 0.0,
        }
    }

    fn power(&self, g: &Element, k: i64) -> Result<Element> {
        self.validate(g)?;
        match (&self.kind, g) {
            (GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. }, Element::Ints(v)) => {
                if k <= 0 && matches!(self.kind, GroupKind::PositiveNaturals { .. }) {
                    return Err(Error::NonPositivePower(k));
                }
                v.iter()
                    .map(|x| x.checked_mul(k).ok_or(Error::PowerOverflow))
                    .collect::<Result<Vec<_>>>()
                    .map(Element::Ints)
            }
            (GroupKind::Cyclic { modulus, .. }, Element::Residues(v)) => {
                let m = *modulus as i128;
                Ok(Element::Residues(v.iter().map(|x| ((*x as i128 * k as i128).rem_euclid(m)) as u64).collect()))
            }
            (GroupKind::Torus { .. }, Element::Angles(v)) => {
                Ok(Element::Angles(v.iter().map(|x| wrap_unit(x * k as f64)).collect()))
            }
            (GroupKind::GraphSpace { .. }, Element::Bits { mask, len }) => {
                Ok(Element::Bits { mask: if k.rem_euclid(2) == 1 { *mask } else { 0 }, len: *len })
            }
            (GroupKind::FreeGroup { .. }, Element::Word(w)) => Ok(Element::Word(w.pow(k))),
            _ => Err(self.mismatch(g)),
        }
    }

    fn describe(&self, e: &Element) -> String {
        e.to_string()
    }

    fn divide_exact(&self, e: &Element, k: u64) -> Option<Element> {
        match (&self.kind, e) {
            (GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. }, Element::Ints(v)) => {
                let k = i64::try_from(k).ok()?;
                if k == 0 || v.iter().any(|x| x % k != 0) {
                    return None;
                }
                let q: Vec<i64> = v.iter().map(|x| x / k).collect();
                let out = Element::Ints(q);
                self.validate(&out).ok()?;
                Some(out)
            }
            _ => None,
        }
    }

    fn coordinates(&self, e: &Element) -> Option<Vec<BigRational>> {
        match (&self.kind, e) {
            (GroupKind::FreeAbelian { .. } | GroupKind::PositiveNaturals { .. }, Element::Ints(v)) => {
                Some(v.iter().map(|x| int(*x)).collect())
            }
            _ => None,
        }
    }

    fn norm_weights(&self) -> Option<Vec<BigRational>> {
        self.has_linear_model().then(|| self.weights.clone())
    }

    fn from_coordinates(&self, v: &[BigRational]) -> Option<Element> {
        if !self.has_linear_model() {
            return None;
        }
        let ints = v
            .iter()
            .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
            .collect::<Option<Vec<_>>>()?;
        let e = Element::Ints(ints);
        self.validate(&e).ok()?;
        Some(e)
    }
}

/// Exact gcd of a list of integers (zero for the empty or all-zero list).
pub fn content(v: &[i64]) -> u64 {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(&BigInt::from(*x))).to_u64().unwrap_or(0)
}
