use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::DistanceDistribution;
use crate::error::{Error, Result};
use crate::scalar::{rational_pow, rational_to_f64, Bounds, Scalar};

/// Largest integer exponent evaluated in exact arithmetic.
const EXACT_EXPONENT_MAX: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moment {
    /// `E[Z^p]`
    pub raw: Scalar,
    /// `E[Z^p]^{1/p}`
    pub root: Scalar,
    #[serde(skip)]
    pub raw_bounds: Bounds,
    #[serde(skip)]
    pub root_bounds: Bounds,
}

fn integer_exponent(p: &BigRational) -> Option<u64> {
    if p.is_integer() {
        p.to_integer().to_u64().filter(|k| *k <= EXACT_EXPONENT_MAX)
    } else {
        None
    }
}

fn exact_root(x: &BigRational, k: u64) -> Option<BigRational> {
    if k == 1 {
        return Some(x.clone());
    }
    let k32 = u32::try_from(k).ok()?;
    let n = x.numer().nth_root(k32);
    let d = x.denom().nth_root(k32);
    let r = BigRational::new(n, d);
    (rational_pow(&r, k) == *x).then_some(r)
}

/// `E[Z^p]` and `E[Z^p]^{1/p}`, exact when `p` is a positive integer, the
/// atoms are exact and the root is rational; otherwise the root is a float
/// with outward bounds.
pub fn moment(dist: &DistanceDistribution, p: &BigRational) -> Result<Moment> {
    if p < &BigRational::one() {
        return Err(Error::InvalidParameter("moment exponent must be at least 1".into()));
    }
    let ulps = 64.0 * (dist.atoms().len() as f64 + 4.0);
    let pf = rational_to_f64(p);
    if let (Some(k), true) = (integer_exponent(p), dist.is_exact()) {
        let raw: BigRational = dist
            .atoms()
            .iter()
            .map(|(d, w)| rational_pow(d.as_exact().expect("exact"), k) * w)
            .fold(BigRational::zero(), |a, b| a + b);
        let raw_f = rational_to_f64(&raw);
        let raw_bounds = Bounds::around(raw_f, 2.0);
        return Ok(match exact_root(&raw, k) {
            Some(r) => {
                let rf = rational_to_f64(&r);
                Moment { raw: Scalar::Exact(raw), root: Scalar::Exact(r), raw_bounds, root_bounds: Bounds::around(rf, 2.0) }
            }
            None => {
                let root_bounds = Bounds {
                    lo: raw_bounds.lo.max(0.0).powf(1.0 / pf),
                    hi: raw_bounds.hi.powf(1.0 / pf),
                }
                .widen(ulps);
                Moment { raw: Scalar::Exact(raw), root: Scalar::Approx(raw_f.powf(1.0 / pf)), raw_bounds, root_bounds }
            }
        });
    }
    let raw_f: f64 = dist.atoms().iter().map(|(d, w)| rational_to_f64(w) * d.to_f64().powf(pf)).sum();
    let raw_bounds = Bounds::around(raw_f, ulps);
    let root_bounds = Bounds { lo: raw_bounds.lo.max(0.0).powf(1.0 / pf), hi: raw_bounds.hi.powf(1.0 / pf) }.widen(ulps);
    Ok(Moment { raw: Scalar::Approx(raw_f), root: Scalar::Approx(raw_f.powf(1.0 / pf)), raw_bounds, root_bounds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    NormedGeneral,
    NormedSharp,
    General,
}

impl Regime {
    pub fn is_normed(self) -> bool {
        !matches!(self, Regime::General)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::NormedGeneral => "normed-general",
            Regime::NormedSharp => "normed-sharp",
            Regime::General => "general",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normed-general" => Ok(Regime::NormedGeneral),
            "normed-sharp" => Ok(Regime::NormedSharp),
            "general" => Ok(Regime::General),
            other => Err(Error::InvalidRegime(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KkConstant {
    pub value: Scalar,
    pub formula: String,
    #[serde(skip)]
    pub bounds: Bounds,
    /// `C^c` for `q = c/d` in lowest terms, when small enough to hold exactly.
    #[serde(skip)]
    pub power_q_numer: Option<BigRational>,
}

/// The Khinchin–Kahane constants:
///
/// * `1` for `q <= p` (normed);
/// * `2^{1-1/q}` for `p = 1 <= q <= 2` (normed, sharp);
/// * `64 q (q/4)^{1/q}` for `q > p` (normed);
/// * `64 q^2 (q/4)^{1/q}` for every `p, q` (general).
pub fn kk_constant(p: &BigRational, q: &BigRational, regime: Regime) -> Result<KkConstant> {
    let one = BigRational::one();
    if p < &one || q < &one {
        return Err(Error::InvalidParameter("p and q must be at least 1".into()));
    }
    let c = q.numer().to_u64();
    let d = q.denom().to_u64();
    let small = |k: Option<u64>| k.filter(|k| *k <= EXACT_EXPONENT_MAX);
    let (c, d) = (small(c), small(d));
    let qf = rational_to_f64(q);
    let four = BigRational::from_integer(BigInt::from(4));
    let sixty_four = BigRational::from_integer(BigInt::from(64));

    let (formula, exact_value, float_value, power) = match regime {
        Regime::NormedSharp => {
            if p != &one || q > &BigRational::from_integer(BigInt::from(2)) {
                return Err(Error::InvalidRegime("the sharp constant needs p = 1 and 1 <= q <= 2".into()));
            }
            let power = c.zip(d).map(|(c, d)| rational_pow(&BigRational::from_integer(BigInt::from(2)), c - d));
            let exact = (q == &one).then(|| one.clone());
            ("C_{1,q}=2^{1-1/q}", exact, 2f64.powf(1.0 - 1.0 / qf), power)
        }
        Regime::NormedGeneral if q <= p => ("C_{p,q}=1", Some(one.clone()), 1.0, Some(one.clone())),
        Regime::NormedGeneral => {
            let power = c.zip(d).map(|(c, d)| rational_pow(&(&sixty_four * q), c) * rational_pow(&(q / &four), d));
            let exact = (q == &four).then(|| &sixty_four * q);
            ("C_{p,q}=64q(q/4)^{1/q}", exact, 64.0 * qf * (qf / 4.0).powf(1.0 / qf), power)
        }
        Regime::General => {
            let power =
                c.zip(d).map(|(c, d)| rational_pow(&(&sixty_four * q * q), c) * rational_pow(&(q / &four), d));
            let exact = (q == &four).then(|| &sixty_four * q * q);
            ("K_{p,q}=64q^2(q/4)^{1/q}", exact, 64.0 * qf * qf * (qf / 4.0).powf(1.0 / qf), power)
        }
    };
    let (value, bounds) = match exact_value {
        Some(v) => {
            let f = rational_to_f64(&v);
            (Scalar::Exact(v), Bounds::around(f, 2.0))
        }
        None => (Scalar::Approx(float_value), Bounds::around(float_value, 64.0)),
    };
    Ok(KkConstant { value, formula: formula.to_string(), bounds, power_q_numer: power })
}
