use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::json;

use super::moments::{kk_constant, moment, KkConstant, Regime};
use super::report::{ConstantTag, InequalityReport};
use super::{enumerate_rademacher, DistanceDistribution, RademacherScenario};
use crate::error::{Error, Result};
use crate::instances::{Element, GroupInstance};
use crate::normedness::normed_gate;
use crate::scalar::{format_rational, rational_pow, rational_to_f64, Scalar};

/// Largest total exponent used when comparing powers exactly.
const EXACT_POWER_MAX: u64 = 4096;

/// Largest `n` for which the normedness gate is applied.
const GATE_N_MAX: u64 = 4;

/// The least `l` with `q < 2^l`, so that `2^{l-1} <= q < 2^l`.
pub fn kk_exponent_l(q: &BigRational) -> u32 {
    let mut l = 0u32;
    while &BigRational::from_integer(BigInt::one() << l) <= q {
        l += 1;
    }
    l
}

fn small(r: &BigInt) -> Option<u64> {
    r.to_u64().filter(|k| *k <= EXACT_POWER_MAX)
}

/// Decides `E_A^{1/q} <= C · E_B^{1/p}` exactly when `p` and `q` are integers.
fn compare_integer_moments(
    lhs: &DistanceDistribution,
    rhs: &DistanceDistribution,
    p: &BigRational,
    q: &BigRational,
    c: &KkConstant,
) -> Option<bool> {
    if !p.is_integer() || !q.is_integer() || !lhs.is_exact() || !rhs.is_exact() {
        return None;
    }
    let (a, cq) = (small(p.numer())?, small(q.numer())?);
    if a.checked_mul(cq)? > EXACT_POWER_MAX {
        return None;
    }
    let power = c.power_q_numer.as_ref()?;
    let raw = |law: &DistanceDistribution, k: u64| -> BigRational {
        law.atoms()
            .iter()
            .map(|(d, w)| rational_pow(d.as_exact().expect("exact"), k) * w)
            .fold(BigRational::zero(), |x, y| x + y)
    };
    let e_a = raw(lhs, cq);
    let e_b = raw(rhs, a);
    Some(rational_pow(&e_a, a) <= rational_pow(power, a) * rational_pow(&e_b, cq))
}

/// Decides the inequality exactly when each law has at most one nonzero atom:
/// `π^{1/q} v <= C ρ^{1/p} u` raised to the power `a c` for `p = a/b`, `q = c/d`.
fn compare_single_atoms(
    lhs: &DistanceDistribution,
    rhs: &DistanceDistribution,
    p: &BigRational,
    q: &BigRational,
    c: &KkConstant,
) -> Option<bool> {
    let single = |law: &DistanceDistribution| -> Option<Option<(BigRational, BigRational)>> {
        let mut it = law.nonzero_atoms();
        let first = it.next();
        if it.next().is_some() {
            return None;
        }
        match first {
            None => Some(None),
            Some((d, w)) => Some(Some((d.as_exact()?.clone(), w.clone()))),
        }
    };
    let (l, r) = (single(lhs)?, single(rhs)?);
    let Some((v, pi)) = l else { return Some(true) };
    let Some((u, rho)) = r else { return Some(false) };
    let (a, b) = (small(p.numer())?, small(p.denom())?);
    let (cq, d) = (small(q.numer())?, small(q.denom())?);
    let n = a.checked_mul(cq)?;
    if n > EXACT_POWER_MAX || a.checked_mul(d)? > EXACT_POWER_MAX || b.checked_mul(cq)? > EXACT_POWER_MAX {
        return None;
    }
    let power = c.power_q_numer.as_ref()?;
    let left = rational_pow(&pi, a * d) * rational_pow(&v, n);
    let right = rational_pow(power, a) * rational_pow(&rho, b * cq) * rational_pow(&u, n);
    Some(left <= right)
}

/// Khinchin–Kahane check:
/// `E[d(1, ∏ x_k^{m r_k})^q]^{1/q} <= C · E[d(1, ∏ x_k^{r_k})^p]^{1/p}`
/// with `m = 1` in the normed regimes and `m = 2^l` in the general one.
///
/// The verdict is exact when both sides reduce to rational comparisons;
/// otherwise it is decided on outward-rounded float bounds and only reports
/// `satisfied` if the inequality survives adversarial rounding.
pub fn check_kk(scenario: &RademacherScenario, regime: Regime) -> Result<InequalityReport> {
    let (p, q) = (&scenario.p, &scenario.q);
    let constant = kk_constant(p, q, regime)?;
    if regime.is_normed() {
        let verdict = normed_gate(&scenario.instance, &scenario.elements, GATE_N_MAX)?;
        if let Some(c) = verdict.counterexample {
            return Err(Error::NotNormed(format!(
                "d(z, z^{}) = {} but {}·d(z, z^2) = {} at z = {}",
                c.n + 1,
                c.lhs,
                c.n,
                c.rhs,
                c.element
            )));
        }
    }
    let l = kk_exponent_l(q);
    let m = if regime.is_normed() { 1 } else { 1u64 << l };
    let base = enumerate_rademacher(scenario, 1)?;
    let powered = if m == 1 { base.clone() } else { enumerate_rademacher(scenario, m)? };

    let lhs_moment = moment(&powered, q)?;
    let rhs_moment = moment(&base, p)?;
    let lhs = lhs_moment.root.clone();
    let rhs = match (&constant.value, &rhs_moment.root) {
        (Scalar::Exact(c), Scalar::Exact(r)) => Scalar::Exact(c * r),
        (c, r) => Scalar::Approx(c.to_f64() * r.to_f64()),
    };

    let (satisfied, exact) = if powered.is_zero() {
        (true, powered.is_exact())
    } else if m == 1 && p == q && constant.power_q_numer.as_ref().is_some_and(One::is_one) {
        // both sides are the same moment of the same law
        (true, true)
    } else if let Some(ok) = compare_integer_moments(&powered, &base, p, q, &constant) {
        (ok, true)
    } else if let Some(ok) = compare_single_atoms(&powered, &base, p, q, &constant) {
        (ok, true)
    } else {
        let rhs_bounds = constant.bounds.mul(&rhs_moment.root_bounds);
        (lhs_moment.root_bounds.hi <= rhs_bounds.lo, false)
    };

    let mut witness = scenario.to_json();
    witness["regime"] = json!(regime.name());
    witness["m"] = json!(m);
    witness["lhs_law"] = serde_json::to_value(&powered)?;
    witness["rhs_law"] = serde_json::to_value(&base)?;
    Ok(InequalityReport::new(
        "khinchin-kahane",
        lhs,
        rhs,
        ConstantTag { value: constant.value, formula: constant.formula },
        satisfied,
        exact,
        witness,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessReport {
    #[serde(with = "crate::scalar::serde_rational")]
    pub q: BigRational,
    /// `E[P^q]^{1/q} / E[P]` for the two-term sum `x^{r_1} x^{r_2}`.
    pub ratio: f64,
    /// `ratio^q` as an exact rational, when `q` is an integer.
    pub ratio_pow_q: Option<String>,
    /// `2^{1-1/q}`
    pub expected: f64,
    /// `ratio^q == 2^{q-1}` in exact arithmetic, when available.
    pub exact_match: Option<bool>,
}

/// The ratio attained by `x_1 = x_2 = x`, which meets the sharp constant.
pub fn sharpness_ratio(instance: &GroupInstance, x: &Element, q: &BigRational) -> Result<SharpnessReport> {
    if q < &BigRational::one() || q > &BigRational::from_integer(BigInt::from(2)) {
        return Err(Error::InvalidParameter(format!("q = {} lies outside [1, 2]", format_rational(q))));
    }
    if instance.norm(x)?.is_zero() {
        return Err(Error::InvalidParameter("x must not be the identity".into()));
    }
    let verdict = normed_gate(instance, std::slice::from_ref(x), GATE_N_MAX)?;
    if !verdict.all_hold() {
        return Err(Error::NotNormed(format!("{} is not normed at {x}", instance.kind().name())));
    }
    let scenario = RademacherScenario::new(instance.clone(), vec![x.clone(), x.clone()], BigRational::one(), q.clone())?;
    let law = enumerate_rademacher(&scenario, 1)?;
    let top = moment(&law, q)?;
    let bottom = moment(&law, &BigRational::one())?;
    let ratio = top.root.to_f64() / bottom.root.to_f64();
    let qf = rational_to_f64(q);
    let mut ratio_pow_q = None;
    let mut exact_match = None;
    if let (Scalar::Exact(t), Scalar::Exact(b), true) = (&top.raw, &bottom.raw, q.is_integer()) {
        let k = q.to_integer().to_u64().expect("q <= 2");
        let r = t / rational_pow(b, k);
        exact_match = Some(r == rational_pow(&BigRational::from_integer(BigInt::from(2)), k - 1));
        ratio_pow_q = Some(format_rational(&r));
    }
    Ok(SharpnessReport { q: q.clone(), ratio, ratio_pow_q, expected: 2f64.powf(1.0 - 1.0 / qf), exact_match })
}
