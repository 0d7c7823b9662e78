use std::collections::BTreeMap;

use num::{BigInt, BigRational, Integer, One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::report::{ConstantTag, InequalityReport};
use super::DistanceDistribution;
use crate::algebra::MetricSemigroup;
use crate::envelope::FiniteDistribution;
use crate::error::{Error, Result};
use crate::instances::{Element, GroupInstance};
use crate::normedness::normed_gate;
use crate::scalar::{rational_to_f64, Scalar};

/// Largest number of paths `|support|^n` enumerated in exact mode.
pub const EXACT_PATH_MAX: u64 = 10_000_000;

const SCALE_C1: i64 = 10;
const FACTOR_C2: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MontMode {
    Exact,
    Sample { seed: u64, samples: u64 },
}

/// Joint law of `U_n = max_{k<=n} d(z0, z0 S_k)` and `D_n = d(z0, z0 S_n)`,
/// as marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathLaw {
    pub max_law: DistanceDistribution,
    pub end_law: DistanceDistribution,
    pub paths: u64,
    pub exact: bool,
}

fn path_count(support: usize, n: u32) -> Option<u64> {
    (support as u64).checked_pow(n).filter(|c| *c <= EXACT_PATH_MAX)
}

impl PathLaw {
    /// All `|support|^n` paths with integer weights `∏ w_i` where
    /// `p_i = w_i / L` for the common denominator `L`.
    pub fn exact(instance: &GroupInstance, law: &FiniteDistribution, z0: &Element, n: u32) -> Result<Self> {
        let support = law.support();
        let paths = path_count(support.len(), n).ok_or_else(|| {
            Error::TooLarge(format!("|support|^n exceeds {EXACT_PATH_MAX} paths; use sampling"))
        })?;
        let lcm = support.iter().fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let weights: Vec<u128> = support
            .iter()
            .map(|(_, p)| (p * BigRational::from_integer(lcm.clone())).to_integer().to_u128())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::TooLarge("probability denominators are too large".into()))?;
        let steps: Vec<&Element> = support.iter().map(|(e, _)| e).collect();

        type Hist = (BTreeMap<Scalar, u128>, BTreeMap<Scalar, u128>);
        fn walk(
            instance: &GroupInstance,
            steps: &[&Element],
            weights: &[u128],
            z0: &Element,
            cur: &Element,
            max: &Scalar,
            weight: u128,
            left: u32,
            hist: &mut Hist,
        ) -> Result<()> {
            if left == 0 {
                let end = instance.distance(z0, cur)?;
                let add = |m: &mut BTreeMap<Scalar, u128>, k: Scalar| -> Result<()> {
                    let slot = m.entry(k).or_insert(0);
                    *slot = slot.checked_add(weight).ok_or_else(|| Error::TooLarge("path weights overflow".into()))?;
                    Ok(())
                };
                add(&mut hist.0, max.clone())?;
                add(&mut hist.1, end)?;
                return Ok(());
            }
            for (step, w) in steps.iter().zip(weights) {
                let next = instance.compose(cur, step)?;
                let d = instance.distance(z0, &next)?;
                let m = if &d > max { d } else { max.clone() };
                let wt = weight.checked_mul(*w).ok_or_else(|| Error::TooLarge("path weights overflow".into()))?;
                walk(instance, steps, weights, z0, &next, &m, wt, left - 1, hist)?;
            }
            Ok(())
        }

        let hist: Hist = if n == 0 {
            let mut h: Hist = Default::default();
            h.0.insert(Scalar::zero(), 1);
            h.1.insert(Scalar::zero(), 1);
            h
        } else {
            let parts: Vec<Result<Hist>> = (0..steps.len())
                .into_par_iter()
                .map(|i| {
                    let mut h: Hist = Default::default();
                    let first = instance.compose(z0, steps[i])?;
                    let d = instance.distance(z0, &first)?;
                    walk(instance, &steps, &weights, z0, &first, &d, weights[i], n - 1, &mut h)?;
                    Ok(h)
                })
                .collect();
            let mut merged: Hist = Default::default();
            for part in parts {
                let (a, b) = part?;
                for (k, c) in a {
                    *merged.0.entry(k).or_insert(0) += c;
                }
                for (k, c) in b {
                    *merged.1.entry(k).or_insert(0) += c;
                }
            }
            merged
        };
        let to_law = |m: BTreeMap<Scalar, u128>| {
            DistanceDistribution::from_weights(
                m.into_iter().map(|(k, c)| (k, BigRational::from_integer(BigInt::from(c)))).collect(),
            )
        };
        let exact = !crate::normedness::is_float(instance);
        Ok(PathLaw { max_law: to_law(hist.0), end_law: to_law(hist.1), paths, exact })
    }

    /// Empirical law from `samples` paths; path `i` uses ChaCha8 stream `i`.
    pub fn sample(
        instance: &GroupInstance,
        law: &FiniteDistribution,
        z0: &Element,
        n: u32,
        seed: u64,
        samples: u64,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("samples must be positive".into()));
        }
        let support = law.support();
        let mut cumulative = Vec::with_capacity(support.len());
        let mut acc = 0.0;
        for (_, p) in support {
            acc += rational_to_f64(p);
            cumulative.push(acc);
        }
        let outcomes: Vec<Result<(Scalar, Scalar)>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let mut cur = z0.clone();
                let mut max = Scalar::zero();
                for _ in 0..n {
                    let u: f64 = rng.gen::<f64>() * acc;
                    let k = cumulative.iter().position(|c| u < *c).unwrap_or(support.len() - 1);
                    cur = instance.compose(&cur, &support[k].0)?;
                    let d = instance.distance(z0, &cur)?;
                    if d > max {
                        max = d;
                    }
                }
                Ok((max, instance.distance(z0, &cur)?))
            })
            .collect();
        let mut max_counts = BTreeMap::new();
        let mut end_counts = BTreeMap::new();
        for o in outcomes {
            let (m, d) = o?;
            *max_counts.entry(m).or_insert(0u64) += 1;
            *end_counts.entry(d).or_insert(0u64) += 1;
        }
        Ok(PathLaw {
            max_law: DistanceDistribution::from_counts(max_counts, samples),
            end_law: DistanceDistribution::from_counts(end_counts, samples),
            paths: samples,
            exact: false,
        })
    }
}

/// Maximal inequality for i.i.d. steps, one report per `t`:
/// `P(U_n >= t) <= 3 P(d(z0, z0 S_n) >= (t - d(z0, z1)) / 10)`.
///
/// Sampled verdicts allow three binomial standard deviations on each side.
pub fn check_mont(
    instance: &GroupInstance,
    law: &FiniteDistribution,
    z0: &Element,
    z1: &Element,
    n: u32,
    t_grid: &[Scalar],
    mode: MontMode,
) -> Result<Vec<InequalityReport>> {
    let caps = instance.capabilities();
    if !caps.is_abelian {
        return Err(Error::InvalidParameter(format!("{} is not abelian", instance.kind().name())));
    }
    instance.validate(z0)?;
    instance.validate(z1)?;
    let elems: Vec<Element> = law.support().iter().map(|(e, _)| e.clone()).collect();
    if let Some(c) = normed_gate(instance, &elems, 4)?.counterexample {
        return Err(Error::NotNormed(format!("the step {} fails d(z, z^{}) = {}·d(z, z^2)", c.element, c.n + 1, c.n)));
    }
    let paths = match mode {
        MontMode::Exact => PathLaw::exact(instance, law, z0, n)?,
        MontMode::Sample { seed, samples } => PathLaw::sample(instance, law, z0, n, seed, samples)?,
    };
    let offset = instance.distance(z0, z1)?;
    let c1 = BigRational::from_integer(BigInt::from(SCALE_C1));
    let c2 = BigRational::from_integer(BigInt::from(FACTOR_C2));
    let mut reports = Vec::with_capacity(t_grid.len());
    for t in t_grid {
        let threshold = t.sub(&offset).scale(&(BigRational::one() / &c1));
        let lhs = paths.max_law.tail_ge(t);
        let tail = paths.end_law.tail_ge(&threshold);
        let rhs = &c2 * &tail;
        let satisfied = match mode {
            MontMode::Exact => lhs <= rhs,
            MontMode::Sample { samples, .. } => {
                let sigma = |p: &BigRational| {
                    let p = rational_to_f64(p);
                    (p * (1.0 - p) / samples as f64).sqrt()
                };
                let (l, r) = (rational_to_f64(&lhs), rational_to_f64(&tail));
                l - 3.0 * sigma(&lhs) <= FACTOR_C2 as f64 * (r + 3.0 * sigma(&tail))
            }
        };
        let exact = paths.exact && t.is_exact();
        let mut witness = json!({
            "group": instance.to_json(),
            "z0": instance.element_to_json(z0),
            "z1": instance.element_to_json(z1),
            "n": n,
            "t": t.to_string(),
            "threshold": threshold.to_string(),
            "paths": paths.paths,
        });
        if let MontMode::Sample { seed, samples } = mode {
            witness["seed"] = json!(seed);
            witness["samples"] = json!(samples);
        }
        reports.push(InequalityReport::new(
            "maximal",
            Scalar::Exact(lhs.clone()),
            Scalar::Exact(rhs.clone()),
            ConstantTag { value: Scalar::from_int(FACTOR_C2), formula: "c_1=10,c_2=3".into() },
            satisfied,
            exact,
            witness,
        ));
    }
    Ok(reports)
}
