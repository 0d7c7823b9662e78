use std::collections::{BTreeMap, HashMap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DistanceDistribution, RademacherScenario};
use crate::algebra::{Exactness, MetricSemigroup};
use crate::error::{Error, Result};
use crate::instances::{Element, GroupInstance};
use crate::scalar::Scalar;

/// Largest `n` enumerated exactly (`2^24` sign vectors).
pub const EXACT_MAX_N: usize = 24;

/// Largest `n` supported by sampling (one bit per sign).
const SAMPLE_MAX_N: usize = 64;

/// Products `∏ y_k^{±1}` with `y_k = x_k^m`, indexed by a sign mask whose bit
/// `k` is set when `r_k = -1`.
pub struct SignSpace<'a> {
    instance: &'a GroupInstance,
    unit: Element,
    ys: Vec<Element>,
    ys_inv: Vec<Element>,
    ys_sq: Vec<Element>,
    ys_inv_sq: Vec<Element>,
    incremental: bool,
}

impl<'a> SignSpace<'a> {
    pub fn new(instance: &'a GroupInstance, elements: &[Element], m: u64) -> Result<Self> {
        let m = i64::try_from(m).map_err(|_| Error::PowerOverflow)?;
        let unit = instance
            .identity()
            .ok_or_else(|| Error::InvalidParameter("Rademacher sums need an identity".into()))?;
        let ys = elements.iter().map(|x| instance.power(x, m)).collect::<Result<Vec<_>>>()?;
        let ys_inv = elements.iter().map(|x| instance.power(x, -m)).collect::<Result<Vec<_>>>()?;
        let ys_sq = ys.iter().map(|y| instance.compose(y, y)).collect::<Result<Vec<_>>>()?;
        let ys_inv_sq = ys_inv.iter().map(|y| instance.compose(y, y)).collect::<Result<Vec<_>>>()?;
        // float products drift along a Gray-code walk, so recompute those
        let incremental = instance.capabilities().distance_exactness == Exactness::ExactRational;
        Ok(SignSpace { instance, unit, ys, ys_inv, ys_sq, ys_inv_sq, incremental })
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn unit(&self) -> &Element {
        &self.unit
    }

    /// `∏_{k ∈ subset} y_k^{r_k}` where `subset` is a bit mask.
    pub fn product_over(&self, signs: u64, subset: u64) -> Result<Element> {
        let mut acc = self.unit.clone();
        for k in 0..self.n() {
            if subset >> k & 1 == 1 {
                let y = if signs >> k & 1 == 1 { &self.ys_inv[k] } else { &self.ys[k] };
                self.instance.compose_into(&mut acc, y)?;
            }
        }
        Ok(acc)
    }

    pub fn product(&self, signs: u64) -> Result<Element> {
        self.product_over(signs, u64::MAX)
    }

    /// Visits the sign masks `gray(i)` for `i` in `start..end`.
    pub fn for_each_gray<F: FnMut(u64, &Element)>(&self, start: u64, end: u64, mut f: F) -> Result<()> {
        if start >= end {
            return Ok(());
        }
        let gray = |i: u64| i ^ (i >> 1);
        let mut acc = self.product(gray(start))?;
        f(gray(start), &acc);
        for i in start + 1..end {
            let g = gray(i);
            if self.incremental {
                let b = i.trailing_zeros() as usize;
                let step = if g >> b & 1 == 1 { &self.ys_inv_sq[b] } else { &self.ys_sq[b] };
                self.instance.compose_into(&mut acc, step)?;
            } else {
                acc = self.product(g)?;
            }
            f(g, &acc);
        }
        Ok(())
    }

    /// Contiguous index ranges covering `0..2^n`, for parallel enumeration.
    pub fn chunks(&self) -> Vec<(u64, u64)> {
        let total = 1u64 << self.n();
        let count = total.min(256);
        let size = total / count;
        (0..count).map(|c| (c * size, (c + 1) * size)).collect()
    }
}

fn check_exact_size(n: usize) -> Result<()> {
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds the exact-mode limit of {EXACT_MAX_N}; use sampling")));
    }
    Ok(())
}

/// Exact law of `d(1, ∏ x_k^{m r_k})` over all `2^n` sign vectors. Index
/// ranges are evaluated in parallel and their histograms merged, so the
/// result does not depend on the partition.
pub fn enumerate_rademacher(scenario: &RademacherScenario, m: u64) -> Result<DistanceDistribution> {
    let n = scenario.n();
    check_exact_size(n)?;
    let space = SignSpace::new(&scenario.instance, &scenario.elements, m)?;
    let partial: Vec<Result<HashMap<Element, u64>>> = space
        .chunks()
        .into_par_iter()
        .map(|(start, end)| {
            let mut counts: HashMap<Element, u64> = HashMap::new();
            space.for_each_gray(start, end, |_, e| *counts.entry(e.clone()).or_insert(0) += 1)?;
            Ok(counts)
        })
        .collect();
    let mut merged: HashMap<Element, u64> = HashMap::new();
    for part in partial {
        for (e, c) in part? {
            *merged.entry(e).or_insert(0) += c;
        }
    }
    let mut by_distance: BTreeMap<Scalar, u64> = BTreeMap::new();
    for (e, c) in merged {
        *by_distance.entry(scenario.instance.norm(&e)?).or_insert(0) += c;
    }
    Ok(DistanceDistribution::from_counts(by_distance, 1u64 << n))
}

/// Empirical law from `samples` seeded sign vectors. Sample `i` draws from
/// the ChaCha8 stream `i` of `seed`, so the result is independent of the
/// worker count.
pub fn sample_rademacher(scenario: &RademacherScenario, m: u64, samples: u64, seed: u64) -> Result<DistanceDistribution> {
    let n = scenario.n();
    if n > SAMPLE_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {SAMPLE_MAX_N}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let space = SignSpace::new(&scenario.instance, &scenario.elements, m)?;
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let counts: Result<HashMap<Element, u64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            space.product(rng.next_u64() & full)
        })
        .try_fold(HashMap::new, |mut acc, e| {
            *acc.entry(e?).or_insert(0u64) += 1;
            Ok(acc)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (e, c) in b {
                *a.entry(e).or_insert(0) += c;
            }
            Ok(a)
        });
    let mut by_distance: BTreeMap<Scalar, u64> = BTreeMap::new();
    for (e, c) in counts? {
        *by_distance.entry(scenario.instance.norm(&e)?).or_insert(0) += c;
    }
    Ok(DistanceDistribution::from_counts(by_distance, samples))
}
