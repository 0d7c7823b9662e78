use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::word::ReducedWord;
use super::{abelianization_lower_bound, ConjugateDecomposition, ConjugateFactor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Maximum reduced length of a conjugator.
    pub conj_bound: usize,
    /// Maximum number of factors tried.
    pub len_bound: usize,
    /// Node budget across all workers.
    pub node_budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { conj_bound: 4, len_bound: 6, node_budget: 200_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LowerCertificate {
    /// Abelianization L1 norm (or 2 in the commutator subgroup) plus parity.
    AbelianizationParity,
    /// No decomposition with fewer factors exists among conjugators of length
    /// at most `conj_bound`; conditional on that bound.
    SearchExhaustion { conj_bound: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormBounds {
    pub lower: u64,
    pub lower_certificate: LowerCertificate,
    pub upper: Option<u64>,
    pub witness: Option<ConjugateDecomposition>,
    /// `lower == upper`.
    pub exact: bool,
    /// Exact with a lower bound that does not depend on the search bound.
    pub unconditional: bool,
    pub budget_exceeded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found(ConjugateDecomposition),
    Exhausted,
    BudgetExceeded,
}

/// Conjugates `u s u^{-1}` with `|u| <= conj_bound`, the last letter of `u`
/// never `s^{±1}` (such `u` can be shortened), ordered by conjugator length,
/// then conjugator, then letter.
fn factor_table(rank: usize, conj_bound: usize) -> Vec<(ConjugateFactor, ReducedWord)> {
    let alphabet = ReducedWord::alphabet(rank);
    let mut conjugators = vec![ReducedWord::empty()];
    let mut layer = vec![ReducedWord::empty()];
    for _ in 0..conj_bound {
        let mut next = Vec::new();
        for u in &layer {
            for &l in &alphabet {
                if u.last() != Some(-l) {
                    let mut v = u.letters().to_vec();
                    v.push(l);
                    next.push(ReducedWord::from_reduced(v));
                }
            }
        }
        conjugators.extend(next.iter().cloned());
        layer = next;
    }
    let mut out = Vec::new();
    for u in &conjugators {
        for &s in &alphabet {
            if u.last().is_some_and(|l| l == s || l == -s) {
                continue;
            }
            let f = ConjugateFactor::new(u.clone(), s);
            let inv = ReducedWord::letter(-s).conjugate_by(u);
            out.push((f, inv));
        }
    }
    out
}

/// If `w = u s u^{-1}` with `|u| <= conj_bound`, returns that factor.
fn single_factor(w: &ReducedWord, conj_bound: usize) -> Option<ConjugateFactor> {
    let n = w.len();
    if n.is_multiple_of(2) {
        return None;
    }
    let half = n / 2;
    if half > conj_bound {
        return None;
    }
    let ls = w.letters();
    if (0..half).all(|i| ls[n - 1 - i] == -ls[i]) {
        Some(ConjugateFactor::new(ReducedWord::from_reduced(ls[..half].to_vec()), ls[half]))
    } else {
        None
    }
}

struct Ctx<'a> {
    table: &'a [(ConjugateFactor, ReducedWord)],
    conj_bound: usize,
    nodes: &'a AtomicU64,
    budget: u64,
    exceeded: &'a AtomicBool,
}

impl Ctx<'_> {
    fn feasible(&self, w: &ReducedWord, k: usize) -> bool {
        let l1 = w.abelian_l1() as usize;
        l1 <= k && (k - l1).is_multiple_of(2) && w.len() <= k * (2 * self.conj_bound + 1)
    }

    fn dfs(&self, w: &ReducedWord, k: usize, path: &mut Vec<ConjugateFactor>) -> bool {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            self.exceeded.store(true, Ordering::Relaxed);
            return false;
        }
        if k == 0 {
            return w.is_empty();
        }
        if !self.feasible(w, k) {
            return false;
        }
        if k == 1 {
            return match single_factor(w, self.conj_bound) {
                Some(f) => {
                    path.push(f);
                    true
                }
                None => false,
            };
        }
        for (f, f_inv) in self.table {
            let rest = f_inv.concat(w);
            path.push(f.clone());
            if self.dfs(&rest, k - 1, path) {
                return true;
            }
            path.pop();
            if self.exceeded.load(Ordering::Relaxed) {
                return false;
            }
        }
        false
    }
}

/// Looks for a decomposition of `w` into exactly `k` conjugate factors with
/// conjugators of length at most `limits.conj_bound`. First factors are
/// explored in parallel; the result is the witness with the smallest
/// first-factor index, so it does not depend on scheduling.
pub fn search_decomposition(w: &ReducedWord, k: usize, limits: &SearchLimits) -> SearchOutcome {
    let rank = w.max_generator();
    let nodes = AtomicU64::new(0);
    let exceeded = AtomicBool::new(false);
    let table = factor_table(rank.max(1), limits.conj_bound);
    let ctx = Ctx { table: &table, conj_bound: limits.conj_bound, nodes: &nodes, budget: limits.node_budget, exceeded: &exceeded };

    if k <= 1 || !ctx.feasible(w, k) {
        let mut path = Vec::new();
        return if ctx.dfs(w, k, &mut path) {
            SearchOutcome::Found(ConjugateDecomposition::new(path))
        } else {
            SearchOutcome::Exhausted
        };
    }
    let found = table.par_iter().find_map_first(|(f, f_inv)| {
        let rest = f_inv.concat(w);
        let mut path = vec![f.clone()];
        ctx.dfs(&rest, k - 1, &mut path).then_some(path)
    });
    match found {
        Some(path) => SearchOutcome::Found(ConjugateDecomposition::new(path)),
        None if exceeded.load(Ordering::Relaxed) => SearchOutcome::BudgetExceeded,
        None => SearchOutcome::Exhausted,
    }
}

/// Iterative deepening from the abelianization floor in steps of two (the
/// norm has the parity of the abelianization L1 norm).
pub fn biinv_norm(w: &ReducedWord, limits: &SearchLimits) -> NormBounds {
    let floor = abelianization_lower_bound(w);
    let mut lower = floor;
    let mut certificate = LowerCertificate::AbelianizationParity;
    let mut k = floor;
    while k as usize <= limits.len_bound {
        match search_decomposition(w, k as usize, limits) {
            SearchOutcome::Found(dec) => {
                return NormBounds {
                    lower: k,
                    unconditional: certificate == LowerCertificate::AbelianizationParity,
                    lower_certificate: certificate,
                    upper: Some(k),
                    witness: Some(dec),
                    exact: true,
                    budget_exceeded: false,
                };
            }
            SearchOutcome::Exhausted => {
                lower = k + 2;
                certificate = LowerCertificate::SearchExhaustion { conj_bound: limits.conj_bound };
            }
            SearchOutcome::BudgetExceeded => {
                return NormBounds {
                    lower,
                    lower_certificate: certificate,
                    upper: None,
                    witness: None,
                    exact: false,
                    unconditional: false,
                    budget_exceeded: true,
                };
            }
        }
        k += 2;
    }
    NormBounds {
        lower,
        lower_certificate: certificate,
        upper: None,
        witness: None,
        exact: false,
        unconditional: false,
        budget_exceeded: false,
    }
}
