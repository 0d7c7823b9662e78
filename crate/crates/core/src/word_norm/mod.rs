//! Bi-invariant word norms on free groups.
//!
//! The norm of `w` is the least `k` such that `w` is a product of `k`
//! conjugates of generators or their inverses. Upper bounds come with an
//! explicit [`ConjugateDecomposition`]; lower bounds come either from the
//! abelianization (each factor maps to `±e_i`, so the norm is at least the L1
//! norm of the exponent-sum vector and has the same parity) or from
//! exhausting a bounded search, which is labeled with its conjugator bound.

mod search;
mod word;

use serde::{Deserialize, Serialize};

pub use search::{biinv_norm, search_decomposition, LowerCertificate, NormBounds, SearchLimits, SearchOutcome};
pub use word::{free_reduce, letter_char, parse_word, Letter, ReducedWord};

/// One factor `u s u^{-1}` with `s` a generator or inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConjugateFactor {
    pub conjugator: ReducedWord,
    pub letter: Letter,
}

impl ConjugateFactor {
    pub fn new(conjugator: ReducedWord, letter: Letter) -> Self {
        ConjugateFactor { conjugator, letter }
    }

    pub fn word(&self) -> ReducedWord {
        ReducedWord::letter(self.letter).conjugate_by(&self.conjugator)
    }
}

impl Serialize for ConjugateFactor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ConjugateFactor", 3)?;
        st.serialize_field("conjugator", &self.conjugator.to_string())?;
        st.serialize_field("letter", &letter_char(self.letter).to_string())?;
        st.serialize_field("factor", &self.word().to_string())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ConjugateFactor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            conjugator: String,
            letter: String,
        }
        let raw = Raw::deserialize(d)?;
        let conjugator = parse_word(&raw.conjugator).map_err(serde::de::Error::custom)?;
        let letter = parse_word(&raw.letter).map_err(serde::de::Error::custom)?;
        match letter.letters() {
            [l] => Ok(ConjugateFactor { conjugator, letter: *l }),
            _ => Err(serde::de::Error::custom("letter must be a single generator or inverse")),
        }
    }
}

/// A product of conjugates of generator letters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConjugateDecomposition {
    pub factors: Vec<ConjugateFactor>,
}

impl ConjugateDecomposition {
    pub fn new(factors: Vec<ConjugateFactor>) -> Self {
        ConjugateDecomposition { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The freely reduced product of all factors.
    pub fn product(&self) -> ReducedWord {
        self.factors.iter().fold(ReducedWord::empty(), |acc, f| acc.concat(&f.word()))
    }

    /// Conjugates every factor by `u`, giving a decomposition of `u w u^{-1}`.
    pub fn conjugated(&self, u: &ReducedWord) -> ConjugateDecomposition {
        ConjugateDecomposition {
            factors: self
                .factors
                .iter()
                .map(|f| ConjugateFactor::new(u.concat(&f.conjugator), f.letter))
                .collect(),
        }
    }

    pub fn then(&self, other: &ConjugateDecomposition) -> ConjugateDecomposition {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        ConjugateDecomposition { factors }
    }
}

/// True iff the reduced product of the factors equals `target`; a passing
/// witness certifies `norm(target) <= dec.len()`.
pub fn verify_witness(target: &ReducedWord, dec: &ConjugateDecomposition) -> bool {
    &dec.product() == target
}

/// Abelianization floor on the bi-invariant norm: the L1 norm of the
/// exponent-sum vector, raised to 2 for nontrivial words in the commutator
/// subgroup.
pub fn abelianization_lower_bound(w: &ReducedWord) -> u64 {
    let l1 = w.abelian_l1();
    if l1 == 0 && !w.is_empty() {
        2
    } else {
        l1
    }
}

/// `[a,b]^3 = aba^-1 · b^-1ab · a^-1b^-1a · ba^-1b^-1`.
pub fn cube_commutator_witness() -> ConjugateDecomposition {
    let (a, b) = (1 as Letter, 2 as Letter);
    ConjugateDecomposition::new(vec![
        ConjugateFactor::new(ReducedWord::letter(a), b),
        ConjugateFactor::new(ReducedWord::letter(-b), a),
        ConjugateFactor::new(ReducedWord::letter(-a), -b),
        ConjugateFactor::new(ReducedWord::letter(b), -a),
    ])
}

/// Outcome of the free-group normedness refutation at `z = [a,b]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct F2Refutation {
    /// Bi-invariant norm of `[a,b]`, exact from the parity floor and a witness.
    pub l_comm: u64,
    pub l_comm_bounds: NormBounds,
    /// Certified upper bound on the norm of `[a,b]^3`.
    pub l_cube_upper: u64,
    pub cube_witness: ConjugateDecomposition,
    pub cube_abelianization: Vec<i64>,
    /// `3 · l([a,b])`, the value normedness would force for `[a,b]^3`.
    pub threefold: u64,
    pub normed: bool,
}

/// Refutes `d(1, z^3) = 3 d(1, z)` at `z = [a,b]` in `F_2` using only the
/// witness-certified upper bound on `[a,b]^3` and the parity-certified value
/// of `[a,b]`; no search bound enters the conclusion.
pub fn refute_normedness_f2() -> F2Refutation {
    let comm = parse_word("[a,b]").expect("literal parses");
    let cube = comm.pow(3);
    let l_comm_bounds = biinv_norm(&comm, &SearchLimits::default());
    debug_assert!(l_comm_bounds.unconditional);
    let l_comm = l_comm_bounds.upper.expect("[a,b] has a 2-factor witness");
    let cube_witness = cube_commutator_witness();
    assert!(verify_witness(&cube, &cube_witness), "cube witness must reduce to [a,b]^3");
    let l_cube_upper = cube_witness.len() as u64;
    let threefold = 3 * l_comm_bounds.lower;
    F2Refutation {
        l_comm,
        l_comm_bounds,
        l_cube_upper,
        cube_abelianization: cube.abelianization(2),
        cube_witness,
        threefold,
        normed: l_cube_upper >= threefold,
    }
}
