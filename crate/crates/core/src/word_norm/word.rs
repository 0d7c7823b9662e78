use std::fmt;

use crate::error::{Error, Result};

/// A letter is a signed generator index: `+g` is the generator `g` (1-based),
/// `-g` its inverse.
pub type Letter = i8;

/// A freely reduced word over `a, b, c, …` and their inverses `A, B, C, …`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord(Vec<Letter>);

impl ReducedWord {
    pub fn empty() -> Self {
        ReducedWord(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        debug_assert!(l != 0);
        ReducedWord(vec![l])
    }

    /// Wraps letters that are already reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != -w[1]));
        ReducedWord(letters)
    }

    /// Stack-based free reduction.
    pub fn reduce(letters: &[Letter]) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        ReducedWord(out)
    }

    /// Generators and inverses of `F_rank` in search order `a, A, b, B, …`.
    pub fn alphabet(rank: usize) -> Vec<Letter> {
        (1..=rank as Letter).flat_map(|g| [g, -g]).collect()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn concat(&self, other: &ReducedWord) -> ReducedWord {
        let mut cancel = 0;
        let (x, y) = (&self.0, &other.0);
        while cancel < x.len() && cancel < y.len() && x[x.len() - 1 - cancel] == -y[cancel] {
            cancel += 1;
        }
        let mut out = Vec::with_capacity(x.len() + y.len() - 2 * cancel);
        out.extend_from_slice(&x[..x.len() - cancel]);
        out.extend_from_slice(&y[cancel..]);
        ReducedWord(out)
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn pow(&self, k: i64) -> ReducedWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = ReducedWord::empty();
        for _ in 0..k.unsigned_abs() {
            acc = acc.concat(&base);
        }
        acc
    }

    /// `u w u^{-1}`.
    pub fn conjugate_by(&self, u: &ReducedWord) -> ReducedWord {
        u.concat(self).concat(&u.inverse())
    }

    /// Exponent-sum vector in `Z^rank`.
    pub fn abelianization(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank.max(self.max_generator())];
        for &l in &self.0 {
            let i = l.unsigned_abs() as usize - 1;
            v[i] += l.signum() as i64;
        }
        v
    }

    pub fn abelian_l1(&self) -> u64 {
        self.abelianization(0).iter().map(|x| x.unsigned_abs()).sum()
    }
}

pub fn letter_char(l: Letter) -> char {
    let base = l.unsigned_abs() - 1;
    if l > 0 {
        (b'a' + base) as char
    } else {
        (b'A' + base) as char
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        self.0.iter().try_for_each(|&l| write!(f, "{}", letter_char(l)))
    }
}

/// Free reduction of a letter sequence over the alphabet of `F_rank`.
pub fn free_reduce(letters: &[Letter], rank: usize) -> Result<ReducedWord> {
    if let Some(&bad) = letters.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > rank) {
        let c = if bad == 0 || bad.unsigned_abs() > 26 { '?' } else { letter_char(bad) };
        return Err(Error::UnknownLetter(c));
    }
    Ok(ReducedWord::reduce(letters))
}

/// Parses word syntax: generators `a`–`z`, inverses `A`–`Z` or `x^-1`,
/// parentheses, commutators `[x,y] = x y x^-1 y^-1`, integer powers `^n`,
/// and `1` for the identity. Whitespace, `*` and `·` are ignored.
pub fn parse_word(text: &str) -> Result<ReducedWord> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace() && *c != '*' && *c != '·').collect();
    let mut p = Parser { chars: &chars, pos: 0 };
    let w = p.sequence()?;
    if p.pos != chars.len() {
        return Err(Error::WordSyntax(format!("unexpected `{}` at position {}", chars[p.pos], p.pos)));
    }
    Ok(w)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn sequence(&mut self) -> Result<ReducedWord> {
        let mut acc = ReducedWord::empty();
        while let Some(c) = self.peek() {
            if c == ')' || c == ']' || c == ',' {
                break;
            }
            let atom = self.atom()?;
            let atom = self.power(atom)?;
            acc = acc.concat(&atom);
        }
        Ok(acc)
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            other => Err(Error::WordSyntax(format!(
                "expected `{want}` at position {}, found {}",
                self.pos,
                other.map_or("end of input".to_string(), |c| format!("`{c}`"))
            ))),
        }
    }

    fn atom(&mut self) -> Result<ReducedWord> {
        let c = self.peek().expect("caller checked");
        self.pos += 1;
        match c {
            'a'..='z' => Ok(ReducedWord::letter((c as u8 - b'a' + 1) as Letter)),
            'A'..='Z' => Ok(ReducedWord::letter(-((c as u8 - b'A' + 1) as Letter))),
            '1' => Ok(ReducedWord::empty()),
            '(' => {
                let w = self.sequence()?;
                self.expect(')')?;
                Ok(w)
            }
            '[' => {
                let x = self.sequence()?;
                self.expect(',')?;
                let y = self.sequence()?;
                self.expect(']')?;
                Ok(x.concat(&y).concat(&x.inverse()).concat(&y.inverse()))
            }
            '^' => Err(Error::WordSyntax(format!("`^` without a base at position {}", self.pos - 1))),
            other => Err(Error::UnknownLetter(other)),
        }
    }

    fn power(&mut self, base: ReducedWord) -> Result<ReducedWord> {
        let mut w = base;
        while self.peek() == Some('^') {
            self.pos += 1;
            let negative = if self.peek() == Some('-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(Error::WordSyntax(format!("missing exponent at position {start}")));
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let n: i64 = digits
                .parse()
                .ok()
                .filter(|n| *n <= 10_000)
                .ok_or_else(|| Error::WordSyntax(format!("exponent `{digits}` out of range")))?;
            w = w.pow(if negative { -n } else { n });
        }
        Ok(w)
    }
}
