//! Letters over an alphabet with formal inverses, words, and free reduction.
//!
//! A letter is a base symbol index together with a sign. Words are plain
//! sequences of letters; two words represent the same element of the free
//! group exactly when their reduced forms coincide.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol of `A` or its formal inverse in `A⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub base: u16,
    pub inverse: bool,
}

impl Letter {
    pub const fn pos(base: u16) -> Self {
        Letter { base, inverse: false }
    }

    pub const fn neg(base: u16) -> Self {
        Letter { base, inverse: true }
    }

    #[inline]
    pub fn inv(self) -> Self {
        Letter { base: self.base, inverse: !self.inverse }
    }

    /// +1 for letters of `A`, -1 for their inverses.
    #[inline]
    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    /// Dense column index in `0..2|A|`: `2·base` for `a`, `2·base + 1` for `a⁻¹`.
    #[inline]
    pub fn column(self) -> usize {
        2 * self.base as usize + self.inverse as usize
    }

    pub fn from_column(col: usize) -> Self {
        Letter { base: (col / 2) as u16, inverse: col % 2 == 1 }
    }
}

/// Names of the base symbols; the text form of a word is resolved against it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Input("alphabet must contain at least one symbol".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) || n.contains('^') {
                return Err(Error::Input(format!("invalid symbol name {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(Error::Input(format!("duplicate symbol name {n:?}")));
            }
        }
        Ok(Alphabet { names })
    }

    /// `a, b, c, …` for up to 26 symbols, `x0, x1, …` beyond.
    pub fn standard(size: usize) -> Self {
        assert!(size >= 1, "alphabet must contain at least one symbol");
        let names = if size <= 26 {
            (0..size).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
        } else {
            (0..size).map(|i| format!("x{i}")).collect()
        };
        Alphabet { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, base: u16) -> &str {
        &self.names[base as usize]
    }

    pub fn index_of(&self, name: &str) -> Option<u16> {
        self.names.iter().position(|n| n == name).map(|i| i as u16)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.names.len() as u16).flat_map(|b| [Letter::pos(b), Letter::neg(b)])
    }

    pub fn parse_letter(&self, token: &str) -> Result<Letter> {
        let (name, inverse) = match token.strip_suffix("^-1") {
            Some(stem) => (stem, true),
            None => (token, false),
        };
        let base = self
            .index_of(name)
            .ok_or_else(|| Error::UnknownLetter(token.to_string()))?;
        Ok(Letter { base, inverse })
    }

    /// Parses whitespace separated letters, e.g. `a b^-1 a`. The empty string
    /// (or `1`, or `ε`) is the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "1" || trimmed == "ε" {
            return Ok(Word::empty());
        }
        trimmed
            .split_whitespace()
            .map(|t| self.parse_letter(t))
            .collect::<Result<Vec<_>>>()
            .map(Word::from)
    }

    pub fn format_letter(&self, l: Letter) -> String {
        if l.inverse {
            format!("{}^-1", self.name(l.base))
        } else {
            self.name(l.base).to_string()
        }
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.letters().iter().map(|&l| self.format_letter(l)).collect::<Vec<_>>().join(" ")
    }
}

/// A finite sequence of letters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
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

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    /// Appends `l`, cancelling against the last letter when they are inverse.
    pub fn push_reduced(&mut self, l: Letter) {
        if self.0.last() == Some(&l.inv()) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inv())
    }

    /// The freely reduced form. Single left-to-right pass with a stack.
    pub fn reduce(&self) -> Word {
        let mut out = Word(Vec::with_capacity(self.0.len()));
        for &l in &self.0 {
            out.push_reduced(l);
        }
        out
    }

    pub fn invert(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Reduced form of the concatenation.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.reduce();
        for &l in &other.0 {
            out.push_reduced(l);
        }
        out
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut out = Word::empty();
        for _ in 0..n.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// Equality as elements of the free group.
    pub fn same_element(&self, other: &Word) -> bool {
        self.reduce() == other.reduce()
    }

    /// Signed number of occurrences of each base symbol.
    pub fn exponent_sums(&self, alphabet_len: usize) -> Vec<i64> {
        let mut sums = vec![0; alphabet_len];
        for l in &self.0 {
            sums[l.base as usize] += l.sign();
        }
        sums
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    /// Uses the standard alphabet `a, b, c, …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let names = Alphabet::standard(
            self.0.iter().map(|l| l.base as usize + 1).max().unwrap_or(1).max(1),
        );
        write!(f, "{}", names.format_word(self))
    }
}
