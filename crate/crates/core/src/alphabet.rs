//! Concurrent alphabets: a totally ordered set of letters together with a
//! symmetric, irreflexive independence relation.
//!
//! Letters are interned as small indices. The index order is the
//! lexicographic order used by normal forms, and it is the declaration order
//! of the symbols in the input.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of letters; letter sets are stored as `u64` masks.
pub const MAX_LETTERS: usize = 64;

/// A letter of a [`ConcurrentAlphabet`], ordered by declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u8);

impl Letter {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn bit(self) -> u64 {
        1u64 << self.0
    }
}

/// A finite word. The empty vector is the empty word.
pub type Word = Vec<Letter>;

/// Set of letters as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LetterSet(pub u64);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    #[inline]
    pub fn contains(self, a: Letter) -> bool {
        self.0 & a.bit() != 0
    }

    #[inline]
    pub fn with(self, a: Letter) -> LetterSet {
        LetterSet(self.0 | a.bit())
    }

    #[inline]
    pub fn union(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 | other.0)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn of(word: &[Letter]) -> LetterSet {
        word.iter().fold(LetterSet::EMPTY, |s, &a| s.with(a))
    }

    pub fn iter(self) -> impl Iterator<Item = Letter> {
        (0..64u8).filter(move |i| self.0 & (1u64 << i) != 0).map(Letter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcurrentAlphabet {
    symbols: Vec<String>,
    index: HashMap<String, Letter>,
    /// `independent[a]` has bit `b` set iff `(a, b)` is in the independence relation.
    independent: Vec<u64>,
    single_char: bool,
}

impl ConcurrentAlphabet {
    /// Builds an alphabet from ordered symbols and unordered independent pairs.
    ///
    /// Pairs are symmetrized; listing both orientations is allowed.
    pub fn new<S, P>(symbols: &[S], independence: &[(P, P)]) -> Result<Self>
    where
        S: AsRef<str>,
        P: AsRef<str>,
    {
        if symbols.len() > MAX_LETTERS {
            return Err(Error::Invalid(format!(
                "at most {MAX_LETTERS} letters are supported, got {}",
                symbols.len()
            )));
        }
        let mut index = HashMap::new();
        let mut names = Vec::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            let s = s.as_ref();
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("symbol {s:?} is empty or contains whitespace")));
            }
            if index.insert(s.to_string(), Letter(i as u8)).is_some() {
                return Err(Error::Invalid(format!("duplicate symbol `{s}`")));
            }
            names.push(s.to_string());
        }
        let mut independent = vec![0u64; names.len()];
        for (x, y) in independence {
            let (x, y) = (x.as_ref(), y.as_ref());
            let a = *index.get(x).ok_or_else(|| Error::UnknownSymbol(x.to_string()))?;
            let b = *index.get(y).ok_or_else(|| Error::UnknownSymbol(y.to_string()))?;
            if a == b {
                return Err(Error::Invalid(format!(
                    "independence must be irreflexive, found pair ({x}, {x})"
                )));
            }
            independent[a.index()] |= b.bit();
            independent[b.index()] |= a.bit();
        }
        let single_char = names.iter().all(|s| s.chars().count() == 1);
        Ok(ConcurrentAlphabet {
            symbols: names,
            index,
            independent,
            single_char,
        })
    }

    /// Alphabet `a, b, c, ...` (first `k` lowercase letters) from index pairs.
    pub fn from_indices(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if k > 26 {
            return Err(Error::Invalid("from_indices supports at most 26 letters".into()));
        }
        let symbols: Vec<String> = (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let mut named = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= k || j >= k {
                return Err(Error::UnknownSymbol(format!("#{}", i.max(j))));
            }
            named.push((symbols[i].clone(), symbols[j].clone()));
        }
        Self::new(&symbols, &named)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.symbols.len() as u8).map(Letter)
    }

    pub fn symbol(&self, a: Letter) -> &str {
        &self.symbols[a.index()]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn letter(&self, symbol: &str) -> Result<Letter> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    #[inline]
    pub fn independent(&self, a: Letter, b: Letter) -> bool {
        self.independent[a.index()] & b.bit() != 0
    }

    #[inline]
    pub fn dependent(&self, a: Letter, b: Letter) -> bool {
        !self.independent(a, b)
    }

    /// Letters independent of `a`.
    #[inline]
    pub fn independent_set(&self, a: Letter) -> LetterSet {
        LetterSet(self.independent[a.index()])
    }

    /// Checked variant of [`Self::independent`] on symbol names.
    pub fn is_independent(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.independent(self.letter(a)?, self.letter(b)?))
    }

    /// Independent pairs `(a, b)` with `a < b`.
    pub fn independent_pairs(&self) -> Vec<(Letter, Letter)> {
        let mut out = Vec::new();
        for a in self.letters() {
            for b in self.letters().filter(|&b| b > a) {
                if self.independent(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Size of the largest pairwise independent set of letters.
    ///
    /// Exhaustive over all subsets; alphabets are small.
    pub fn width(&self) -> Result<usize> {
        let k = self.len();
        if k == 0 {
            return Err(Error::Invalid("width of an empty alphabet".into()));
        }
        if k > 24 {
            return Err(Error::Budget {
                what: "width subset search",
                needed: 1u128 << k,
                budget: 1 << 24,
            });
        }
        let mut best = 1;
        for mask in 1u64..(1u64 << k) {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let pairwise = LetterSet(mask)
                .iter()
                .all(|a| mask & !a.bit() & !self.independent[a.index()] == 0);
            if pairwise {
                best = size;
            }
        }
        Ok(best)
    }

    /// Parses a word. Symbols are separated by whitespace; when every symbol
    /// is a single character the unseparated form `abcc` is accepted too.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        if text.contains(char::is_whitespace) {
            return text.split_whitespace().map(|s| self.letter(s)).collect();
        }
        if let Ok(a) = self.letter(text) {
            return Ok(vec![a]);
        }
        if self.single_char {
            return text.chars().map(|c| self.letter(c.encode_utf8(&mut [0; 4]))).collect();
        }
        Err(Error::UnknownSymbol(text.to_string()))
    }

    /// Renders a word; the inverse of [`Self::parse_word`].
    pub fn format_word(&self, word: &[Letter]) -> String {
        let sep = if self.single_char { "" } else { " " };
        word.iter().map(|&a| self.symbol(a)).collect::<Vec<_>>().join(sep)
    }

    pub fn display<'a>(&'a self, word: &'a [Letter]) -> impl fmt::Display + 'a {
        DisplayWord { alphabet: self, word }
    }
}

struct DisplayWord<'a> {
    alphabet: &'a ConcurrentAlphabet,
    word: &'a [Letter],
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return f.write_str("λ");
        }
        f.write_str(&self.alphabet.format_word(self.word))
    }
}
