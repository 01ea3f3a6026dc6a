//! Letters, two-letter alphabets and finite words.
//!
//! Positions are 0-indexed inside the library. Anything printed for a user
//! (CSV rows, CLI listings) is 1-indexed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol from the positive integers, stored in one byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Letter(u8);

impl Letter {
    pub const ONE: Letter = Letter(1);
    pub const TWO: Letter = Letter(2);

    pub fn new(value: u32) -> Result<Self> {
        match u8::try_from(value) {
            Ok(v) if v >= 1 => Ok(Letter(v)),
            _ => Err(Error::InvalidLetter(value)),
        }
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    /// Block length this letter denotes when read as a length.
    #[inline]
    pub fn block_len(self) -> usize {
        self.0 as usize
    }

    /// Unchecked construction for values already known to be in range.
    #[inline]
    pub(crate) fn from_raw(v: u8) -> Self {
        debug_assert!(v >= 1);
        Letter(v)
    }
}

impl TryFrom<u32> for Letter {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        Letter::new(value)
    }
}

impl From<Letter> for u32 {
    fn from(l: Letter) -> u32 {
        l.0 as u32
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered two-letter alphabet `{lo, hi}` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    lo: Letter,
    hi: Letter,
}

impl Alphabet {
    pub const ONE_TWO: Alphabet = Alphabet {
        lo: Letter::ONE,
        hi: Letter::TWO,
    };

    pub fn new(lo: Letter, hi: Letter) -> Result<Self> {
        if lo < hi {
            Ok(Alphabet { lo, hi })
        } else {
            Err(Error::InvalidAlphabet {
                lo: lo.value().into(),
                hi: hi.value().into(),
            })
        }
    }

    /// Builds `{min(a,b), max(a,b)}`; fails if the letters coincide.
    pub fn from_pair(a: Letter, b: Letter) -> Result<Self> {
        Alphabet::new(a.min(b), a.max(b))
    }

    pub fn from_values(lo: u32, hi: u32) -> Result<Self> {
        Alphabet::new(Letter::new(lo)?, Letter::new(hi)?)
            .map_err(|_| Error::InvalidAlphabet { lo, hi })
    }

    #[inline]
    pub fn lo(self) -> Letter {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> Letter {
        self.hi
    }

    #[inline]
    pub fn contains(self, l: Letter) -> bool {
        l == self.lo || l == self.hi
    }

    /// The other letter of the alphabet. `l` must belong to it.
    #[inline]
    pub fn flip(self, l: Letter) -> Letter {
        if l == self.lo {
            self.hi
        } else {
            self.lo
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

/// A finite word over the positive integers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn from_values<I>(values: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<u32>,
    {
        values
            .into_iter()
            .map(|v| Letter::new(v.into()))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Parses a contiguous digit string such as `"122"`.
    pub fn from_digits(s: &str) -> Result<Self> {
        s.char_indices()
            .map(|(i, c)| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok(Letter::from_raw(d as u8)),
                Some(_) => Err(Error::InvalidLetter(0)),
                None => Err(Error::Syntax {
                    position: i,
                    message: format!("expected a digit 1-9, found {c:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn values(&self) -> Vec<u8> {
        self.0.iter().map(|l| l.value()).collect()
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    /// `|w|_a`.
    pub fn count(&self, a: Letter) -> usize {
        self.0.iter().filter(|&&l| l == a).count()
    }

    /// Sum of the letters read as integers.
    pub fn weight(&self) -> u64 {
        self.0.iter().map(|l| l.value() as u64).sum()
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    /// The alphabet spanned by the word, when it has exactly two letters.
    pub fn alphabet(&self) -> Option<Alphabet> {
        let mut it = self.0.iter().copied();
        let first = it.next()?;
        let mut other = None;
        for l in it {
            if l == first {
                continue;
            }
            match other {
                None => other = Some(l),
                Some(o) if o == l => {}
                Some(_) => return None,
            }
        }
        Alphabet::from_pair(first, other?).ok()
    }

    /// Digit string when every letter is a single digit, comma-separated
    /// values otherwise.
    pub fn to_display_string(&self) -> String {
        if self.0.iter().all(|l| l.value() <= 9) {
            self.0
                .iter()
                .map(|l| char::from(b'0' + l.value()))
                .collect()
        } else {
            self.0
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
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
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_display_string())
    }
}

// Serialized as its display text.
impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_display_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::from_digits(&s).map_err(serde::de::Error::custom)
    }
}
