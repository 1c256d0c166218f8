use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A finite alphabet of printable ASCII symbols, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(Vec<u8>);

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = u8>) -> Result<Self> {
        let mut v: Vec<u8> = symbols.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        if let Some(c) = v.iter().find(|c| !c.is_ascii_graphic()) {
            return Err(Error::invalid(format!("symbol 0x{c:02x} is not printable ASCII")));
        }
        Ok(Self(v))
    }

    /// The symbols occurring in `words`.
    pub fn of(words: &[&[u8]]) -> Result<Self> {
        Self::new(words.iter().flat_map(|w| w.iter().copied()))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: u8) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    /// All words of length `k`, in lexicographic order.
    pub fn words(&self, k: usize) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|w| {
                    self.0.iter().map(move |&c| {
                        let mut v = w.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

/// A nonempty finite word. Symbols are printable ASCII bytes; the text form
/// is the symbols written out, e.g. `abba`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Arc<[u8]>);

impl Word {
    pub fn new(symbols: impl Into<Vec<u8>>) -> Result<Self> {
        let v: Vec<u8> = symbols.into();
        if v.is_empty() {
            return Err(Error::invalid("word must be nonempty"));
        }
        if let Some(c) = v.iter().find(|c| !c.is_ascii_graphic()) {
            return Err(Error::invalid(format!("symbol 0x{c:02x} is not printable ASCII")));
        }
        Ok(Self(v.into()))
    }

    /// Parses the text form. Surrounding whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if !t.is_ascii() {
            return Err(Error::Parse("word contains non-ASCII characters".into()));
        }
        Self::new(t.as_bytes()).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Like [`Word::parse`] but also requires every symbol to lie in `alphabet`.
    pub fn parse_in(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let w = Self::parse(text)?;
        if let Some(c) = w.iter().find(|c| !alphabet.contains(*c)) {
            return Err(Error::Parse(format!("symbol '{}' not in alphabet", c as char)));
        }
        Ok(w)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    /// Smallest `q` dividing `|w|` with `w = v^{|w|/q}`.
    pub fn primitive_period(&self) -> usize {
        let n = self.len();
        (1..=n)
            .find(|&q| n % q == 0 && (q..n).all(|i| self.0[i] == self.0[i - q]))
            .unwrap_or(n)
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_period() == self.len()
    }

    /// Number of (overlapping) occurrences of `beta` starting at positions
    /// `1..=|w|−|β|+1`.
    pub fn occurrences(&self, beta: &[u8]) -> usize {
        if beta.is_empty() || beta.len() > self.len() {
            return 0;
        }
        self.0.windows(beta.len()).filter(|w| *w == beta).count()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // symbols are ASCII by construction
        f.write_str(std::str::from_utf8(&self.0).unwrap_or_default())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            write!(f, "Word({self})")
        } else {
            let head = std::str::from_utf8(&self.0[..32]).unwrap_or_default();
            write!(f, "Word({head}…; len {})", self.len())
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(serde::de::Error::custom)
    }
}
