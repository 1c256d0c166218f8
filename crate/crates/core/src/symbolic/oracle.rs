use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::word::{Alphabet, Word};
use crate::rng::CounterStream;
use crate::{Error, Result};

/// Cylinder probabilities `μ([β])` of a shift-invariant measure.
pub trait FreqOracle: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    /// `μ([β])`; zero for words outside the support.
    fn measure(&self, beta: &[u8]) -> f64;

    /// Every word of length `len` with positive mass, with its mass.
    fn support(&self, len: usize) -> Vec<(Vec<u8>, f64)>;

    /// A word of length `len` read from a random position of the system.
    fn sample_word(&self, len: usize, rng: &mut CounterStream) -> Result<Word>;

    /// Exact periodic structure, enabling arithmetic fast paths.
    fn as_periodic(&self) -> Option<&PeriodicOracle> {
        None
    }
}

/// The shift-invariant measure on the orbit of the periodic point `u^∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOracle {
    point: Word,
    alphabet: Alphabet,
}

impl PeriodicOracle {
    /// The period is reduced to its primitive root, so `abab` and `ab`
    /// define the same oracle.
    pub fn new(period: &Word) -> Result<Self> {
        let q = period.primitive_period();
        let point = Word::new(&period.as_bytes()[..q])?;
        let alphabet = Alphabet::of(&[point.as_bytes()])?;
        Ok(Self { point, alphabet })
    }

    /// The primitive period `u`.
    pub fn point(&self) -> &Word {
        &self.point
    }

    pub fn period(&self) -> usize {
        self.point.len()
    }

    /// Symbol `j` (0-based) of `σ^c u^∞`.
    #[inline]
    pub fn symbol(&self, c: usize, j: u128) -> u8 {
        let p = self.period();
        self.point.as_bytes()[((c as u128 + j) % p as u128) as usize]
    }

    /// `(σ^c u^∞)[0..len]`.
    pub fn rotation_prefix(&self, c: usize, len: usize) -> Vec<u8> {
        (0..len as u128).map(|j| self.symbol(c, j)).collect()
    }

    /// Whether `σ^c u^∞` begins with `beta`.
    pub fn shift_starts_with(&self, c: usize, beta: &[u8]) -> bool {
        beta.iter().enumerate().all(|(j, &s)| self.symbol(c, j as u128) == s)
    }

    /// Shifts `0..p` grouped by their length-`len` prefix. For `len ≥ p` all
    /// classes are singletons because `u` is primitive.
    pub fn prefix_classes(&self, len: usize) -> Vec<Vec<usize>> {
        let p = self.period();
        if len >= p {
            return (0..p).map(|c| vec![c]).collect();
        }
        let mut classes: Vec<(Vec<u8>, Vec<usize>)> = Vec::new();
        for c in 0..p {
            let pre = self.rotation_prefix(c, len);
            match classes.iter_mut().find(|(w, _)| *w == pre) {
                Some((_, members)) => members.push(c),
                None => classes.push((pre, vec![c])),
            }
        }
        classes.into_iter().map(|(_, m)| m).collect()
    }
}

impl FreqOracle for PeriodicOracle {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn measure(&self, beta: &[u8]) -> f64 {
        let p = self.period();
        let hits = (0..p).filter(|&c| self.shift_starts_with(c, beta)).count();
        hits as f64 / p as f64
    }

    fn support(&self, len: usize) -> Vec<(Vec<u8>, f64)> {
        let p = self.period() as f64;
        self.prefix_classes(len)
            .into_iter()
            .map(|class| (self.rotation_prefix(class[0], len), class.len() as f64 / p))
            .collect()
    }

    fn sample_word(&self, len: usize, rng: &mut CounterStream) -> Result<Word> {
        let c = (rng.next_u64() % self.period() as u64) as usize;
        Word::new(self.rotation_prefix(c, len))
    }

    fn as_periodic(&self) -> Option<&PeriodicOracle> {
        Some(self)
    }
}

/// Frequencies read off a finite sample of length `L`:
/// `μ([β]) = #{occurrences of β in the sample} / L`.
#[derive(Clone, Debug)]
pub struct EmpiricalOracle {
    sample: Word,
    alphabet: Alphabet,
    /// `tables[ℓ−1]` maps each length-ℓ subword to its occurrence count.
    tables: Vec<HashMap<Vec<u8>, usize>>,
}

impl EmpiricalOracle {
    /// Occurrence tables are precomputed for `|β| ≤ max_len`; longer queries
    /// scan the sample.
    pub fn new(sample: Word, max_len: usize) -> Result<Self> {
        let alphabet = Alphabet::of(&[sample.as_bytes()])?;
        let bytes = sample.as_bytes();
        let tables = (1..=max_len.min(sample.len()))
            .into_par_iter()
            .map(|l| {
                let mut t: HashMap<Vec<u8>, usize> = HashMap::new();
                for w in bytes.windows(l) {
                    *t.entry(w.to_vec()).or_default() += 1;
                }
                t
            })
            .collect();
        Ok(Self {
            sample,
            alphabet,
            tables,
        })
    }

    /// Sample `B_level` of the Chacon substitution
    /// `B_0 = a`, `B_{n+1} = B_n B_n b B_n`.
    pub fn chacon(level: u32, max_len: usize) -> Result<Self> {
        Self::new(chacon_block(level)?, max_len)
    }

    pub fn sample(&self) -> &Word {
        &self.sample
    }

    pub fn horizon(&self) -> usize {
        self.sample.len()
    }
}

/// Largest accepted Chacon level (`|B_15| ≈ 2.2·10^7`).
pub const MAX_CHACON_LEVEL: u32 = 15;

/// The Chacon block `B_level`, of length `(3^{level+1} − 1)/2`.
pub fn chacon_block(level: u32) -> Result<Word> {
    if level > MAX_CHACON_LEVEL {
        return Err(Error::invalid(format!(
            "Chacon level {level} exceeds the maximum {MAX_CHACON_LEVEL}"
        )));
    }
    let mut b = vec![b'a'];
    for _ in 0..level {
        let mut next = Vec::with_capacity(3 * b.len() + 1);
        next.extend_from_slice(&b);
        next.extend_from_slice(&b);
        next.push(b'b');
        next.extend_from_slice(&b);
        b = next;
    }
    Word::new(b)
}

impl FreqOracle for EmpiricalOracle {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn measure(&self, beta: &[u8]) -> f64 {
        let l = self.horizon() as f64;
        match self.tables.get(beta.len().wrapping_sub(1)) {
            Some(t) => t.get(beta).copied().unwrap_or(0) as f64 / l,
            None => self.sample.occurrences(beta) as f64 / l,
        }
    }

    fn support(&self, len: usize) -> Vec<(Vec<u8>, f64)> {
        let l = self.horizon() as f64;
        let mut out: Vec<(Vec<u8>, f64)> = match self.tables.get(len.wrapping_sub(1)) {
            Some(t) => t.iter().map(|(w, c)| (w.clone(), *c as f64 / l)).collect(),
            None if len == 0 || len > self.horizon() => Vec::new(),
            None => {
                let mut t: HashMap<&[u8], usize> = HashMap::new();
                for w in self.sample.as_bytes().windows(len) {
                    *t.entry(w).or_default() += 1;
                }
                t.into_iter().map(|(w, c)| (w.to_vec(), c as f64 / l)).collect()
            }
        };
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn sample_word(&self, len: usize, rng: &mut CounterStream) -> Result<Word> {
        if len == 0 || len > self.horizon() {
            return Err(Error::InsufficientData {
                required: len,
                available: self.horizon(),
            });
        }
        let start = (rng.next_u64() % (self.horizon() - len + 1) as u64) as usize;
        Word::new(&self.sample.as_bytes()[start..start + len])
    }
}

/// JSON description of an oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Periodic { point: Word },
    Empirical {
        sample: Word,
        #[serde(default = "default_max_len")]
        max_len: usize,
    },
    Chacon {
        level: u32,
        #[serde(default = "default_max_len")]
        max_len: usize,
    },
}

fn default_max_len() -> usize {
    32
}

impl OracleSpec {
    pub fn build(&self) -> Result<Box<dyn FreqOracle>> {
        Ok(match self {
            Self::Periodic { point } => Box::new(PeriodicOracle::new(point)?),
            Self::Empirical { sample, max_len } => Box::new(EmpiricalOracle::new(sample.clone(), *max_len)?),
            Self::Chacon { level, max_len } => Box::new(EmpiricalOracle::chacon(*level, *max_len)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::streams;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn periodic_masses() {
        let o = PeriodicOracle::new(&w("aab")).unwrap();
        assert_eq!(o.measure(b"a"), 2.0 / 3.0);
        assert_eq!(o.measure(b"aa"), 1.0 / 3.0);
        assert_eq!(o.measure(b"ba"), 1.0 / 3.0);
        assert_eq!(o.measure(b"bb"), 0.0);
        assert_eq!(o.measure(b"aabaab"), 1.0 / 3.0);
        let o = PeriodicOracle::new(&w("abab")).unwrap();
        assert_eq!(o.period(), 2);
        assert_eq!(o.measure(b"a"), 0.5);
    }

    #[test]
    fn periodic_cylinders_sum_to_one() {
        for u in ["ab", "aab", "abaab", "a", "abcab"] {
            let o = PeriodicOracle::new(&w(u)).unwrap();
            for k in 1..=o.period() + 4 {
                let total: f64 = o.alphabet().words(k).iter().map(|b| o.measure(b)).sum();
                assert_eq!(total, 1.0, "u = {u}, k = {k}");
                let support: f64 = o.support(k).iter().map(|(_, m)| m).sum();
                assert!((support - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chacon_block_lengths_and_b_frequency() {
        for n in 0..8u32 {
            let b = chacon_block(n).unwrap();
            assert_eq!(b.len(), (3usize.pow(n + 1) - 1) / 2);
            let nb = b.occurrences(b"b");
            // (3^n − 1)/(3^{n+1} − 1) as a ratio of counts
            assert_eq!(2 * nb, 3usize.pow(n) - 1);
        }
        assert!(chacon_block(MAX_CHACON_LEVEL + 1).is_err());
    }

    #[test]
    fn empirical_masses_are_near_stochastic() {
        let o = EmpiricalOracle::chacon(7, 6).unwrap();
        let l = o.horizon() as f64;
        for k in 1..=9 {
            let total: f64 = o.support(k).iter().map(|(_, m)| m).sum();
            assert!(total <= 1.0 + 1e-12 && total >= 1.0 - k as f64 / l - 1e-12);
        }
        // table and scanning paths agree
        assert_eq!(o.measure(b"aabaa"), o.sample().occurrences(b"aabaa") as f64 / l);
        assert_eq!(o.measure(b"aabaaab"), o.sample().occurrences(b"aabaaab") as f64 / l);
        assert_eq!(o.measure(b"bb"), 0.0);
    }

    #[test]
    fn sampling_draws_from_the_system() {
        let mut rng = CounterStream::new(1, streams::WORDS, 1);
        let o = PeriodicOracle::new(&w("ab")).unwrap();
        for _ in 0..10 {
            let s = o.sample_word(7, &mut rng).unwrap();
            assert!(s.to_string() == "abababa" || s.to_string() == "bababab");
        }
        let e = EmpiricalOracle::chacon(4, 3).unwrap();
        let s = e.sample_word(20, &mut rng).unwrap();
        assert_eq!(e.sample().occurrences(s.as_bytes()) > 0, true);
        assert!(e.sample_word(10_000, &mut rng).is_err());
    }

    #[test]
    fn spec_json() {
        let spec: OracleSpec = serde_json::from_str(r#"{"kind":"periodic","point":"ab"}"#).unwrap();
        assert_eq!(spec.build().unwrap().measure(b"ab"), 0.5);
        let spec: OracleSpec = serde_json::from_str(r#"{"kind":"chacon","level":5}"#).unwrap();
        assert!(spec.build().unwrap().measure(b"a") > 0.6);
        assert!(serde_json::from_str::<OracleSpec>(r#"{"kind":"periodic","point":""}"#).is_err());
    }
}
