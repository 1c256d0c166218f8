//! `(ε, N)`-covers: words `a_1, …, a_p` with `|a_1| > N`,
//! `|a_{i+1}| > 3|a_i|` and `μ(∪[a_i]) > 1 − ε`.

use serde::{Deserialize, Serialize};

use super::big;
use super::generic::{is_strongly_generic, periodic_prefix_generic, periodic_prefix_strongly_generic, StrongReport};
use super::oracle::{FreqOracle, PeriodicOracle};
use super::word::Word;
use crate::{Error, Result};

/// Longest cover word that will be materialized for a general check.
pub const MATERIALIZE_LIMIT: u128 = 1 << 26;

/// A cover word, either spelled out or as a prefix of a periodic point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverWord {
    Explicit { word: Word },
    /// `(σ^shift period^∞)[0..len]`.
    PeriodicPrefix {
        period: Word,
        shift: usize,
        #[serde(with = "big")]
        len: u128,
    },
}

impl CoverWord {
    pub fn explicit(word: Word) -> Self {
        Self::Explicit { word }
    }

    pub fn periodic(period: Word, shift: usize, len: u128) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("cover word length must be positive"));
        }
        Ok(Self::PeriodicPrefix { period, shift, len })
    }

    pub fn len(&self) -> u128 {
        match self {
            Self::Explicit { word } => word.len() as u128,
            Self::PeriodicPrefix { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbol `j` (0-based).
    pub fn symbol(&self, j: u128) -> u8 {
        match self {
            Self::Explicit { word } => word.as_bytes()[j as usize],
            Self::PeriodicPrefix { period, shift, .. } => {
                let q = period.len() as u128;
                period.as_bytes()[((*shift as u128 + j) % q) as usize]
            }
        }
    }

    /// Symbols `[0, len)`, bounded by [`MATERIALIZE_LIMIT`].
    pub fn materialize(&self) -> Result<Word> {
        match self {
            Self::Explicit { word } => Ok(word.clone()),
            Self::PeriodicPrefix { len, .. } => {
                if *len > MATERIALIZE_LIMIT {
                    return Err(Error::precondition(format!(
                        "cover word of length {len} is too long to materialize"
                    )));
                }
                Word::new((0..*len).map(|j| self.symbol(j)).collect::<Vec<_>>())
            }
        }
    }

    fn period_len(&self) -> Option<u128> {
        match self {
            Self::Explicit { .. } => None,
            Self::PeriodicPrefix { period, .. } => Some(period.len() as u128),
        }
    }

    /// Number of leading symbols that must be compared against a sequence of
    /// period `q` to decide agreement on the whole word (Fine–Wilf).
    fn agreement_span(&self, q: u128) -> u128 {
        match self.period_len() {
            Some(p) => self.len().min(p + q),
            None => self.len(),
        }
    }

    /// The `c` with this word a prefix of `σ^c u^∞`, when the word is long
    /// enough for `c` to be unique and the check to be finite.
    pub fn oracle_phase(&self, oracle: &PeriodicOracle) -> Option<usize> {
        let p = oracle.period() as u128;
        let q = self.period_len()?;
        if self.len() < p + q {
            return None;
        }
        (0..oracle.period()).find(|&c| (0..p + q).all(|j| oracle.symbol(c, j) == self.symbol(j)))
    }

    /// `μ([w])`.
    pub fn measure(&self, oracle: &dyn FreqOracle) -> Result<f64> {
        if let (Some(po), Some(_)) = (oracle.as_periodic(), self.period_len()) {
            let span = self.agreement_span(po.period() as u128);
            let hits = (0..po.period())
                .filter(|&c| (0..span).all(|j| po.symbol(c, j) == self.symbol(j)))
                .count();
            return Ok(hits as f64 / po.period() as f64);
        }
        Ok(oracle.measure(self.materialize()?.as_bytes()))
    }

    /// Whether `self` is a prefix of `other`, i.e. `[other] ⊆ [self]`.
    pub fn is_prefix_of(&self, other: &CoverWord) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let span = match (self.period_len(), other.period_len()) {
            (Some(p), Some(q)) => self.len().min(p + q),
            _ => self.len(),
        };
        (0..span).all(|j| self.symbol(j) == other.symbol(j))
    }

    /// Strong `(ε, M)`-genericity, by residue counting when the word is a
    /// prefix of the oracle's periodic point.
    pub fn strongly_generic(&self, oracle: &dyn FreqOracle, epsilon: f64, m: u128) -> Result<StrongReport> {
        if let Some(po) = oracle.as_periodic() {
            if let Some(c) = self.oracle_phase(po) {
                return periodic_prefix_strongly_generic(po, c, self.len(), epsilon, m);
            }
        }
        let m = usize::try_from(m).map_err(|_| Error::invalid("window length too large"))?;
        is_strongly_generic(&self.materialize()?, oracle, epsilon, m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub epsilon: f64,
    #[serde(with = "big")]
    pub n: u128,
    pub words: Vec<CoverWord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverViolation {
    Empty,
    /// `|a_1| ≤ N`.
    FirstTooShort {
        #[serde(with = "big")]
        len: u128,
        #[serde(with = "big")]
        n: u128,
    },
    /// `|a_{index}| ≤ 3|a_{index−1}|` (1-based).
    Growth {
        index: usize,
        #[serde(with = "big")]
        prev: u128,
        #[serde(with = "big")]
        len: u128,
    },
    /// `μ(∪[a_i]) ≤ 1 − ε`.
    Mass { mass: f64, required: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub valid: bool,
    pub mass: f64,
    pub violations: Vec<CoverViolation>,
}

/// `μ(∪[a_i])`: a word is skipped when another listed word is a prefix of
/// it, since its cylinder is then already counted; remaining cylinders are
/// disjoint.
pub fn union_mass(words: &[CoverWord], oracle: &dyn FreqOracle) -> Result<f64> {
    let mut mass = 0.0;
    for (i, w) in words.iter().enumerate() {
        let covered = words.iter().enumerate().any(|(j, v)| {
            j != i && v.is_prefix_of(w) && (v.len() < w.len() || j < i)
        });
        if !covered {
            mass += w.measure(oracle)?;
        }
    }
    Ok(mass)
}

pub fn is_cover(words: &[CoverWord], oracle: &dyn FreqOracle, epsilon: f64, n: u128) -> Result<CoverCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let mut violations = Vec::new();
    if words.is_empty() {
        violations.push(CoverViolation::Empty);
    }
    if let Some(first) = words.first() {
        if first.len() <= n {
            violations.push(CoverViolation::FirstTooShort { len: first.len(), n });
        }
    }
    for (i, pair) in words.windows(2).enumerate() {
        let (prev, len) = (pair[0].len(), pair[1].len());
        if len <= prev.saturating_mul(3) {
            violations.push(CoverViolation::Growth { index: i + 2, prev, len });
        }
    }
    let mass = union_mass(words, oracle)?;
    let required = 1.0 - epsilon;
    if mass <= required {
        violations.push(CoverViolation::Mass { mass, required });
    }
    Ok(CoverCheck {
        valid: violations.is_empty(),
        mass,
        violations,
    })
}

impl CoverSpec {
    pub fn check(&self, oracle: &dyn FreqOracle) -> Result<CoverCheck> {
        is_cover(&self.words, oracle, self.epsilon, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub kept: CoverSpec,
    /// 1-based indices of removed words.
    pub removed: Vec<usize>,
    pub mass_before: f64,
    pub residual_mass: f64,
    /// `1 − residual_mass`: the pruned family is an `(ε″, N)`-cover for every
    /// `ε″` above this value; 1 when nothing survives.
    pub certified_epsilon: f64,
    /// Whether the survivors still form a `(4ε, N)`-cover.
    pub meets_4eps: bool,
    pub vacuous: bool,
}

/// Removes the words that are not strongly `(ε, M)`-generic.
pub fn prune_cover(cover: &CoverSpec, oracle: &dyn FreqOracle, m: u128) -> Result<PruneReport> {
    let check = cover.check(oracle)?;
    if !check.valid {
        return Err(Error::precondition(format!(
            "input is not a cover: {:?}",
            check.violations
        )));
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, w) in cover.words.iter().enumerate() {
        if w.strongly_generic(oracle, cover.epsilon, m)?.strongly_generic {
            kept.push(w.clone());
        } else {
            removed.push(i + 1);
        }
    }
    let residual_mass = union_mass(&kept, oracle)?;
    let vacuous = kept.is_empty();
    Ok(PruneReport {
        kept: CoverSpec {
            epsilon: cover.epsilon,
            n: cover.n,
            words: kept,
        },
        removed,
        mass_before: check.mass,
        residual_mass,
        certified_epsilon: if vacuous { 1.0 } else { (1.0 - residual_mass).max(0.0) },
        meets_4eps: residual_mass > 1.0 - 4.0 * cover.epsilon,
        vacuous,
    })
}

/// Covers by prefixes of the `p` shifts of `u^∞`: lengths
/// `L_1 = max(N+1, p)`, `L_{i+1} = 3L_i + 1`, one word per shift. Each
/// further cover starts above the last length of the previous one.
pub fn periodic_tall_cover(u: &Word, epsilon: f64, n: u128, depth: usize) -> Result<Vec<CoverSpec>> {
    if !u.is_primitive() {
        return Err(Error::precondition(format!(
            "'{u}' is not primitive: its shifts have colliding prefixes"
        )));
    }
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let p = u.len();
    let mut covers = Vec::with_capacity(depth);
    let mut floor = n;
    for _ in 0..depth {
        let mut len = (floor + 1).max(p as u128);
        let mut words = Vec::with_capacity(p);
        for shift in 0..p {
            if shift > 0 {
                len = len
                    .checked_mul(3)
                    .and_then(|v| v.checked_add(1))
                    .ok_or_else(|| Error::invalid("cover lengths overflow u128"))?;
            }
            words.push(CoverWord::periodic(u.clone(), shift, len)?);
        }
        covers.push(CoverSpec {
            epsilon,
            n: floor,
            words,
        });
        floor = len;
    }
    Ok(covers)
}

/// A window length `M` for which every length-`M` window of `u^∞` is
/// ε-generic. Found by doubling then bisection; the result is always
/// verified, and is the least such `M` whenever validity is monotone.
pub fn periodic_window_length(oracle: &PeriodicOracle, epsilon: f64) -> Result<u128> {
    let all_phases = |m: u128| -> Result<bool> {
        for c in 0..oracle.period() {
            if !periodic_prefix_generic(oracle, c, m, epsilon)?.generic {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if all_phases(1)? {
        return Ok(1);
    }
    let mut lo = 1u128;
    let mut hi = 2u128;
    while !all_phases(hi)? {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .filter(|h| *h <= 1 << 100)
            .ok_or_else(|| Error::precondition("no generic window length found"))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if all_phases(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::oracle::EmpiricalOracle;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn ab() -> PeriodicOracle {
        PeriodicOracle::new(&w("ab")).unwrap()
    }

    fn pw(period: &str, shift: usize, len: u128) -> CoverWord {
        CoverWord::periodic(w(period), shift, len).unwrap()
    }

    #[test]
    fn ab_cover_of_two_shifts() {
        let words = [pw("ab", 0, 4), pw("ab", 1, 16)];
        assert_eq!(words[1].materialize().unwrap().to_string(), "babababababababa");
        for eps in [1e-6, 0.1, 0.9] {
            let c = is_cover(&words, &ab(), eps, 3).unwrap();
            assert!(c.valid, "{c:?}");
            assert_eq!(c.mass, 1.0);
        }
    }

    #[test]
    fn growth_must_be_strict() {
        let words = [pw("ab", 0, 4), pw("ab", 1, 12)];
        let c = is_cover(&words, &ab(), 0.1, 3).unwrap();
        assert!(!c.valid);
        assert_eq!(c.violations, vec![CoverViolation::Growth { index: 2, prev: 4, len: 12 }]);
        let c = is_cover(&words[..1], &ab(), 0.1, 4).unwrap();
        assert!(c.violations.contains(&CoverViolation::FirstTooShort { len: 4, n: 4 }));
        assert!(is_cover(&[], &ab(), 0.1, 0).unwrap().violations.contains(&CoverViolation::Empty));
    }

    #[test]
    fn mass_threshold_is_strict() {
        let o = PeriodicOracle::new(&w("aabab")).unwrap();
        let a = CoverWord::explicit(w("aabab"));
        let b = CoverWord::explicit(pw("aabab", 1, 16).materialize().unwrap());
        assert!((a.measure(&o).unwrap() - 0.2).abs() < 1e-15);
        // two disjoint cylinders of mass 0.2 each
        let c = is_cover(&[a, b], &o, 0.5, 2).unwrap();
        assert!((c.mass - 0.4).abs() < 1e-15);
        assert!(!c.valid);
        assert!(matches!(c.violations[..], [CoverViolation::Mass { .. }]));
    }

    #[test]
    fn nested_cylinders_counted_once() {
        let words = [pw("ab", 0, 4), pw("ab", 0, 13), pw("ab", 1, 40)];
        assert_eq!(union_mass(&words, &ab()).unwrap(), 1.0);
        let dup = [CoverWord::explicit(w("ab")), CoverWord::explicit(w("ab"))];
        assert_eq!(union_mass(&dup, &ab()).unwrap(), 0.5);
    }

    #[test]
    fn measure_and_prefix_for_periodic_words() {
        let o = PeriodicOracle::new(&w("aab")).unwrap();
        let a = pw("aab", 1, 1_000_000_000_000);
        assert_eq!(a.measure(&o).unwrap(), 1.0 / 3.0);
        assert_eq!(a.oracle_phase(&o), Some(1));
        // same sequence written with a rotated period
        let b = pw("aba", 0, 1_000_000_000_000_000);
        assert!(a.is_prefix_of(&b));
        assert!(!b.is_prefix_of(&a));
        assert_eq!(b.oracle_phase(&o), Some(1));
        assert!(!pw("aab", 0, 50).is_prefix_of(&b));
        let short = CoverWord::explicit(w("ab"));
        assert!(short.is_prefix_of(&b));
        assert_eq!(short.measure(&o).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn tall_cover_lengths() {
        let c = periodic_tall_cover(&w("ab"), 0.1, 3, 1).unwrap();
        let lens: Vec<u128> = c[0].words.iter().map(|w| w.len()).collect();
        assert_eq!(lens, vec![4, 13]);
        let c = periodic_tall_cover(&w("aab"), 0.1, 5, 2).unwrap();
        let lens: Vec<u128> = c[0].words.iter().map(|w| w.len()).collect();
        assert_eq!(lens, vec![6, 19, 58]);
        assert_eq!(c[1].n, 58);
        let o = PeriodicOracle::new(&w("aab")).unwrap();
        for cover in &c {
            let check = cover.check(&o).unwrap();
            assert!(check.valid);
            assert!((check.mass - 1.0).abs() < 1e-15);
            for word in &cover.words {
                assert!((word.measure(&o).unwrap() - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let c = periodic_tall_cover(&w("a"), 0.1, 7, 1).unwrap();
        assert_eq!(c[0].words.len(), 1);
        assert_eq!(c[0].words[0].len(), 8);
        assert!(periodic_tall_cover(&w("abab"), 0.1, 3, 1).is_err());
    }

    #[test]
    fn window_length_is_valid_and_tight() {
        let o = ab();
        for k in 1..=8 {
            let eps = 0.5f64.powi(k);
            let m = periodic_window_length(&o, eps).unwrap();
            for c in 0..2 {
                assert!(periodic_prefix_generic(&o, c, m, eps).unwrap().generic);
            }
            let below = (0..2).all(|c| periodic_prefix_generic(&o, c, m - 1, eps).map(|r| r.generic).unwrap_or(false));
            assert!(m == 1 || !below);
        }
    }

    #[test]
    fn prune_keeps_generic_words() {
        let o = ab();
        let cover = &periodic_tall_cover(&w("ab"), 0.1, 2000, 1).unwrap()[0];
        let m = periodic_window_length(&o, 0.1).unwrap();
        let r = prune_cover(cover, &o, m).unwrap();
        assert_eq!(&r.kept, cover);
        assert!(r.removed.is_empty());
        assert_eq!(r.residual_mass, 1.0);
        assert_eq!(r.certified_epsilon, 0.0);
        assert!(r.meets_4eps);
    }

    #[test]
    fn prune_drops_corrupted_word() {
        // a corrupted word lies outside the periodic support, so its
        // cylinder has mass zero and the other shifts must carry > 1 − ε
        let o = PeriodicOracle::new(&w("abc")).unwrap();
        let mut corrupted = vec![b'a'; 14_000];
        corrupted.extend(o.rotation_prefix(0, 6000));
        let words = vec![
            CoverWord::explicit(Word::new(o.rotation_prefix(0, 2001)).unwrap()),
            CoverWord::explicit(Word::new(o.rotation_prefix(1, 6004)).unwrap()),
            CoverWord::explicit(Word::new(corrupted).unwrap()),
        ];
        let cover = CoverSpec { epsilon: 0.4, n: 2000, words };
        assert!(cover.check(&o).unwrap().valid);
        let r = prune_cover(&cover, &o, 100).unwrap();
        assert_eq!(r.removed, vec![3]);
        assert_eq!(r.mass_before, r.residual_mass);
        assert!((r.certified_epsilon - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.meets_4eps && !r.vacuous);
    }

    #[test]
    fn prune_to_nothing_is_vacuous() {
        let o = ab();
        let words = vec![CoverWord::explicit(Word::new(b"ab".repeat(5)).unwrap())];
        let cover = CoverSpec { epsilon: 0.6, n: 3, words };
        let r = prune_cover(&cover, &o, 10).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.certified_epsilon, 1.0);
        let bad = CoverSpec { epsilon: 0.1, n: 100, words: cover.words.clone() };
        assert!(prune_cover(&bad, &o, 10).is_err());
    }

    #[test]
    fn empirical_oracle_covers() {
        let o = EmpiricalOracle::chacon(6, 8).unwrap();
        let word = CoverWord::explicit(w("a"));
        assert!(word.measure(&o).unwrap() > 0.6);
        assert!(pw("ab", 0, MATERIALIZE_LIMIT + 1).measure(&o).is_err());
    }

    #[test]
    fn cover_json() {
        let json = r#"{"epsilon":0.1,"n":3,"words":[
            {"kind":"periodic_prefix","period":"ab","shift":0,"len":4},
            {"kind":"explicit","word":"babababababab"}]}"#;
        let c: CoverSpec = serde_json::from_str(json).unwrap();
        assert!(c.check(&ab()).unwrap().valid);
        let big = CoverSpec { epsilon: 0.5, n: 1, words: vec![pw("ab", 0, 1u128 << 90)] };
        let back: CoverSpec = serde_json::from_str(&serde_json::to_string(&big).unwrap()).unwrap();
        assert_eq!(back, big);
    }
}
