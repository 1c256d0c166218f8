//! ε-genericity of finite words.
//!
//! A word `α` is ε-generic for `μ` when every `β` with `|β| ≤ ⌊1/ε⌋` occurs
//! in `α` with frequency `occ(β)/|α|` strictly within `ε` of `μ([β])`.
//! Occurrences overlap and start at positions `1..=|α|−|β|+1`, so a `β`
//! longer than `α` has frequency zero.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::big;
use super::oracle::{FreqOracle, PeriodicOracle};
use super::word::Word;
use crate::{Error, Result};

/// Longest `|β|` accepted by the checks (`ε ≥ 2^{-24}`).
pub const MAX_CHECKED_LEN: usize = 1 << 24;

/// The worst frequency mismatch found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub beta: String,
    pub measure: f64,
    pub frequency: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericReport {
    pub epsilon: f64,
    /// `⌊1/ε⌋`.
    pub max_len: usize,
    pub generic: bool,
    pub worst: Option<Offender>,
}

/// `⌊1/ε⌋`, requiring `0 < ε ≤ 1`.
pub fn max_checked_len(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let l = (1.0 / epsilon).floor();
    if l > MAX_CHECKED_LEN as f64 {
        return Err(Error::invalid(format!("epsilon {epsilon} is below the supported 2^-24")));
    }
    Ok(l as usize)
}

/// Candidate offender: larger gap wins; ties go to the rarer word, then to
/// the lexicographically smaller one.
#[derive(Clone)]
struct Candidate<K> {
    key: K,
    measure: f64,
    frequency: f64,
    gap: f64,
}

impl<K: Ord> Candidate<K> {
    fn new(key: K, measure: f64, frequency: f64) -> Self {
        Self {
            key,
            measure,
            frequency,
            gap: (measure - frequency).abs(),
        }
    }

    fn beats(&self, other: &Self) -> bool {
        (self.gap, -self.frequency) > (other.gap, -other.frequency)
            || (self.gap == other.gap && self.frequency == other.frequency && self.key < other.key)
    }
}

fn keep_best<K: Ord>(best: &mut Option<Candidate<K>>, c: Candidate<K>) {
    if best.as_ref().is_none_or(|b| c.beats(b)) {
        *best = Some(c);
    }
}

/// Scans lengths `1..=max_len` in order. The reported offender is the worst
/// word of the shortest violating length; a generic word reports its worst
/// word overall.
fn scan_lengths<K: Ord>(
    epsilon: f64,
    max_len: usize,
    mut at_len: impl FnMut(usize) -> Option<Candidate<K>>,
    describe: impl Fn(K) -> String,
) -> GenericReport {
    let mut overall: Option<Candidate<K>> = None;
    let mut generic = true;
    for l in 1..=max_len {
        let Some(best) = at_len(l) else { continue };
        if best.gap >= epsilon {
            overall = Some(best);
            generic = false;
            break;
        }
        keep_best(&mut overall, best);
    }
    GenericReport {
        epsilon,
        max_len,
        generic,
        worst: overall.map(|c| Offender {
            beta: describe(c.key),
            measure: c.measure,
            frequency: c.frequency,
            gap: c.gap,
        }),
    }
}

pub fn is_eps_generic(word: &Word, oracle: &dyn FreqOracle, epsilon: f64) -> Result<GenericReport> {
    let max_len = max_checked_len(epsilon)?;
    let bytes = word.as_bytes();
    let n = bytes.len() as f64;
    Ok(scan_lengths(
        epsilon,
        max_len,
        |l| {
            let mut counts: HashMap<&[u8], usize> = HashMap::new();
            if l <= bytes.len() {
                for w in bytes.windows(l) {
                    *counts.entry(w).or_default() += 1;
                }
            }
            let mut best: Option<Candidate<Vec<u8>>> = None;
            for (beta, c) in &counts {
                let cand = Candidate::new(beta.to_vec(), oracle.measure(beta), *c as f64 / n);
                keep_best(&mut best, cand);
            }
            for (beta, m) in oracle.support(l) {
                if !counts.contains_key(beta.as_slice()) {
                    keep_best(&mut best, Candidate::new(beta, m, 0.0));
                }
            }
            best
        },
        |k| String::from_utf8_lossy(&k).into_owned(),
    ))
}

/// Number of `j ∈ [0, last]` with `(phase + j) ≡ target (mod p)`.
fn congruent_count(last: u128, phase: u128, target: u128, p: u128) -> u128 {
    let d = (target + p - phase % p) % p;
    if d > last {
        0
    } else {
        (last - d) / p + 1
    }
}

/// Genericity of `(σ^phase u^∞)[0..len]` computed from residue counts,
/// without materializing the word. Cost is `O(⌊1/ε⌋·p)`.
pub fn periodic_prefix_generic(
    oracle: &PeriodicOracle,
    phase: usize,
    len: u128,
    epsilon: f64,
) -> Result<GenericReport> {
    let max_len = max_checked_len(epsilon)?;
    if len == 0 {
        return Err(Error::invalid("word length must be positive"));
    }
    let p = oracle.period();
    let pp = p as u128;
    let n = len as f64;
    let singletons = oracle.prefix_classes(p);
    Ok(scan_lengths(
        epsilon,
        max_len,
        |l| {
            let short;
            let classes = if l >= p {
                &singletons
            } else {
                short = oracle.prefix_classes(l);
                &short
            };
            let mut best: Option<Candidate<(Vec<u8>, usize, usize)>> = None;
            for class in classes {
                let measure = class.len() as f64 / p as f64;
                let occ: u128 = if l as u128 > len {
                    0
                } else {
                    class
                        .iter()
                        .map(|&c| congruent_count(len - l as u128, phase as u128, c as u128, pp))
                        .sum()
                };
                // key orders like the materialized word; only the head is
                // compared since distinct classes differ within p symbols
                let head = oracle.rotation_prefix(class[0], l.min(p));
                keep_best(&mut best, Candidate::new((head, class[0], l), measure, occ as f64 / n));
            }
            best
        },
        |(_, c, l)| String::from_utf8_lossy(&oracle.rotation_prefix(c, l)).into_owned(),
    ))
}

/// Fraction of ε-generic `M`-windows starting at `1 ≤ i < |α| − M + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongReport {
    pub epsilon: f64,
    #[serde(with = "big")]
    pub m: u128,
    #[serde(with = "big")]
    pub word_len: u128,
    #[serde(with = "big")]
    pub windows: u128,
    #[serde(with = "big")]
    pub good: u128,
    /// `good / |α|`.
    pub fraction: f64,
    pub strongly_generic: bool,
}

impl StrongReport {
    fn new(epsilon: f64, m: u128, word_len: u128, windows: u128, good: u128) -> Self {
        let fraction = good as f64 / word_len as f64;
        let bad_share = (word_len - good) as f64 / word_len as f64;
        Self {
            epsilon,
            m,
            word_len,
            windows,
            good,
            fraction,
            // fraction > 1 − ε, written to avoid cancellation for long words
            strongly_generic: bad_share < epsilon,
        }
    }
}

struct Tally {
    count: usize,
    measure: f64,
    bad: bool,
}

/// Sliding-window scan: each step updates only the `O(⌊1/ε⌋)` subwords that
/// enter or leave the window.
pub fn is_strongly_generic(
    word: &Word,
    oracle: &dyn FreqOracle,
    epsilon: f64,
    m: usize,
) -> Result<StrongReport> {
    let max_len = max_checked_len(epsilon)?;
    let bytes = word.as_bytes();
    let n = bytes.len();
    if m == 0 || m > n {
        return Err(Error::precondition(format!(
            "window length M = {m} must lie in [1, |word| = {n}]"
        )));
    }
    let windows = n - m;
    let mf = m as f64;
    let lmax = max_len.min(m);

    let support: Vec<(Vec<u8>, f64)> = (1..=max_len).flat_map(|l| oracle.support(l)).collect();
    let mut table: HashMap<&[u8], Tally> = HashMap::new();
    let mut violations = 0usize;
    let is_bad = |count: usize, measure: f64| (measure - count as f64 / mf).abs() >= epsilon;
    for (beta, measure) in &support {
        let bad = is_bad(0, *measure);
        violations += bad as usize;
        table.insert(beta, Tally { count: 0, measure: *measure, bad });
    }

    let update = |table: &mut HashMap<&[u8], Tally>, beta: &[u8], delta: isize, violations: &mut usize| {
        let t = table.get_mut(beta).expect("subword registered");
        t.count = (t.count as isize + delta) as usize;
        let bad = is_bad(t.count, t.measure);
        if bad != t.bad {
            if bad {
                *violations += 1;
            } else {
                *violations -= 1;
            }
            t.bad = bad;
        }
    };

    // every subword of length ≤ lmax that can occur in any window
    for l in 1..=lmax {
        for w in bytes.windows(l) {
            if !table.contains_key(w) {
                let measure = oracle.measure(w);
                let bad = is_bad(0, measure);
                violations += bad as usize;
                table.insert(w, Tally { count: 0, measure, bad });
            }
        }
    }

    for j in 0..m {
        for l in 1..=lmax.min(m - j) {
            update(&mut table, &bytes[j..j + l], 1, &mut violations);
        }
    }
    let mut good = 0usize;
    for s in 0..windows {
        if violations == 0 {
            good += 1;
        }
        // leave: subwords starting at s; enter: subwords ending at s + m
        for l in 1..=lmax {
            update(&mut table, &bytes[s..s + l], -1, &mut violations);
        }
        let end = s + m;
        for l in 1..=lmax {
            update(&mut table, &bytes[end + 1 - l..=end], 1, &mut violations);
        }
    }
    Ok(StrongReport::new(epsilon, m as u128, n as u128, windows as u128, good as u128))
}

/// Strong genericity of `(σ^shift u^∞)[0..len]`: window `s` is generic iff
/// its phase `(shift + s) mod p` is, so good windows are counted by residue.
pub fn periodic_prefix_strongly_generic(
    oracle: &PeriodicOracle,
    shift: usize,
    len: u128,
    epsilon: f64,
    m: u128,
) -> Result<StrongReport> {
    if m == 0 || m > len {
        return Err(Error::precondition(format!(
            "window length M = {m} must lie in [1, |word| = {len}]"
        )));
    }
    let p = oracle.period();
    let windows = len - m;
    let mut good = 0u128;
    if windows > 0 {
        for r in 0..p {
            if periodic_prefix_generic(oracle, r, m, epsilon)?.generic {
                good += congruent_count(windows - 1, shift as u128, r as u128, p as u128);
            }
        }
    }
    Ok(StrongReport::new(epsilon, m, len, windows, good))
}

/// Outcome of checking "strongly (ε, M)-generic ⇒ 2ε-generic" on one word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma10Outcome {
    pub antecedent: bool,
    /// `None` when the antecedent fails and the implication holds vacuously.
    pub consequent: Option<bool>,
    pub holds: bool,
}

pub fn lemma10_check(word: &Word, oracle: &dyn FreqOracle, epsilon: f64, m: usize) -> Result<Lemma10Outcome> {
    let antecedent = is_strongly_generic(word, oracle, epsilon, m)?.strongly_generic;
    if !antecedent {
        return Ok(Lemma10Outcome {
            antecedent,
            consequent: None,
            holds: true,
        });
    }
    let consequent = is_eps_generic(word, oracle, (2.0 * epsilon).min(1.0))?.generic;
    Ok(Lemma10Outcome {
        antecedent,
        consequent: Some(consequent),
        holds: consequent,
    })
}
