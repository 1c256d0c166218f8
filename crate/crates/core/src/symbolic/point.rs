//! Points of `Λ^ℕ` stored as runs, and exact orbital-measure counting.
//!
//! A run copies either a periodic sequence or an explicit word over a range
//! of positions. Windows that sit inside one run of every point repeat with
//! the least common multiple of the periods, so they are counted by residue
//! arithmetic; only windows that straddle a run boundary are read one by one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::big;
use super::cover::CoverWord;
use super::word::Word;
use crate::{Error, Result};

/// Length used for points that never end.
pub const INFINITE: u128 = u128::MAX;

/// Largest period product handled by residue counting.
const MAX_RESIDUE_PERIOD: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// Position `j` of the run reads `period[(offset + j) mod p]`.
    Periodic { period: Word, offset: u128 },
    /// Position `j` of the run reads `word[offset + j]`.
    Explicit { word: Word, offset: usize },
}

impl Source {
    #[inline]
    fn at(&self, j: u128) -> u8 {
        match self {
            Self::Periodic { period, offset } => {
                let p = period.len() as u128;
                period.as_bytes()[((offset % p + j % p) % p) as usize]
            }
            Self::Explicit { word, offset } => word.as_bytes()[offset + j as usize],
        }
    }

    fn period(&self) -> Option<u128> {
        match self {
            Self::Periodic { period, .. } => Some(period.len() as u128),
            Self::Explicit { .. } => None,
        }
    }
}

/// Positions `[start, end)` (0-based) read from `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: u128,
    pub end: u128,
    pub source: Source,
}

/// A finite or infinite point built from consecutive runs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Point {
    runs: Vec<Run>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    /// `u^∞`.
    pub fn periodic(u: &Word) -> Self {
        let mut p = Self::new();
        p.runs.push(Run {
            start: 0,
            end: INFINITE,
            source: Source::Periodic {
                period: u.clone(),
                offset: 0,
            },
        });
        p
    }

    pub fn from_word(w: &Word) -> Self {
        let mut p = Self::new();
        p.push(w.len() as u128, Source::Explicit { word: w.clone(), offset: 0 })
            .expect("fresh point");
        p
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Number of symbols, [`INFINITE`] for unbounded points.
    pub fn len(&self) -> u128 {
        self.runs.last().map_or(0, |r| r.end)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends `len` symbols read from `source`.
    pub fn push(&mut self, len: u128, source: Source) -> Result<()> {
        if len == 0 {
            return Ok(());
        }
        let start = self.len();
        if start == INFINITE {
            return Err(Error::invalid("cannot extend an infinite point"));
        }
        if let Source::Explicit { word, offset } = &source {
            if (*offset as u128).saturating_add(len) > word.len() as u128 {
                return Err(Error::invalid("explicit run reads past the end of its word"));
            }
        }
        let end = start.checked_add(len).ok_or_else(|| Error::invalid("point length overflows u128"))?;
        self.runs.push(Run { start, end, source });
        Ok(())
    }

    fn run_index(&self, q: u128) -> usize {
        self.runs.partition_point(|r| r.end <= q)
    }

    /// Symbol at 0-based position `q`.
    pub fn symbol(&self, q: u128) -> u8 {
        let r = &self.runs[self.run_index(q)];
        r.source.at(q - r.start)
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        if n as u128 > self.len() {
            return Err(Error::InsufficientData {
                required: n,
                available: usize::try_from(self.len()).unwrap_or(usize::MAX),
            });
        }
        let mut out = Vec::with_capacity(n);
        for r in &self.runs {
            if r.start >= n as u128 {
                break;
            }
            let stop = r.end.min(n as u128);
            out.extend((0..stop - r.start).map(|j| r.source.at(j)));
        }
        Word::new(out)
    }

    /// Whether the point begins with `w`. Segments where both sides are
    /// periodic are compared on `p + q` symbols, which decides agreement on
    /// the whole segment.
    pub fn starts_with(&self, w: &CoverWord) -> bool {
        let len = w.len();
        if len > self.len() {
            return false;
        }
        let wp = match w {
            CoverWord::PeriodicPrefix { period, .. } => Some(period.len() as u128),
            CoverWord::Explicit { .. } => None,
        };
        for r in &self.runs {
            if r.start >= len {
                break;
            }
            let stop = r.end.min(len);
            let span = match (r.source.period(), wp) {
                (Some(p), Some(q)) => (stop - r.start).min(p + q),
                _ => stop - r.start,
            };
            if (0..span).any(|j| r.source.at(j) != w.symbol(r.start + j)) {
                return false;
            }
        }
        true
    }
}

/// Empirical cylinder frequencies of the joint orbit of one or more points:
/// `counts[c] = #{0 ≤ n < horizon : (σⁿx¹, …)[0..k] = c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub k: usize,
    pub arity: usize,
    #[serde(with = "big")]
    pub horizon: u128,
    /// Keys are the `k` symbols of each point written one after another,
    /// separated by `|`.
    pub counts: BTreeMap<String, u128>,
}

impl EmpiricalMeasure {
    pub fn freq(&self, cyl: &str) -> f64 {
        self.counts.get(cyl).map_or(0.0, |c| *c as f64 / self.horizon as f64)
    }

    /// Sum of frequencies; 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.counts.values().map(|c| *c as f64 / self.horizon as f64).sum()
    }

    fn parts(cyl: &str) -> Vec<&[u8]> {
        cyl.split('|').map(str::as_bytes).collect()
    }

    fn pair_mass(&self, keep: impl Fn(&[u8], &[u8]) -> bool) -> Result<f64> {
        if self.arity != 2 {
            return Err(Error::invalid("pair masses need a two-point measure"));
        }
        let hit: u128 = self
            .counts
            .iter()
            .filter(|(c, _)| {
                let p = Self::parts(c);
                keep(p[0], p[1])
            })
            .map(|(_, n)| n)
            .sum();
        Ok(hit as f64 / self.horizon as f64)
    }

    /// Mass of cylinders with equal coordinates: the `Δ_μ` part.
    pub fn diagonal_mass(&self) -> Result<f64> {
        self.pair_mass(|x, y| x == y)
    }

    /// Mass of cylinders with `y = σx` on the visible symbols, i.e.
    /// `y[0..k−1] = x[1..k]`. Needs `k ≥ 2`.
    pub fn shifted_diagonal_mass(&self) -> Result<f64> {
        if self.k < 2 {
            return Err(Error::invalid("the shifted diagonal needs cylinders of length at least 2"));
        }
        self.pair_mass(|x, y| y[..self.k - 1] == x[1..])
    }

    /// `Σ freq(c)·f(x_0)·f(y_0)`: the average of `f(x_n)·f(y_n)` up to the
    /// horizon.
    pub fn pairing_mean(&self, f: impl Fn(u8) -> Result<f64>) -> Result<f64> {
        if self.arity != 2 {
            return Err(Error::invalid("pairing needs a two-point measure"));
        }
        let mut acc = 0.0;
        for (c, n) in &self.counts {
            let p = Self::parts(c);
            acc += *n as f64 / self.horizon as f64 * f(p[0][0])? * f(p[1][0])?;
        }
        Ok(acc)
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn window_key(points: &[&Point], n: u128, k: usize) -> String {
    let mut s = String::with_capacity(points.len() * (k + 1));
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push('|');
        }
        s.extend((0..k as u128).map(|j| p.symbol(n + j) as char));
    }
    s
}

/// Joint orbital measure of `points` over window starts `0..horizon`.
pub fn orbital_measure(points: &[&Point], horizon: u128, k: usize) -> Result<EmpiricalMeasure> {
    if points.is_empty() {
        return Err(Error::invalid("at least one point is required"));
    }
    if k == 0 || horizon == 0 {
        return Err(Error::invalid("cylinder length and horizon must be positive"));
    }
    let kk = k as u128;
    let need = horizon
        .checked_add(kk - 1)
        .ok_or_else(|| Error::invalid("horizon overflows u128"))?;
    for p in points {
        if p.len() < need {
            return Err(Error::precondition(format!(
                "a point of length {} cannot supply {need} symbols",
                p.len()
            )));
        }
    }

    // window starts whose window crosses some run boundary
    let mut cuts: Vec<u128> = points
        .iter()
        .flat_map(|p| p.runs().iter().map(|r| r.start))
        .filter(|b| *b > 0 && *b < need)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();

    let mut counts: BTreeMap<String, u128> = BTreeMap::new();
    let mut add = |key: String, n: u128| *counts.entry(key).or_default() += n;

    // clean stretch [s, e): every window lies inside one run of each point
    let clean = |s: u128, e: u128, add: &mut dyn FnMut(String, u128)| -> Result<()> {
        if s >= e {
            return Ok(());
        }
        let mut period = 1u128;
        for p in points {
            let r = &p.runs()[p.run_index(s)];
            match r.source.period() {
                Some(q) => period = period / gcd(period, q) * q,
                None => {
                    period = 0;
                    break;
                }
            }
            if period > MAX_RESIDUE_PERIOD {
                period = 0;
                break;
            }
        }
        let len = e - s;
        if period == 0 {
            if len > MAX_RESIDUE_PERIOD * 64 {
                return Err(Error::precondition("explicit stretch too long to enumerate"));
            }
            for n in s..e {
                add(window_key(points, n, k), 1);
            }
        } else {
            for j in 0..period.min(len) {
                add(window_key(points, s + j, k), (len - 1 - j) / period + 1);
            }
        }
        Ok(())
    };

    let mut pos = 0u128;
    for &b in &cuts {
        let dirty_lo = b.saturating_sub(kk - 1).max(pos);
        let dirty_hi = b.min(horizon);
        if dirty_lo >= horizon {
            break;
        }
        clean(pos, dirty_lo, &mut add)?;
        for n in dirty_lo..dirty_hi {
            add(window_key(points, n, k), 1);
        }
        pos = pos.max(dirty_hi);
    }
    clean(pos, horizon, &mut add)?;

    Ok(EmpiricalMeasure {
        k,
        arity: points.len(),
        horizon,
        counts,
    })
}
