//! Points built from a stream of cover words `a'_1, a'_2, …` (all words of
//! the scale-1 cover, then scale 2, …).
//!
//! In the global layout block `n` fills positions `|a'_{n−1}| < i ≤ |a'_n|`
//! (1-based, `|a'_0| = 0`) and reads the word at the same global index:
//! `x_i = (a'_n)_i` up to the cut `|a'_{n−1}| + ⌈|a'_n|/3⌉`, and in split mode
//! `x_i = (a'_n)_{i−1}` after it. The concatenated layout instead places the
//! blocks end to end and indexes each word locally.

use serde::{Deserialize, Serialize};

use super::big;
use super::cover::{periodic_tall_cover, periodic_window_length, CoverSpec, CoverWord};
use super::oracle::{OracleSpec, PeriodicOracle};
use super::point::{orbital_measure, EmpiricalMeasure, Point, Source};
use super::word::Word;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    /// `ε_k`; the cover's own `epsilon` must match.
    pub epsilon: f64,
    /// Window length `M_k` for strong genericity.
    #[serde(with = "big")]
    pub m: u128,
    /// `(ε_k, N_k)`-cover; `cover.n` is `N_k`.
    pub cover: CoverSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HochmanSchedule {
    pub oracle: OracleSpec,
    pub scales: Vec<Scale>,
}

/// How fast `N_k` grows relative to the previous scale's last word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `N_k = max(k·|a_{k−1,p}|, 3·2^k·M_k) + 1`.
    Minimal,
    /// Additionally `N_k > k²·|a_{k−1,p}|`, so earlier blocks fade as `1/k²`.
    Quadratic,
}

/// Schedule for the measure on the orbit of `u^∞` with `ε_k = 2^{−k}`.
pub fn periodic_schedule(u: &Word, scales: usize, growth: Growth) -> Result<HochmanSchedule> {
    if scales == 0 {
        return Err(Error::invalid("at least one scale is required"));
    }
    if scales > 24 {
        return Err(Error::invalid("at most 24 scales are supported"));
    }
    let oracle = PeriodicOracle::new(u)?;
    if oracle.period() != u.len() {
        return Err(Error::precondition(format!("'{u}' is not primitive")));
    }
    let overflow = || Error::invalid("schedule lengths overflow u128");
    let mut prev = 0u128;
    let mut out = Vec::with_capacity(scales);
    for k in 1..=scales {
        let kk = k as u128;
        let epsilon = 0.5f64.powi(k as i32);
        let m = periodic_window_length(&oracle, epsilon)?;
        let mut floor = (3u128 << k).checked_mul(m).ok_or_else(overflow)?;
        floor = floor.max(kk.checked_mul(prev).ok_or_else(overflow)?);
        if growth == Growth::Quadratic {
            floor = floor.max((kk * kk).checked_mul(prev).ok_or_else(overflow)?);
        }
        let n = floor + 1;
        let cover = periodic_tall_cover(u, epsilon, n, 1)?.remove(0);
        prev = cover.words.last().map(|w| w.len()).unwrap_or(0);
        out.push(Scale { epsilon, m, cover });
    }
    Ok(HochmanSchedule {
        oracle: OracleSpec::Periodic { point: u.clone() },
        scales: out,
    })
}

/// A failed precondition, naming the inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleViolation {
    /// 1-based scale.
    pub scale: usize,
    /// 1-based word within the scale's cover, when specific to one word.
    pub word: Option<usize>,
    pub condition: String,
}

pub fn check_schedule(schedule: &HochmanSchedule) -> Result<Vec<ScheduleViolation>> {
    let oracle = schedule.oracle.build()?;
    let mut out = Vec::new();
    let mut prev_last = 0u128;
    for (i, s) in schedule.scales.iter().enumerate() {
        let k = i + 1;
        let mut v = |word: Option<usize>, condition: String| out.push(ScheduleViolation { scale: k, word, condition });
        let target = 0.5f64.powi(k as i32);
        if (s.epsilon - target).abs() > 1e-15 * target {
            v(None, format!("ε_{k} = {} differs from 2^-{k} = {target}", s.epsilon));
        }
        if s.cover.epsilon != s.epsilon {
            v(None, format!("cover ε = {} differs from ε_{k} = {}", s.cover.epsilon, s.epsilon));
        }
        let n = s.cover.n;
        let check = s.cover.check(oracle.as_ref())?;
        for violation in check.violations {
            v(None, format!("not an (ε_{k}, N_{k})-cover: {violation:?}"));
        }
        if k > 1 && n <= (k as u128).saturating_mul(prev_last) {
            v(None, format!("N_{k} = {n} must exceed {k}·|a_{{{},p}}| = {}", k - 1, (k as u128).saturating_mul(prev_last)));
        }
        let bound = (3u128 << k).saturating_mul(s.m);
        if n <= bound {
            v(None, format!("N_{k} = {n} must exceed 3·2^{k}·M_{k} = {bound}"));
        }
        for (j, w) in s.cover.words.iter().enumerate() {
            if w.len() < s.m {
                v(Some(j + 1), format!("word shorter than M_{k} = {}", s.m));
                continue;
            }
            let r = w.strongly_generic(oracle.as_ref(), s.epsilon, s.m)?;
            if !r.strongly_generic {
                v(Some(j + 1), format!(
                    "not strongly (ε_{k}, M_{k})-generic: good-window fraction {} ≤ 1 − {}",
                    r.fraction, s.epsilon
                ));
            }
        }
        prev_last = s.cover.words.last().map_or(prev_last, |w| w.len());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMode {
    /// `x_i = (a'_n)_i` on the whole block.
    Simple,
    /// Copy up to the cut, then read the word shifted by one symbol.
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLayout {
    Global,
    Concatenated,
}

/// One block of a constructed point. Positions are 1-based: the block is
/// `lo < i ≤ hi`, the copied part `lo < i ≤ cut`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub scale: usize,
    pub index: usize,
    #[serde(with = "big")]
    pub lo: u128,
    #[serde(with = "big")]
    pub cut: u128,
    #[serde(with = "big")]
    pub hi: u128,
    pub word: CoverWord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructedPoint {
    pub point: Point,
    pub blocks: Vec<Block>,
    pub mode: PointMode,
    pub layout: BlockLayout,
}

fn source_at(word: &CoverWord, offset: u128) -> Result<Source> {
    Ok(match word {
        CoverWord::Explicit { word } => Source::Explicit {
            word: word.clone(),
            offset: usize::try_from(offset).map_err(|_| Error::invalid("offset too large"))?,
        },
        CoverWord::PeriodicPrefix { period, shift, .. } => Source::Periodic {
            period: period.clone(),
            offset: *shift as u128 + offset,
        },
    })
}

fn build_blocks<'a>(
    words: impl IntoIterator<Item = (usize, usize, &'a CoverWord)>,
    mode: PointMode,
    layout: BlockLayout,
) -> Result<ConstructedPoint> {
    let mut point = Point::new();
    let mut blocks = Vec::new();
    let mut lo = 0u128;
    for (scale, index, word) in words {
        let len = word.len();
        let (base, hi) = match layout {
            BlockLayout::Global => (0, len),
            BlockLayout::Concatenated => (
                lo,
                lo.checked_add(len).ok_or_else(|| Error::invalid("point length overflows u128"))?,
            ),
        };
        if hi <= lo {
            return Err(Error::precondition(format!(
                "block {} (scale {scale}, word {index}) has length {len}, not beyond the previous end {lo}",
                blocks.len() + 1
            )));
        }
        let cut = (lo + len.div_ceil(3)).min(hi);
        match mode {
            PointMode::Simple => point.push(hi - lo, source_at(word, lo - base)?)?,
            PointMode::Split => {
                point.push(cut - lo, source_at(word, lo - base)?)?;
                // x_i = (a'_n)_{i−1}: 0-based position q reads index q − 1 − base
                point.push(hi - cut, source_at(word, cut - 1 - base)?)?;
            }
        }
        blocks.push(Block {
            scale,
            index,
            lo,
            cut,
            hi,
            word: word.clone(),
        });
        lo = hi;
    }
    if blocks.is_empty() {
        return Err(Error::invalid("the word stream is empty"));
    }
    Ok(ConstructedPoint {
        point,
        blocks,
        mode,
        layout,
    })
}

/// Builds from an explicit stream without schedule checks; every block is
/// labelled scale 1.
pub fn build_from_stream(words: &[CoverWord], mode: PointMode, layout: BlockLayout) -> Result<ConstructedPoint> {
    build_blocks(words.iter().enumerate().map(|(i, w)| (1, i + 1, w)), mode, layout)
}

fn build_checked(schedule: &HochmanSchedule, mode: PointMode, layout: BlockLayout) -> Result<ConstructedPoint> {
    let violations = check_schedule(schedule)?;
    if !violations.is_empty() {
        let detail: Vec<String> = violations
            .iter()
            .map(|v| match v.word {
                Some(w) => format!("scale {} word {}: {}", v.scale, w, v.condition),
                None => format!("scale {}: {}", v.scale, v.condition),
            })
            .collect();
        return Err(Error::precondition(detail.join("; ")));
    }
    let stream = schedule.scales.iter().enumerate().flat_map(|(k, s)| {
        s.cover.words.iter().enumerate().map(move |(r, w)| (k + 1, r + 1, w))
    });
    build_blocks(stream, mode, layout)
}

/// The point whose pair orbital measures against a typical `y` diverge.
pub fn build_hochman_point(schedule: &HochmanSchedule, layout: BlockLayout) -> Result<ConstructedPoint> {
    build_checked(schedule, PointMode::Split, layout)
}

/// `x_i = (a'_n)_i` throughout.
pub fn build_simple_point(schedule: &HochmanSchedule, layout: BlockLayout) -> Result<ConstructedPoint> {
    build_checked(schedule, PointMode::Simple, layout)
}

impl ConstructedPoint {
    pub fn len(&self) -> u128 {
        self.point.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point.is_empty()
    }

    /// First block of the given scale with the given 1-based index.
    pub fn block(&self, scale: usize, index: usize) -> Option<&Block> {
        self.blocks.iter().find(|b| b.scale == scale && b.index == index)
    }

    pub fn scales(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.blocks.iter().map(|b| b.scale).collect();
        s.dedup();
        s
    }
}

/// Orbital measures of `(x, y)` stopped at one block's cut and end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleMeasures {
    pub scale: usize,
    /// Cover word of the scale that `y` begins with (1-based); the first word
    /// when `y` begins with none.
    pub r: usize,
    pub aligned: bool,
    /// Block-partial stop time `|a'_{n−1}| + ⌈|a'_n|/3⌉`.
    #[serde(with = "big")]
    pub stop_a: u128,
    /// Block-end stop time `|a'_n|`.
    #[serde(with = "big")]
    pub stop_b: u128,
    /// The block-end measure stopped `k − 1` short because the block ends the point.
    pub truncated: bool,
    pub diagonal_a: f64,
    pub diagonal_b: f64,
    pub shifted_a: Option<f64>,
    pub shifted_b: Option<f64>,
    pub measure_a: EmpiricalMeasure,
    pub measure_b: EmpiricalMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOrbitalReport {
    pub k: usize,
    pub scales: Vec<ScaleMeasures>,
    /// Scales at which `y` begins with none of the cover words.
    pub misaligned: Vec<usize>,
}

/// `(Λ×Λ)^k` cylinder frequencies of `(σⁿx, σⁿy)` for `n` below each stop
/// time, one pair of stop times per scale.
pub fn pair_orbital_measures(x: &ConstructedPoint, y: &Point, k: usize) -> Result<PairOrbitalReport> {
    let mut scales = Vec::new();
    let mut misaligned = Vec::new();
    for scale in x.scales() {
        let found = x
            .blocks
            .iter()
            .filter(|b| b.scale == scale)
            .find(|b| y.starts_with(&b.word));
        let aligned = found.is_some();
        if !aligned {
            misaligned.push(scale);
        }
        let block = found
            .or_else(|| x.blocks.iter().find(|b| b.scale == scale))
            .expect("scale has a block");
        let measure_a = orbital_measure(&[&x.point, y], block.cut, k)?;
        // the final block of a finite point cannot supply k − 1 symbols past its end
        let room = (x.len() + 1).saturating_sub(k as u128);
        let truncated = block.hi > room;
        let measure_b = orbital_measure(&[&x.point, y], block.hi.min(room), k)?;
        let shifted = |m: &EmpiricalMeasure| if k >= 2 { m.shifted_diagonal_mass().ok() } else { None };
        scales.push(ScaleMeasures {
            scale,
            r: block.index,
            aligned,
            stop_a: block.cut,
            stop_b: block.hi,
            truncated,
            diagonal_a: measure_a.diagonal_mass()?,
            diagonal_b: measure_b.diagonal_mass()?,
            shifted_a: shifted(&measure_a),
            shifted_b: shifted(&measure_b),
            measure_a,
            measure_b,
        });
    }
    Ok(PairOrbitalReport { k, scales, misaligned })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn ex(s: &str) -> CoverWord {
        CoverWord::explicit(w(s))
    }

    #[test]
    fn single_block_split_by_hand() {
        let x = build_from_stream(&[ex("123456")], PointMode::Split, BlockLayout::Global).unwrap();
        assert_eq!(x.point.prefix(6).unwrap().to_string(), "122345");
        assert_eq!((x.blocks[0].cut, x.blocks[0].hi), (2, 6));
        let one = build_from_stream(&[ex("7")], PointMode::Split, BlockLayout::Global).unwrap();
        assert_eq!(one.point.prefix(1).unwrap().to_string(), "7");
        assert_eq!(one.blocks[0].cut, 1);
    }

    #[test]
    fn simple_blocks() {
        let x = build_from_stream(&[ex("abc")], PointMode::Simple, BlockLayout::Global).unwrap();
        assert_eq!(x.point.prefix(3).unwrap().to_string(), "abc");
        let two = [ex("ab"), ex("cdefgh")];
        let c = build_from_stream(&two, PointMode::Simple, BlockLayout::Concatenated).unwrap();
        assert_eq!(c.point.prefix(8).unwrap().to_string(), "abcdefgh");
        // global indexing keeps only the part of the second word past |a'_1|
        let g = build_from_stream(&two, PointMode::Simple, BlockLayout::Global).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point.prefix(6).unwrap().to_string(), "abefgh");
        assert!(build_from_stream(&[ex("abc"), ex("de")], PointMode::Simple, BlockLayout::Global).is_err());
        assert!(build_from_stream(&[], PointMode::Simple, BlockLayout::Global).is_err());
    }

    #[test]
    fn two_blocks_split_by_hand() {
        // block 1 = 123456: cut 2 → 12 2345; block 2 covers 7..=24 with
        // cut 6 + ⌈24/3⌉ = 14: copy indices 7..=14, then indices 14..=23
        let b1 = "123456";
        let b2 = "ABCDEFGHIJKLMNOPQRSTUVWX";
        let x = build_from_stream(&[ex(b1), ex(b2)], PointMode::Split, BlockLayout::Global).unwrap();
        let expect = format!("122345{}{}", &b2[6..14], &b2[13..23]);
        assert_eq!(x.point.prefix(24).unwrap().to_string(), expect);
        let c = build_from_stream(&[ex(b1), ex(b2)], PointMode::Split, BlockLayout::Concatenated).unwrap();
        let expect = format!("122345{}{}", &b2[..8], &b2[7..23]);
        assert_eq!(c.point.prefix(30).unwrap().to_string(), expect);
    }

    fn small_schedule(scales: usize) -> HochmanSchedule {
        periodic_schedule(&w("ab"), scales, Growth::Minimal).unwrap()
    }

    #[test]
    fn periodic_schedule_satisfies_preconditions() {
        for growth in [Growth::Minimal, Growth::Quadratic] {
            let s = periodic_schedule(&w("ab"), 6, growth).unwrap();
            assert!(check_schedule(&s).unwrap().is_empty());
            for (i, sc) in s.scales.iter().enumerate() {
                assert_eq!(sc.epsilon, 0.5f64.powi(i as i32 + 1));
                assert_eq!(sc.cover.words.len(), 2);
            }
        }
        let s = periodic_schedule(&w("aab"), 4, Growth::Minimal).unwrap();
        assert!(check_schedule(&s).unwrap().is_empty());
        assert!(periodic_schedule(&w("abab"), 2, Growth::Minimal).is_err());
    }

    #[test]
    fn schedule_violations_are_itemized() {
        let mut s = small_schedule(3);
        s.scales[1].cover.n = 3;
        s.scales[2].m = s.scales[2].cover.n;
        s.scales[0].epsilon = 0.4;
        let v = check_schedule(&s).unwrap();
        assert!(v.iter().any(|x| x.scale == 1 && x.condition.contains("2^-1")));
        assert!(v.iter().any(|x| x.scale == 2 && x.condition.contains("must exceed 2·")));
        assert!(v.iter().any(|x| x.scale == 3 && x.condition.contains("3·2^3")));
        let err = build_hochman_point(&s, BlockLayout::Global).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn periodic_instantiation_by_hand() {
        let s = small_schedule(2);
        let x = build_hochman_point(&s, BlockLayout::Global).unwrap();
        assert_eq!(x.blocks.len(), 4);
        let (b1, b2) = (&x.blocks[0], &x.blocks[1]);
        // hand expansion of the first two blocks from the literal formula
        let mut expect = Vec::new();
        let u = |shift: u128, i: u128| if (shift + i - 1) % 2 == 0 { b'a' } else { b'b' };
        for i in 1..=b2.hi {
            let (blk, shift) = if i <= b1.hi { (b1, 0) } else { (b2, 1) };
            let cut = blk.lo + blk.hi.div_ceil(3);
            expect.push(if i <= cut { u(shift, i) } else { u(shift, i - 1) });
        }
        let got = x.point.prefix(b2.hi as usize).unwrap();
        assert_eq!(got.as_bytes(), &expect[..]);
    }

    #[test]
    fn simple_concatenated_equals_concatenation() {
        let s = small_schedule(2);
        let x = build_simple_point(&s, BlockLayout::Concatenated).unwrap();
        let mut cat = Vec::new();
        for sc in &s.scales {
            for word in &sc.cover.words {
                cat.extend_from_slice(word.materialize().unwrap().as_bytes());
            }
        }
        assert_eq!(x.point.prefix(cat.len()).unwrap().as_bytes(), &cat[..]);
    }

    #[test]
    fn identical_points_have_diagonal_measures() {
        let s = small_schedule(3);
        let x = build_hochman_point(&s, BlockLayout::Global).unwrap();
        let r = pair_orbital_measures(&x, &x.point, 1).unwrap();
        for sc in &r.scales {
            assert_eq!(sc.diagonal_a, 1.0);
            assert_eq!(sc.diagonal_b, 1.0);
            assert!((sc.measure_a.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn misaligned_y_is_flagged() {
        let s = small_schedule(3);
        let x = build_hochman_point(&s, BlockLayout::Global).unwrap();
        let y = Point::periodic(&w("ba"));
        let r = pair_orbital_measures(&x, &y, 2).unwrap();
        assert!(r.misaligned.is_empty(), "σu starts with the second cover word");
        assert!(r.scales.iter().all(|s| s.r == 2));
        assert!(r.scales[2].truncated && !r.scales[1].truncated);
        let z = Point::periodic(&w("aab"));
        let r = pair_orbital_measures(&x, &z, 2).unwrap();
        assert_eq!(r.misaligned, vec![1, 2, 3]);
        for sc in &r.scales {
            assert!((sc.measure_b.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_json_roundtrip() {
        let s = periodic_schedule(&w("ab"), 12, Growth::Quadratic).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: HochmanSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn copied_and_shifted_parts_match_words(
            lens in proptest::collection::vec(1usize..40, 1..5),
            seed in 0u8..26,
        ) {
            // strictly increasing lengths, words over a rolling alphabet
            let mut words = Vec::new();
            let mut len = 0;
            for (i, l) in lens.iter().enumerate() {
                len += l;
                let body: Vec<u8> = (0..len).map(|j| b'a' + ((j * 7 + i * 3 + seed as usize) % 26) as u8).collect();
                words.push(CoverWord::explicit(Word::new(body).unwrap()));
            }
            let x = build_from_stream(&words, PointMode::Split, BlockLayout::Global).unwrap();
            let bytes = x.point.prefix(x.len() as usize).unwrap();
            for b in &x.blocks {
                let word = b.word.materialize().unwrap();
                let wb = word.as_bytes();
                for i in (b.lo + 1)..=b.hi {
                    let got = bytes.as_bytes()[(i - 1) as usize];
                    let want = if i <= b.cut { wb[(i - 1) as usize] } else { wb[(i - 2) as usize] };
                    prop_assert_eq!(got, want);
                }
            }
        }
    }
}
