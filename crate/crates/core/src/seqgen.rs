//! Deterministic and seeded generators for the sequence families under study.
//!
//! Sequences are 1-indexed in every formula (`x_1, …, x_T`) and 0-indexed in
//! storage; [`ComplexSeq::at`] is the only place the offset is applied.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{streams, CounterStream};
use crate::{cis_turns, Complex64, Error, Result, TAU};

/// Default rotation fraction: the golden-ratio conjugate `(√5 − 1)/2`.
pub const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_9;

/// Tolerance on `|c| = 1` for rotation phases.
pub const UNIT_PHASE_TOL: f64 = 1e-9;

/// Tolerance on a zero-mean substitution.
pub const ZERO_MEAN_TOL: f64 = 1e-9;

const IID_CHUNK: usize = 1 << 16;

/// Fractional part of `n·α`, computed with an error-free product so that the
/// result is accurate to about one ulp of the fractional part even for large
/// `n`.
#[inline]
pub(crate) fn frac_mul(n: f64, alpha: f64) -> f64 {
    let p = n * alpha;
    let e = n.mul_add(alpha, -p);
    let f = p - p.floor() + e;
    f - f.floor()
}

/// Distribution of an i.i.d. sequence. All offered laws have mean zero and
/// finite variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IidDist {
    /// `±1` with probability 1/2 each.
    SymmetricTwoPoint,
    /// Uniform on the closed unit disk; `E|z|² = 1/2`.
    UniformDisk,
    /// Circular complex Gaussian with `E|z|² = 1`.
    ComplexGaussian,
}

impl IidDist {
    /// Bound on `|z|`, if the law is bounded.
    pub fn bound(self) -> Option<f64> {
        match self {
            IidDist::SymmetricTwoPoint | IidDist::UniformDisk => Some(1.0),
            IidDist::ComplexGaussian => None,
        }
    }

    /// `E|z|²`.
    pub fn second_moment(self) -> f64 {
        match self {
            IidDist::SymmetricTwoPoint | IidDist::ComplexGaussian => 1.0,
            IidDist::UniformDisk => 0.5,
        }
    }

    // Every law uses exactly two 64-bit words per sample so that sample `n`
    // sits at a fixed position of the keystream.
    #[inline]
    pub(crate) fn draw(self, s: &mut CounterStream) -> Complex64 {
        let u = s.next_f64();
        let v = s.next_f64_open0();
        match self {
            IidDist::SymmetricTwoPoint => {
                if u < 0.5 {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }
            IidDist::UniformDisk => {
                let r = v.sqrt();
                cis_turns(u) * r
            }
            IidDist::ComplexGaussian => {
                // Box-Muller; |z|² is Exp(1)
                let r = (-v.ln()).sqrt();
                cis_turns(u) * r
            }
        }
    }
}

impl fmt::Display for IidDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IidDist::SymmetricTwoPoint => "symmetric-two-point",
            IidDist::UniformDisk => "uniform-disk",
            IidDist::ComplexGaussian => "complex-gaussian",
        })
    }
}

impl FromStr for IidDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric-two-point" => Ok(IidDist::SymmetricTwoPoint),
            "uniform-disk" => Ok(IidDist::UniformDisk),
            "complex-gaussian" => Ok(IidDist::ComplexGaussian),
            other => Err(Error::invalid(format!("unknown distribution tag `{other}`"))),
        }
    }
}

/// Where the symbols of a substituted sequence come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSource {
    /// The periodic point `point^∞`; its invariant measure gives each symbol
    /// mass `count / period`.
    Periodic { point: String },
    /// An explicit finite word together with the measure the substitution is
    /// centered against.
    Word {
        symbols: String,
        measure: BTreeMap<char, f64>,
    },
}

impl SymbolSource {
    /// Single-symbol marginal of the declared measure.
    pub fn marginal(&self) -> Result<BTreeMap<char, f64>> {
        match self {
            SymbolSource::Periodic { point } => {
                if point.is_empty() {
                    return Err(Error::invalid("periodic point must be nonempty"));
                }
                let p = point.chars().count() as f64;
                let mut m = BTreeMap::new();
                for c in point.chars() {
                    *m.entry(c).or_insert(0.0) += 1.0 / p;
                }
                Ok(m)
            }
            SymbolSource::Word { measure, .. } => Ok(measure.clone()),
        }
    }

    fn symbols(&self, len: usize) -> Result<Vec<char>> {
        match self {
            SymbolSource::Periodic { point } => {
                if point.is_empty() {
                    return Err(Error::invalid("periodic point must be nonempty"));
                }
                Ok(point.chars().cycle().take(len).collect())
            }
            SymbolSource::Word { symbols, .. } => {
                let out: Vec<char> = symbols.chars().take(len).collect();
                if out.len() < len {
                    return Err(Error::InsufficientData {
                        required: len,
                        available: out.len(),
                    });
                }
                Ok(out)
            }
        }
    }
}

/// Real images of alphabet symbols.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub images: BTreeMap<char, f64>,
}

impl Substitution {
    pub fn new(pairs: impl IntoIterator<Item = (char, f64)>) -> Self {
        Self {
            images: pairs.into_iter().collect(),
        }
    }

    pub fn image(&self, symbol: char) -> Result<f64> {
        self.images
            .get(&symbol)
            .copied()
            .ok_or_else(|| Error::invalid(format!("symbol `{symbol}` has no image")))
    }

    /// `Σ_s μ(s)·sub(s)`.
    pub fn expectation(&self, measure: &BTreeMap<char, f64>) -> Result<f64> {
        measure
            .iter()
            .map(|(&s, &m)| Ok(m * self.image(s)?))
            .sum()
    }

    /// `Σ_s μ(s)·sub(s)²`.
    pub fn second_moment(&self, measure: &BTreeMap<char, f64>) -> Result<f64> {
        measure
            .iter()
            .map(|(&s, &m)| Ok(m * self.image(s)?.powi(2)))
            .sum()
    }
}

/// Full description of a generated sequence; regenerating from an equal
/// descriptor reproduces identical values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorDescriptor {
    /// `x_n = c·e^{2πinα}`.
    Rotation { alpha: f64, phase: Complex64, len: usize },
    /// `x_n = e^{2πi(n+√n)α}`.
    SqrtRotation { alpha: f64, len: usize },
    Iid { dist: IidDist, seed: u64, len: usize },
    Sum {
        left: Box<GeneratorDescriptor>,
        right: Box<GeneratorDescriptor>,
    },
    Symbolic {
        source: SymbolSource,
        substitution: Substitution,
        len: usize,
    },
}

impl GeneratorDescriptor {
    pub fn len(&self) -> usize {
        match self {
            GeneratorDescriptor::Rotation { len, .. }
            | GeneratorDescriptor::SqrtRotation { len, .. }
            | GeneratorDescriptor::Iid { len, .. }
            | GeneratorDescriptor::Symbolic { len, .. } => *len,
            GeneratorDescriptor::Sum { left, .. } => left.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Short family name used in reports.
    pub fn family(&self) -> &'static str {
        match self {
            GeneratorDescriptor::Rotation { .. } => "rotation",
            GeneratorDescriptor::SqrtRotation { .. } => "sqrt_rotation",
            GeneratorDescriptor::Iid { .. } => "iid",
            GeneratorDescriptor::Sum { .. } => "sum",
            GeneratorDescriptor::Symbolic { .. } => "symbolic",
        }
    }

    /// Declared bound on `|x_n|`, when the family is bounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            GeneratorDescriptor::Rotation { .. } | GeneratorDescriptor::SqrtRotation { .. } => {
                Some(1.0)
            }
            GeneratorDescriptor::Iid { dist, .. } => dist.bound(),
            GeneratorDescriptor::Sum { left, right } => Some(left.bound()? + right.bound()?),
            GeneratorDescriptor::Symbolic { substitution, .. } => Some(
                substitution
                    .images
                    .values()
                    .fold(0.0_f64, |m, v| m.max(v.abs())),
            ),
        }
    }

    /// Regenerates the sequence this descriptor describes.
    pub fn generate(&self) -> Result<ComplexSeq> {
        match self {
            GeneratorDescriptor::Rotation { alpha, phase, len } => gen_rotation(*alpha, *phase, *len),
            GeneratorDescriptor::SqrtRotation { alpha, len } => gen_sqrt_rotation(*alpha, *len),
            GeneratorDescriptor::Iid { dist, seed, len } => gen_iid(*dist, *seed, *len),
            GeneratorDescriptor::Sum { left, right } => gen_sum(&left.generate()?, &right.generate()?),
            GeneratorDescriptor::Symbolic {
                source,
                substitution,
                len,
            } => gen_from_symbolic(source, substitution, *len),
        }
    }
}

/// A finite prefix `(x_1, …, x_T)` of a complex sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSeq {
    values: Vec<Complex64>,
    meta: GeneratorDescriptor,
}

impl ComplexSeq {
    /// Wraps raw values; the descriptor's declared length must match.
    pub fn from_parts(values: Vec<Complex64>, meta: GeneratorDescriptor) -> Result<Self> {
        if values.len() != meta.len() {
            return Err(Error::invalid(format!(
                "descriptor declares {} values but {} were supplied",
                meta.len(),
                values.len()
            )));
        }
        Ok(Self { values, meta })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn meta(&self) -> &GeneratorDescriptor {
        &self.meta
    }

    /// `x_n` for `1 ≤ n ≤ T`.
    pub fn at(&self, n: usize) -> Complex64 {
        assert!(n >= 1 && n <= self.values.len(), "index {n} outside 1..={}", self.values.len());
        self.values[n - 1]
    }

    /// `sup_N (1/N) Σ_{n≤N} |x_n|²` over the stored prefix.
    pub fn cesaro_second_moment_sup(&self) -> f64 {
        let mut acc = 0.0;
        let mut sup = 0.0_f64;
        for (i, v) in self.values.iter().enumerate() {
            acc += v.norm_sqr();
            sup = sup.max(acc / (i + 1) as f64);
        }
        sup
    }

    /// `(1/T) Σ |x_n|` over the first `t` values.
    pub fn mean_abs(&self, t: usize) -> f64 {
        self.values[..t].iter().map(|v| v.norm()).sum::<f64>() / t as f64
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::invalid("sequence length T must be at least 1"));
    }
    Ok(())
}

/// `x_n = c·e^{2πinα}` for `n = 1..=len`.
pub fn gen_rotation(alpha: f64, phase: Complex64, len: usize) -> Result<ComplexSeq> {
    check_len(len)?;
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    if (phase.norm() - 1.0).abs() > UNIT_PHASE_TOL {
        return Err(Error::invalid(format!(
            "phase must have unit modulus, |c| = {}",
            phase.norm()
        )));
    }
    let values = (1..=len)
        .into_par_iter()
        .map(|n| phase * cis_turns(frac_mul(n as f64, alpha)))
        .collect();
    Ok(ComplexSeq {
        values,
        meta: GeneratorDescriptor::Rotation { alpha, phase, len },
    })
}

/// `x_n = e^{2πi(n+√n)α}` for `n = 1..=len`, with `√n` in double precision.
pub fn gen_sqrt_rotation(alpha: f64, len: usize) -> Result<ComplexSeq> {
    check_len(len)?;
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    let values = (1..=len)
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            cis_turns(frac_mul(nf, alpha) + frac_mul(nf.sqrt(), alpha))
        })
        .collect();
    Ok(ComplexSeq {
        values,
        meta: GeneratorDescriptor::SqrtRotation { alpha, len },
    })
}

/// Seeded i.i.d. draws from `dist`.
pub fn gen_iid(dist: IidDist, seed: u64, len: usize) -> Result<ComplexSeq> {
    check_len(len)?;
    Ok(ComplexSeq {
        values: iid_values(dist, seed, streams::SEQUENCE, len),
        meta: GeneratorDescriptor::Iid { dist, seed, len },
    })
}

pub(crate) fn iid_values(dist: IidDist, seed: u64, stream: u64, len: usize) -> Vec<Complex64> {
    let mut values = vec![Complex64::new(0.0, 0.0); len];
    values
        .par_chunks_mut(IID_CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut s = CounterStream::new(seed, stream, 2);
            s.seek((c * IID_CHUNK) as u64);
            for v in chunk.iter_mut() {
                *v = dist.draw(&mut s);
            }
        });
    values
}

/// Pointwise sum of two sequences of equal length.
pub fn gen_sum(a: &ComplexSeq, b: &ComplexSeq) -> Result<ComplexSeq> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(ComplexSeq {
        values,
        meta: GeneratorDescriptor::Sum {
            left: Box::new(a.meta.clone()),
            right: Box::new(b.meta.clone()),
        },
    })
}

/// `x_i = sub(symbol_i)` for `i = 1..=len`. The substitution must be centered
/// against the source's declared measure.
pub fn gen_from_symbolic(
    source: &SymbolSource,
    substitution: &Substitution,
    len: usize,
) -> Result<ComplexSeq> {
    check_len(len)?;
    let marginal = source.marginal()?;
    let mean = substitution.expectation(&marginal)?;
    if mean.abs() > ZERO_MEAN_TOL {
        return Err(Error::precondition(format!(
            "substitution has expectation {mean} under the declared measure, expected 0"
        )));
    }
    let values = source
        .symbols(len)?
        .into_iter()
        .map(|c| substitution.image(c).map(|v| Complex64::new(v, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexSeq {
        values,
        meta: GeneratorDescriptor::Symbolic {
            source: source.clone(),
            substitution: substitution.clone(),
            len,
        },
    })
}

/// `e^{2πiθ}` for a rotation fraction, used to build `z_0` values.
pub fn unit(theta: f64) -> Complex64 {
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rotation_trivial_cases() {
        let x = gen_rotation(0.0, Complex64::new(1.0, 0.0), 5).unwrap();
        assert!(x.values().iter().all(|v| close(*v, Complex64::new(1.0, 0.0), 1e-15)));

        let x = gen_rotation(0.5, Complex64::new(1.0, 0.0), 4).unwrap();
        let want = [-1.0, 1.0, -1.0, 1.0];
        for (v, w) in x.values().iter().zip(want) {
            assert!(close(*v, Complex64::new(w, 0.0), 1e-12));
        }

        let x = gen_rotation(0.25, Complex64::new(0.0, 1.0), 2).unwrap();
        assert!(close(x.at(1), Complex64::new(-1.0, 0.0), 1e-12));
        assert!(close(x.at(2), Complex64::new(0.0, -1.0), 1e-12));
    }

    #[test]
    fn rotation_rejects_bad_input() {
        assert!(gen_rotation(0.1, Complex64::new(1.0, 0.0), 0).is_err());
        assert!(gen_rotation(0.1, Complex64::new(1.0 + 1e-6, 0.0), 3).is_err());
        assert!(gen_rotation(0.1, Complex64::new(1.0 + 1e-11, 0.0), 3).is_ok());
    }

    #[test]
    fn sqrt_rotation_first_terms() {
        let a = GOLDEN_ALPHA;
        let x = gen_sqrt_rotation(a, 4).unwrap();
        assert!(close(x.at(1), cis_turns(2.0 * a), 1e-12));
        assert!(close(x.at(4), cis_turns(6.0 * a), 1e-12));
        assert!(gen_sqrt_rotation(a, 0).is_err());
    }

    #[test]
    fn frac_mul_matches_exact_integer_case() {
        assert_eq!(frac_mul(4.0, 0.25), 0.0);
        assert_abs_diff_eq!(frac_mul(3.0, 0.5), 0.5);
        // large n: n·α mod 1 for α = 1/8 is exact in binary
        assert_eq!(frac_mul(1e15 + 3.0, 0.125), 0.375);
    }

    #[test]
    fn iid_is_deterministic_and_chunk_independent() {
        for dist in [
            IidDist::SymmetricTwoPoint,
            IidDist::UniformDisk,
            IidDist::ComplexGaussian,
        ] {
            let a = gen_iid(dist, 42, 200_000).unwrap();
            let b = gen_iid(dist, 42, 200_000).unwrap();
            assert_eq!(a, b);
            let short = gen_iid(dist, 42, 1000).unwrap();
            assert_eq!(&a.values()[..1000], short.values());
            assert_ne!(a, gen_iid(dist, 43, 200_000).unwrap());
        }
    }

    #[test]
    fn unknown_distribution_tag() {
        assert!("cauchy".parse::<IidDist>().is_err());
        assert_eq!(
            "uniform-disk".parse::<IidDist>().unwrap(),
            IidDist::UniformDisk
        );
    }

    #[test]
    fn two_point_mean_is_small() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 5, 1_000_000).unwrap();
        let mean: Complex64 = x.values().iter().sum::<Complex64>() / 1e6;
        assert!(mean.norm() < 0.005, "mean {}", mean.norm());
    }

    #[test]
    fn uniform_disk_second_moment() {
        let x = gen_iid(IidDist::UniformDisk, 9, 100_000).unwrap();
        let m2 = x.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 1e5;
        assert!((m2 - 0.5).abs() < 0.02, "m2 {m2}");
        assert!(x.values().iter().all(|v| v.norm() <= 1.0));
    }

    #[test]
    fn gaussian_second_moment() {
        let x = gen_iid(IidDist::ComplexGaussian, 9, 100_000).unwrap();
        let m2 = x.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 1e5;
        assert!((m2 - 1.0).abs() < 0.03, "m2 {m2}");
    }

    #[test]
    fn sum_identities() {
        let a = gen_sqrt_rotation(GOLDEN_ALPHA, 100).unwrap();
        let neg = ComplexSeq::from_parts(
            a.values().iter().map(|v| -v).collect(),
            a.meta().clone(),
        )
        .unwrap();
        let z = gen_sum(&a, &neg).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));

        let zeros = gen_rotation(0.0, Complex64::new(1.0, 0.0), 100).unwrap();
        let zeros = ComplexSeq::from_parts(vec![Complex64::new(0.0, 0.0); 100], zeros.meta().clone())
            .unwrap();
        assert_eq!(gen_sum(&a, &zeros).unwrap().values(), a.values());

        let short = gen_sqrt_rotation(GOLDEN_ALPHA, 99).unwrap();
        assert!(gen_sum(&a, &short).is_err());
        match gen_sum(&a, &zeros).unwrap().meta() {
            GeneratorDescriptor::Sum { left, right } => {
                assert_eq!(left.family(), "sqrt_rotation");
                assert_eq!(right.family(), "rotation");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symbolic_alternating() {
        let src = SymbolSource::Periodic { point: "ab".into() };
        let sub = Substitution::new([('a', -1.0), ('b', 1.0)]);
        let x = gen_from_symbolic(&src, &sub, 6).unwrap();
        let re: Vec<f64> = x.values().iter().map(|v| v.re).collect();
        assert_eq!(re, vec![-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn symbolic_rejects_nonzero_mean_and_missing_image() {
        let src = SymbolSource::Periodic { point: "ab".into() };
        let off = Substitution::new([('a', -0.4), ('b', 1.0)]);
        // 0.5·(−0.4) + 0.5·1.0 = 0.3
        assert!(matches!(
            gen_from_symbolic(&src, &off, 4),
            Err(Error::Precondition(_))
        ));
        let missing = Substitution::new([('a', 0.0)]);
        assert!(gen_from_symbolic(&src, &missing, 4).is_err());
    }

    #[test]
    fn descriptor_regenerates_bit_identical() {
        let d = GeneratorDescriptor::Sum {
            left: Box::new(GeneratorDescriptor::SqrtRotation {
                alpha: GOLDEN_ALPHA,
                len: 1000,
            }),
            right: Box::new(GeneratorDescriptor::Iid {
                dist: IidDist::ComplexGaussian,
                seed: 3,
                len: 1000,
            }),
        };
        let a = d.generate().unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: GeneratorDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.generate().unwrap(), a);
        assert_eq!(d.bound(), None);
    }

    #[test]
    fn cesaro_sup_reported() {
        let x = gen_iid(IidDist::UniformDisk, 1, 10_000).unwrap();
        let s = x.cesaro_second_moment_sup();
        assert!(s.is_finite() && s <= 1.0);
        let r = gen_rotation(0.3, Complex64::new(1.0, 0.0), 100).unwrap();
        assert_abs_diff_eq!(r.cesaro_second_moment_sup(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rotations_are_unimodular(alpha in 0.0f64..1.0, theta in 0.0f64..1.0, len in 1usize..400) {
            let x = gen_rotation(alpha, unit(theta), len).unwrap();
            prop_assert!(x.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
            let y = gen_sqrt_rotation(alpha, len).unwrap();
            prop_assert!(y.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        }
    }
}
