//! Stationary processes and empirical cancellation runs.
//!
//! A path is a pure function of `(spec, seed)`: every draw comes from the
//! process keystream, so runs reproduce across thread counts. Pointwise
//! cancellation is approximated along finitely many checkpoints and seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{streams, CounterStream};
use crate::seqgen::{frac_mul, iid_values, ComplexSeq, GeneratorDescriptor, IidDist};
use crate::{cis_turns, Complex64, Error, Result};

/// Row sums of a transition matrix must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// `‖πP − π‖_∞` must be within this.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Default tolerance for flagging a path as non-cancelling.
pub const DEFAULT_CANCEL_TOL: f64 = 0.05;
/// Default checkpoints.
pub const DEFAULT_CHECKPOINTS: [usize; 3] = [10_000, 100_000, 1_000_000];
/// Default number of seeds in an ensemble.
pub const DEFAULT_ENSEMBLE: usize = 64;

const MAX_MOMENT_POWER: u32 = 16;

/// A stationary process `Y_n(ω)`, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// `Y_n = ω·z0^n` with `z0 = e^{2πiθ}` and `ω` uniform on the circle.
    Rotation { theta: f64 },
    Iid { dist: IidDist },
    /// Finite-state chain started from `stationary`; `Y_n = values[state_n]`.
    Markov {
        matrix: Vec<Vec<f64>>,
        values: Vec<Complex64>,
        stationary: Vec<f64>,
    },
    /// Pointwise product of two independent processes.
    Product {
        left: Box<ProcessSpec>,
        right: Box<ProcessSpec>,
    },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rotation { theta } => {
                if !theta.is_finite() {
                    return Err(Error::invalid("rotation angle must be finite"));
                }
            }
            Self::Iid { .. } => {}
            Self::Markov {
                matrix,
                values,
                stationary,
            } => validate_markov(matrix, values, stationary)?,
            Self::Product { left, right } => {
                left.validate()?;
                right.validate()?;
            }
        }
        Ok(())
    }

    /// `sup |Y_n|`, or `None` for unbounded laws.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Self::Rotation { .. } => Some(1.0),
            Self::Iid { dist } => dist.bound(),
            Self::Markov { values, .. } => Some(values.iter().map(|v| v.norm()).fold(0.0, f64::max)),
            Self::Product { left, right } => Some(left.bound()? * right.bound()?),
        }
    }
}

fn validate_markov(matrix: &[Vec<f64>], values: &[Complex64], stationary: &[f64]) -> Result<()> {
    let k = matrix.len();
    if k == 0 {
        return Err(Error::invalid("markov chain needs at least one state"));
    }
    if values.len() != k || stationary.len() != k {
        return Err(Error::invalid(format!(
            "markov chain has {k} states but {} values and {} stationary weights",
            values.len(),
            stationary.len()
        )));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::invalid(format!("row {i} has {} entries, expected {k}", row.len())));
        }
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(format!("row {i} has a negative or non-finite entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid(format!("row {i} sums to {s}")));
        }
    }
    if stationary.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("stationary vector has a negative or non-finite entry"));
    }
    let total: f64 = stationary.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::invalid(format!("stationary vector sums to {total}")));
    }
    for j in 0..k {
        let pj: f64 = (0..k).map(|i| stationary[i] * matrix[i][j]).sum();
        if (pj - stationary[j]).abs() > STATIONARY_TOL {
            return Err(Error::invalid(format!(
                "stationary vector is not fixed by the matrix at state {j}: {pj} vs {}",
                stationary[j]
            )));
        }
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("state values must be finite"));
    }
    Ok(())
}

/// `Y_1, …, Y_len` for the given seed.
pub fn simulate_process(spec: &ProcessSpec, seed: u64, len: usize) -> Result<Vec<Complex64>> {
    spec.validate()?;
    Ok(simulate(spec, seed, streams::PROCESS, len))
}

fn child_stream(stream: u64, side: u64) -> u64 {
    stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(side)
}

fn simulate(spec: &ProcessSpec, seed: u64, stream: u64, len: usize) -> Vec<Complex64> {
    match spec {
        ProcessSpec::Rotation { theta } => {
            let mut s = CounterStream::new(seed, stream, 1);
            let omega = s.next_f64();
            (1..=len)
                .into_par_iter()
                .map(|n| cis_turns(omega + frac_mul(n as f64, *theta)))
                .collect()
        }
        ProcessSpec::Iid { dist } => iid_values(*dist, seed, stream, len),
        ProcessSpec::Markov {
            matrix,
            values,
            stationary,
        } => {
            let mut s = CounterStream::new(seed, stream, 1);
            let mut state = sample_index(stationary, s.next_f64());
            let mut out = Vec::with_capacity(len);
            for n in 0..len {
                if n > 0 {
                    state = sample_index(&matrix[state], s.next_f64());
                }
                out.push(values[state]);
            }
            out
        }
        ProcessSpec::Product { left, right } => {
            let a = simulate(left, seed, child_stream(stream, 1), len);
            let b = simulate(right, seed, child_stream(stream, 2), len);
            a.into_iter().zip(b).map(|(p, q)| p * q).collect()
        }
    }
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the last partial sum
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Per-seed running averages `|A_T(ω)|`, `A_T = (1/T) Σ_{n≤T} x_n Y_n(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancellationRun {
    pub x_descriptor: GeneratorDescriptor,
    pub process: ProcessSpec,
    pub seeds: Vec<u64>,
    pub ts: Vec<usize>,
    /// `per_path[s][j] = |A_{ts[j]}(seeds[s])|`.
    pub per_path: Vec<Vec<f64>>,
    /// Root-mean-square of `per_path` over seeds, per checkpoint.
    pub l2_estimate: Vec<f64>,
    pub tolerance: f64,
    /// Seeds whose `|A_T|` is not below `tolerance` at the two largest
    /// checkpoints.
    pub non_cancelling: Vec<u64>,
    /// Whether `|A_T| ≤ M·(1/T)Σ|x_n|` held everywhere; `None` for unbounded
    /// processes.
    pub domination_holds: Option<bool>,
}

fn check_checkpoints(x: &ComplexSeq, ts: &[usize]) -> Result<usize> {
    if ts.is_empty() || ts.contains(&0) {
        return Err(Error::invalid("checkpoints must be a non-empty list of positive T"));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    let t_max = *ts.last().unwrap();
    if t_max > x.len() {
        return Err(Error::InsufficientData {
            required: t_max,
            available: x.len(),
        });
    }
    Ok(t_max)
}

fn running_averages(x: &[Complex64], y: &[Complex64], ts: &[usize]) -> Vec<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(ts.len());
    let mut next = 0;
    for n in 0..*ts.last().unwrap() {
        acc += x[n] * y[n];
        if n + 1 == ts[next] {
            out.push(acc.norm() / ts[next] as f64);
            next += 1;
        }
    }
    out
}

/// Root-mean-square per column, summed in sorted order so that the result
/// does not depend on the seed order.
fn rms_columns(per_path: &[Vec<f64>], cols: usize) -> Vec<f64> {
    (0..cols)
        .map(|j| {
            let mut sq: Vec<f64> = per_path.iter().map(|r| r[j] * r[j]).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()
        })
        .collect()
}

pub fn pointwise_cancel(
    x: &ComplexSeq,
    spec: &ProcessSpec,
    seeds: &[u64],
    ts: &[usize],
    tolerance: f64,
) -> Result<CancellationRun> {
    spec.validate()?;
    let t_max = check_checkpoints(x, ts)?;
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let xv = &x.values()[..t_max];
    let per_path: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let y = simulate(spec, seed, streams::PROCESS, t_max);
            running_averages(xv, &y, ts)
        })
        .collect();

    let l2_estimate = rms_columns(&per_path, ts.len());
    let tail = ts.len().saturating_sub(2);
    let non_cancelling = seeds
        .iter()
        .zip(&per_path)
        .filter(|(_, row)| row[tail..].iter().any(|a| *a >= tolerance))
        .map(|(s, _)| *s)
        .collect();

    let domination_holds = spec.bound().map(|m| {
        let mut abs_sum = 0.0;
        let mut bounds = Vec::with_capacity(ts.len());
        let mut next = 0;
        for (n, v) in xv.iter().enumerate() {
            abs_sum += v.norm();
            if n + 1 == ts[next] {
                bounds.push(m * abs_sum / ts[next] as f64);
                next += 1;
            }
        }
        per_path.iter().all(|row| {
            row.iter()
                .zip(&bounds)
                .all(|(a, b)| *a <= b * (1.0 + 1e-12) + 1e-15)
        })
    });

    Ok(CancellationRun {
        x_descriptor: x.meta().clone(),
        process: spec.clone(),
        seeds: seeds.to_vec(),
        ts: ts.to_vec(),
        per_path,
        l2_estimate,
        tolerance,
        non_cancelling,
        domination_holds,
    })
}

/// Ensemble RMS of `|A_T|` with a delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurve {
    pub ts: Vec<usize>,
    pub ensemble_size: usize,
    pub rms: Vec<f64>,
    pub std_err: Vec<f64>,
}

/// Uses seeds `0..ensemble_size`.
pub fn mean_cancel(
    x: &ComplexSeq,
    spec: &ProcessSpec,
    ensemble_size: usize,
    ts: &[usize],
) -> Result<MeanCurve> {
    if ensemble_size < 2 {
        return Err(Error::invalid("ensemble size must be at least 2"));
    }
    let seeds: Vec<u64> = (0..ensemble_size as u64).collect();
    let run = pointwise_cancel(x, spec, &seeds, ts, DEFAULT_CANCEL_TOL)?;
    let k = ensemble_size as f64;
    let std_err = (0..ts.len())
        .map(|j| {
            let sq: Vec<f64> = run.per_path.iter().map(|r| r[j] * r[j]).collect();
            let mean = sq.iter().sum::<f64>() / k;
            let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let se_ms = (var / k).sqrt();
            if mean > 0.0 {
                se_ms / (2.0 * mean.sqrt())
            } else {
                0.0
            }
        })
        .collect();
    Ok(MeanCurve {
        ts: ts.to_vec(),
        ensemble_size,
        rms: run.l2_estimate,
        std_err,
    })
}

/// One entry `(1/T) Σ_{n≤T} x_n^p · conj(x_{n+τ})^q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub p: u32,
    pub q: u32,
    pub tau: usize,
    pub value: Complex64,
}

pub fn empirical_moments(
    x: &ComplexSeq,
    powers: &[(u32, u32)],
    lags: &[usize],
    t: usize,
) -> Result<Vec<MomentEntry>> {
    if t == 0 {
        return Err(Error::invalid("T must be positive"));
    }
    if let Some((p, q)) = powers
        .iter()
        .find(|(p, q)| *p > MAX_MOMENT_POWER || *q > MAX_MOMENT_POWER)
    {
        return Err(Error::invalid(format!(
            "powers ({p}, {q}) exceed the supported maximum {MAX_MOMENT_POWER}"
        )));
    }
    let required = t + lags.iter().copied().max().unwrap_or(0);
    if x.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: x.len(),
        });
    }
    let v = x.values();
    let mut out = Vec::with_capacity(powers.len() * lags.len());
    for &(p, q) in powers {
        for &tau in lags {
            let sum = crate::chunked_sum(t, 1 << 16, |n| {
                v[n].powu(p) * v[n + tau].conj().powu(q)
            });
            out.push(MomentEntry {
                p,
                q,
                tau,
                value: sum / t as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{gen_iid, gen_rotation, gen_sqrt_rotation, GOLDEN_ALPHA};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_state() -> ProcessSpec {
        ProcessSpec::Markov {
            matrix: vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            values: vec![c(1.0, 0.0), c(-3.0, 0.0)],
            stationary: vec![0.75, 0.25],
        }
    }

    #[test]
    fn rotation_with_unit_z0_is_constant() {
        let y = simulate_process(&ProcessSpec::Rotation { theta: 0.0 }, 5, 100).unwrap();
        assert!((y[0].norm() - 1.0).abs() < 1e-15);
        assert!(y.iter().all(|v| (v - y[0]).norm() < 1e-15));
    }

    #[test]
    fn identity_markov_is_constant() {
        let spec = ProcessSpec::Markov {
            matrix: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            values: vec![c(2.0, 1.0), c(0.0, 0.0), c(-1.0, 0.0)],
            stationary: vec![1.0, 0.0, 0.0],
        };
        let y = simulate_process(&spec, 9, 500).unwrap();
        assert!(y.iter().all(|v| *v == c(2.0, 1.0)));
    }

    #[test]
    fn markov_validation() {
        let bad_row = ProcessSpec::Markov {
            matrix: vec![vec![0.5, 0.4], vec![0.0, 1.0]],
            values: vec![c(1.0, 0.0); 2],
            stationary: vec![0.0, 1.0],
        };
        assert!(simulate_process(&bad_row, 0, 10).is_err());
        let not_fixed = ProcessSpec::Markov {
            matrix: vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            values: vec![c(1.0, 0.0); 2],
            stationary: vec![0.5, 0.5],
        };
        assert!(simulate_process(&not_fixed, 0, 10).is_err());
        let shape = ProcessSpec::Markov {
            matrix: vec![vec![1.0]],
            values: vec![c(1.0, 0.0); 2],
            stationary: vec![1.0],
        };
        assert!(shape.validate().is_err());
        assert!(two_state().validate().is_ok());
        assert_eq!(two_state().bound(), Some(3.0));
    }

    #[test]
    fn iid_lag_one_correlation_is_small() {
        let y = simulate_process(&ProcessSpec::Iid { dist: IidDist::SymmetricTwoPoint }, 1, 1_000_000).unwrap();
        let r: Complex64 = y.windows(2).map(|w| w[1] * w[0].conj()).sum::<Complex64>() / 999_999.0;
        assert!(r.norm() < 0.005, "lag-1 correlation {}", r.norm());
    }

    #[test]
    fn paths_are_deterministic() {
        let spec = ProcessSpec::Product {
            left: Box::new(two_state()),
            right: Box::new(ProcessSpec::Rotation { theta: 0.3 }),
        };
        assert_eq!(simulate_process(&spec, 3, 1000).unwrap(), simulate_process(&spec, 3, 1000).unwrap());
        assert_ne!(simulate_process(&spec, 3, 1000).unwrap(), simulate_process(&spec, 4, 1000).unwrap());
        assert_eq!(spec.bound(), Some(3.0));
        let unbounded = ProcessSpec::Iid { dist: IidDist::ComplexGaussian };
        assert_eq!(unbounded.bound(), None);
    }

    #[test]
    fn product_factors_are_independent() {
        let spec = ProcessSpec::Product {
            left: Box::new(ProcessSpec::Iid { dist: IidDist::SymmetricTwoPoint }),
            right: Box::new(ProcessSpec::Iid { dist: IidDist::SymmetricTwoPoint }),
        };
        let y = simulate_process(&spec, 0, 10_000).unwrap();
        // identical factors would square to a constant 1
        assert!(y.iter().any(|v| v.re < 0.0));
    }

    #[test]
    fn stationarity_of_first_two_moments() {
        let specs = [
            ProcessSpec::Rotation { theta: GOLDEN_ALPHA },
            ProcessSpec::Iid { dist: IidDist::UniformDisk },
            two_state(),
            ProcessSpec::Product {
                left: Box::new(two_state()),
                right: Box::new(ProcessSpec::Rotation { theta: 0.25 }),
            },
        ];
        let seeds = 4000u64;
        for spec in &specs {
            let paths: Vec<Vec<Complex64>> = (0..seeds).map(|s| simulate_process(spec, s, 1002).unwrap()).collect();
            for (re_part, f) in [(true, 0), (false, 0), (true, 1)] {
                let stat = |i: usize| -> Vec<f64> {
                    paths
                        .iter()
                        .map(|p| match (re_part, f) {
                            (true, 0) => p[i].re,
                            (false, 0) => p[i].im,
                            _ => p[i].norm_sqr(),
                        })
                        .collect()
                };
                let (a, b) = (stat(1), stat(1001));
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                let var = |v: &[f64]| {
                    let m = mean(v);
                    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
                };
                let se = ((var(&a) + var(&b)) / seeds as f64).sqrt();
                assert!(
                    (mean(&a) - mean(&b)).abs() <= 3.0 * se + 1e-12,
                    "{spec:?}: {} vs {} (se {se})",
                    mean(&a),
                    mean(&b)
                );
            }
        }
    }

    #[test]
    fn conjugate_rotation_gives_constant_average() {
        let alpha = GOLDEN_ALPHA;
        let x = gen_rotation(alpha, c(1.0, 0.0), 10_000).unwrap();
        let spec = ProcessSpec::Rotation { theta: -alpha };
        let run = pointwise_cancel(&x, &spec, &[1, 2, 3], &[10, 1000, 10_000], 0.05).unwrap();
        for row in &run.per_path {
            for a in row {
                assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-12);
            }
        }
        assert_eq!(run.non_cancelling, vec![1, 2, 3]);
        assert_eq!(run.domination_holds, Some(true));
        let curve = mean_cancel(&x, &spec, 8, &[100, 10_000]).unwrap();
        for r in &curve.rms {
            assert_abs_diff_eq!(*r, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sqrt_rotation_cancels_against_rotations() {
        let alpha = GOLDEN_ALPHA;
        let x = gen_sqrt_rotation(alpha, 1_000_000).unwrap();
        for m in [-2i32, -1, 0, 1, 2] {
            let spec = ProcessSpec::Rotation { theta: m as f64 * alpha };
            let run = pointwise_cancel(&x, &spec, &[0, 1], &[1_000_000], 0.02).unwrap();
            for row in &run.per_path {
                assert!(row[0] < 0.02, "m = {m}: |A_T| = {}", row[0]);
            }
            assert!(run.non_cancelling.is_empty());
        }
    }

    #[test]
    fn independent_iid_cancel() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 17, 1_000_000).unwrap();
        let spec = ProcessSpec::Iid { dist: IidDist::SymmetricTwoPoint };
        let run = pointwise_cancel(&x, &spec, &[17, 18], &[1_000_000], 0.005).unwrap();
        for row in &run.per_path {
            assert!(row[0] < 0.005);
        }
    }

    #[test]
    fn iid_mean_curve_scales_like_inverse_sqrt() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 99, 40_000).unwrap();
        let spec = ProcessSpec::Iid { dist: IidDist::UniformDisk };
        let curve = mean_cancel(&x, &spec, 256, &[10_000, 40_000]).unwrap();
        let ratio = curve.rms[1] / curve.rms[0];
        assert!((ratio - 0.5).abs() < 0.15, "ratio {ratio}");
        assert!(curve.std_err.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn unbounded_process_skips_domination() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 1, 100).unwrap();
        let run = pointwise_cancel(&x, &ProcessSpec::Iid { dist: IidDist::ComplexGaussian }, &[0], &[100], 0.1).unwrap();
        assert_eq!(run.domination_holds, None);
    }

    #[test]
    fn checkpoint_validation() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 1, 100).unwrap();
        let spec = ProcessSpec::Rotation { theta: 0.1 };
        assert!(pointwise_cancel(&x, &spec, &[0], &[101], 0.1).is_err());
        assert!(pointwise_cancel(&x, &spec, &[0], &[50, 20], 0.1).is_err());
        assert!(pointwise_cancel(&x, &spec, &[], &[50], 0.1).is_err());
        assert!(mean_cancel(&x, &spec, 1, &[50]).is_err());
    }

    #[test]
    fn moments_of_rotation_and_sqrt_rotation() {
        let alpha = GOLDEN_ALPHA;
        let x = gen_rotation(alpha, c(1.0, 0.0), 1000).unwrap();
        let m = empirical_moments(&x, &[(1, 1)], &[0, 3, 17], 500).unwrap();
        for e in &m {
            assert!((e.value - cis_turns(-(e.tau as f64) * alpha)).norm() < 1e-12);
        }
        let y = gen_sqrt_rotation(alpha, 1_000_010).unwrap();
        let m = empirical_moments(&y, &[(1, 0), (1, 1)], &[3], 1_000_000).unwrap();
        assert!(m[0].value.norm() < 0.01);
        assert!((m[1].value - cis_turns(-3.0 * alpha)).norm() < 0.05);
        assert!(empirical_moments(&y, &[(17, 0)], &[0], 10).is_err());
        assert!(empirical_moments(&x, &[(1, 1)], &[1], 1000).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: ProcessSpec = serde_json::from_str(
            r#"{"kind":"product","left":{"kind":"rotation","theta":0.25},"right":{"kind":"iid","dist":"symmetric-two-point"}}"#,
        )
        .unwrap();
        assert!(matches!(spec, ProcessSpec::Product { .. }));
        assert!(serde_json::from_str::<ProcessSpec>(r#"{"kind":"levy"}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn l2_invariant_under_seed_permutation(seeds in proptest::collection::vec(0u64..10_000, 2..12), rot in 0usize..12) {
            let x = gen_iid(IidDist::UniformDisk, 5, 2000).unwrap();
            let spec = ProcessSpec::Iid { dist: IidDist::SymmetricTwoPoint };
            let a = pointwise_cancel(&x, &spec, &seeds, &[500, 2000], 0.1).unwrap();
            let mut permuted = seeds.clone();
            permuted.rotate_left(rot % seeds.len());
            permuted.reverse();
            let b = pointwise_cancel(&x, &spec, &permuted, &[500, 2000], 0.1).unwrap();
            prop_assert_eq!(&a.l2_estimate, &b.l2_estimate);
            for (j, l2) in a.l2_estimate.iter().enumerate() {
                let ms = a.per_path.iter().map(|r| r[j] * r[j]).sum::<f64>() / seeds.len() as f64;
                prop_assert!((l2 * l2 - ms).abs() <= 1e-14 * ms.max(1e-300));
            }
        }

        #[test]
        fn domination_for_bounded_specs(seed in 0u64..1000, theta in -1.0f64..1.0) {
            let x = gen_sqrt_rotation(0.3, 3000).unwrap();
            let spec = ProcessSpec::Product {
                left: Box::new(two_state()),
                right: Box::new(ProcessSpec::Rotation { theta }),
            };
            let run = pointwise_cancel(&x, &spec, &[seed], &[10, 100, 3000], 0.1).unwrap();
            prop_assert_eq!(run.domination_holds, Some(true));
        }
    }
}
