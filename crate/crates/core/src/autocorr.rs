//! Windowed auto-correlation `ρ_N(τ) = (1/N) Σ_{n=1}^N x_{n+τ}·conj(x_n)` and
//! the bad-lag density criteria built on it.
//!
//! For a window `N` the lags `0..=τ_max` come from one circular
//! cross-correlation of `x[1..N]` against `x[1..N+τ_max]`, padded to a power
//! of two. When that transform would exceed the memory budget the lag range
//! is split into chunks, each correlated against its own slice of `x`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::seqgen::{ComplexSeq, GeneratorDescriptor};
use crate::{Complex64, Error, Result};

/// Default memory budget for correlation buffers (2 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;
/// Largest `N_hi` accepted by the dense (every-`N`) density mode.
pub const DENSE_MAX_WINDOW: usize = 10_000;
/// Default geometric ratio between sampled windows.
pub const DEFAULT_WINDOW_RATIO: f64 = 2.0;

// two complex buffers of the padded length are live per transform
const BYTES_PER_POINT: usize = 2 * std::mem::size_of::<Complex64>();

/// Memory limits for the fast correlation path.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationPlan {
    pub memory_budget: usize,
}

impl Default for CorrelationPlan {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Table of `ρ_N(τ)` for a set of windows and lags `0..=tau_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrProfile {
    pub ns: Vec<usize>,
    pub tau_max: usize,
    /// `values[i][τ] = ρ_{ns[i]}(τ)`.
    pub values: Vec<Vec<Complex64>>,
    pub source: GeneratorDescriptor,
}

impl AutocorrProfile {
    /// `ρ_N(τ)` for a window present in the profile.
    pub fn get(&self, n: usize, tau: usize) -> Option<Complex64> {
        let i = self.ns.iter().position(|&m| m == n)?;
        self.values[i].get(tau).copied()
    }

    /// Windows of the profile inside `[lo, hi]`.
    pub fn windows_in(&self, lo: usize, hi: usize) -> Vec<usize> {
        self.ns.iter().copied().filter(|n| (lo..=hi).contains(n)).collect()
    }
}

/// Sample count `max(Ns) + τ_max` needed for a profile.
pub fn required_len(ns: &[usize], tau_max: usize) -> usize {
    ns.iter().copied().max().unwrap_or(0) + tau_max
}

/// Computes `ρ_N(τ)` for every `N` in `ns` and `τ = 0..=tau_max`.
pub fn autocorr_profile(x: &ComplexSeq, ns: &[usize], tau_max: usize) -> Result<AutocorrProfile> {
    autocorr_profile_with(x, ns, tau_max, CorrelationPlan::default())
}

pub fn autocorr_profile_with(
    x: &ComplexSeq,
    ns: &[usize],
    tau_max: usize,
    plan: CorrelationPlan,
) -> Result<AutocorrProfile> {
    if ns.is_empty() {
        return Err(Error::invalid("at least one window size is required"));
    }
    if ns.contains(&0) {
        return Err(Error::invalid("window sizes must be positive"));
    }
    let required = required_len(ns, tau_max);
    if x.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: x.len(),
        });
    }
    let concurrent = ns.len().min(rayon::current_num_threads()).max(1);
    let per_task = plan.memory_budget / concurrent;
    let values = ns
        .par_iter()
        .map(|&n| correlate_window(x.values(), n, tau_max, per_task))
        .collect::<Result<Vec<_>>>()?;
    Ok(AutocorrProfile {
        ns: ns.to_vec(),
        tau_max,
        values,
        source: x.meta().clone(),
    })
}

/// `ρ_n(τ)` for `τ = 0..=tau_max` from raw samples.
pub(crate) fn correlate_window(
    x: &[Complex64],
    n: usize,
    tau_max: usize,
    budget: usize,
) -> Result<Vec<Complex64>> {
    let lags = tau_max + 1;
    let max_points = (budget / BYTES_PER_POINT).max(2);
    // largest power of two within budget, but no larger than needed
    let full = (n + lags - 1).next_power_of_two();
    let mut len = full;
    while len > max_points {
        len /= 2;
    }
    if len < n + 1 {
        return Err(Error::precondition(format!(
            "memory budget of {budget} bytes cannot hold a window of {n} samples"
        )));
    }
    let chunk = len - n + 1;

    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(len);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);

    let mut head = vec![Complex64::new(0.0, 0.0); len];
    head[..n].copy_from_slice(&x[..n]);
    fwd.process(&mut head);

    let scale = 1.0 / (len as f64 * n as f64);
    let mut out = Vec::with_capacity(lags);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut start = 0;
    while start < lags {
        let take = chunk.min(lags - start);
        let span = n + take - 1;
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        buf[..span].copy_from_slice(&x[start..start + span]);
        fwd.process(&mut buf);
        for (b, h) in buf.iter_mut().zip(&head) {
            *b *= h.conj();
        }
        inv.process(&mut buf);
        out.extend(buf[..take].iter().map(|v| v * scale));
        start += take;
    }
    Ok(out)
}

/// `N_lo, N_lo·r, N_lo·r², … < N_hi`, then `N_hi`.
pub fn geometric_windows(n_lo: usize, n_hi: usize, ratio: f64) -> Result<Vec<usize>> {
    if n_lo == 0 || n_hi < n_lo {
        return Err(Error::invalid(format!("invalid window range [{n_lo}, {n_hi}]")));
    }
    if !(ratio > 1.0) {
        return Err(Error::invalid("window ratio must exceed 1"));
    }
    let mut out = vec![n_lo];
    let mut cur = n_lo as f64;
    loop {
        cur *= ratio;
        let next = cur.round() as usize;
        if next >= n_hi {
            break;
        }
        if next > *out.last().unwrap() {
            out.push(next);
        }
    }
    if *out.last().unwrap() != n_hi {
        out.push(n_hi);
    }
    Ok(out)
}

/// How the window quantifier was instantiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Only the profile's windows inside `[N_lo, N_hi]`; the count is a lower
    /// bound on the every-`N` count.
    Sampled,
    /// Every integer `N` in `[N_lo, N_hi]`.
    Dense,
}

/// Bad-lag count `|{0 < τ ≤ T : ∃ N ∈ W, |ρ_N(τ)| ≥ ε}|` and its density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub epsilon: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    /// Lag horizon.
    pub t: usize,
    pub bad_count: usize,
    pub density: f64,
    pub mode: WindowMode,
    /// Windows actually inspected (empty in dense mode, where it is every
    /// integer in `[n_lo, n_hi]`).
    pub windows: Vec<usize>,
    /// First few bad lags, for inspection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_taus: Option<Vec<usize>>,
}

const BAD_TAU_SAMPLE: usize = 64;

fn report(
    epsilon: f64,
    n_lo: usize,
    n_hi: usize,
    t: usize,
    mode: WindowMode,
    windows: Vec<usize>,
    is_bad: impl Fn(usize) -> bool,
) -> DensityReport {
    let mut bad_count = 0;
    let mut sample = Vec::new();
    for tau in 1..=t {
        if is_bad(tau) {
            bad_count += 1;
            if sample.len() < BAD_TAU_SAMPLE {
                sample.push(tau);
            }
        }
    }
    DensityReport {
        epsilon,
        n_lo,
        n_hi,
        t,
        bad_count,
        density: bad_count as f64 / t as f64,
        mode,
        windows,
        bad_taus: Some(sample),
    }
}

fn check_density_args(epsilon: f64, t: usize, tau_max: usize) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if t == 0 {
        return Err(Error::invalid("lag horizon T must be at least 1"));
    }
    if t > tau_max {
        return Err(Error::InsufficientData {
            required: t,
            available: tau_max,
        });
    }
    Ok(())
}

/// Density of bad lags over the profile's windows inside `[n_lo, n_hi]`.
/// Lag `τ = 0` is never counted.
pub fn density_bad_tau(
    profile: &AutocorrProfile,
    epsilon: f64,
    n_lo: usize,
    n_hi: usize,
    t: usize,
) -> Result<DensityReport> {
    check_density_args(epsilon, t, profile.tau_max)?;
    let rows: Vec<usize> = profile
        .ns
        .iter()
        .enumerate()
        .filter(|(_, n)| (n_lo..=n_hi).contains(*n))
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "no profile window lies in [{n_lo}, {n_hi}]"
        )));
    }
    let windows = rows.iter().map(|&i| profile.ns[i]).collect();
    Ok(report(epsilon, n_lo, n_hi, t, WindowMode::Sampled, windows, |tau| {
        rows.iter().any(|&i| profile.values[i][tau].norm() >= epsilon)
    }))
}

/// Subsequence density: windows `T_{k_r}` for `r_lo ≤ r ≤ r_hi` of a
/// declared subsequence `k_r` of `T_k`, horizon `T_{k_l}`. Indices `r` and
/// `l` are 0-based positions in `subseq`.
pub fn subseq_density(
    profile: &AutocorrProfile,
    tk: &[usize],
    subseq: &[usize],
    epsilon: f64,
    r_lo: usize,
    r_hi: usize,
    l: usize,
) -> Result<DensityReport> {
    if tk.windows(2).any(|w| w[0] >= w[1]) || tk.first() == Some(&0) {
        return Err(Error::invalid("T_k must be positive and strictly increasing"));
    }
    if subseq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("subsequence indices must be strictly increasing"));
    }
    if subseq.iter().any(|&k| k >= tk.len()) {
        return Err(Error::invalid("subsequence index outside T_k"));
    }
    if r_lo > r_hi || r_hi >= subseq.len() || l >= subseq.len() {
        return Err(Error::invalid(format!(
            "r range [{r_lo}, {r_hi}] or l = {l} outside the subsequence"
        )));
    }
    let windows: Vec<usize> = (r_lo..=r_hi).map(|r| tk[subseq[r]]).collect();
    let t = tk[subseq[l]];
    check_density_args(epsilon, t, profile.tau_max)?;
    let rows = windows
        .iter()
        .map(|w| {
            profile
                .ns
                .iter()
                .position(|n| n == w)
                .ok_or_else(|| Error::invalid(format!("window {w} missing from profile")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(
        epsilon,
        windows[0],
        *windows.last().unwrap(),
        t,
        WindowMode::Sampled,
        windows,
        |tau| rows.iter().any(|&i| profile.values[i][tau].norm() >= epsilon),
    ))
}

/// `max_{N_lo ≤ N ≤ N_hi} |ρ_N(τ)|` for `τ = 0..=tau_max`, over every integer
/// window, by running sums. Cost is `O(N_hi·τ_max)`.
pub fn dense_window_max(
    x: &ComplexSeq,
    n_lo: usize,
    n_hi: usize,
    tau_max: usize,
) -> Result<Vec<f64>> {
    if n_lo == 0 || n_hi < n_lo {
        return Err(Error::invalid(format!("invalid window range [{n_lo}, {n_hi}]")));
    }
    if n_hi > DENSE_MAX_WINDOW {
        return Err(Error::invalid(format!(
            "dense mode supports N_hi ≤ {DENSE_MAX_WINDOW}, got {n_hi}"
        )));
    }
    let required = n_hi + tau_max;
    if x.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: x.len(),
        });
    }
    let v = x.values();
    Ok((0..=tau_max)
        .into_par_iter()
        .map(|tau| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut best = 0.0_f64;
            for n in 0..n_hi {
                acc += v[n + tau] * v[n].conj();
                if n + 1 >= n_lo {
                    best = best.max(acc.norm() / (n + 1) as f64);
                }
            }
            best
        })
        .collect())
}

/// Dense-mode counterpart of [`density_bad_tau`].
pub fn density_bad_tau_dense(
    x: &ComplexSeq,
    epsilon: f64,
    n_lo: usize,
    n_hi: usize,
    t: usize,
) -> Result<DensityReport> {
    check_density_args(epsilon, t, t)?;
    let maxima = dense_window_max(x, n_lo, n_hi, t)?;
    Ok(report(epsilon, n_lo, n_hi, t, WindowMode::Dense, Vec::new(), |tau| {
        maxima[tau] >= epsilon
    }))
}

/// Finite proxy `(1/T) Σ_{τ=0}^{T−1} |ρ_N(τ)|` of the atom functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomFunctional {
    pub t: usize,
    pub n: usize,
    pub value: f64,
    /// The `τ = 0` term `|ρ_N(0)|/T`, reported so it can be excluded.
    pub lag0_term: f64,
}

impl AtomFunctional {
    pub fn without_lag0(&self) -> f64 {
        self.value - self.lag0_term
    }
}

pub fn atom_functional(x: &ComplexSeq, t: usize, n: usize) -> Result<AtomFunctional> {
    if t == 0 || n == 0 {
        return Err(Error::invalid("T and N must be positive"));
    }
    let profile = autocorr_profile(x, &[n], t - 1)?;
    atom_functional_from_profile(&profile, t, n)
}

pub fn atom_functional_from_profile(
    profile: &AutocorrProfile,
    t: usize,
    n: usize,
) -> Result<AtomFunctional> {
    let i = profile
        .ns
        .iter()
        .position(|&m| m == n)
        .ok_or_else(|| Error::invalid(format!("window {n} missing from profile")))?;
    if t == 0 || t - 1 > profile.tau_max {
        return Err(Error::InsufficientData {
            required: t,
            available: profile.tau_max + 1,
        });
    }
    let row = &profile.values[i];
    let sum: f64 = row[..t].iter().map(|v| v.norm()).sum();
    Ok(AtomFunctional {
        t,
        n,
        value: sum / t as f64,
        lag0_term: row[0].norm() / t as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{gen_iid, gen_rotation, IidDist, GOLDEN_ALPHA};
    use crate::cis_turns;
    use proptest::prelude::*;

    /// Independent O(N·τ_max) oracle.
    fn naive(x: &[Complex64], n: usize, tau_max: usize) -> Vec<Complex64> {
        (0..=tau_max)
            .map(|tau| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += x[i + tau] * x[i].conj();
                }
                acc / n as f64
            })
            .collect()
    }

    #[test]
    fn ones_profile() {
        let x = gen_rotation(0.0, Complex64::new(1.0, 0.0), 300).unwrap();
        let p = autocorr_profile(&x, &[10, 100, 200], 100).unwrap();
        for row in &p.values {
            assert!(row.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        }
    }

    #[test]
    fn rotation_profile_is_window_independent() {
        let a = GOLDEN_ALPHA;
        let x = gen_rotation(a, Complex64::new(1.0, 0.0), 5000).unwrap();
        let p = autocorr_profile(&x, &[7, 100, 1000, 4000], 500).unwrap();
        for row in &p.values {
            for (tau, v) in row.iter().enumerate() {
                assert!((v - cis_turns(tau as f64 * a)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn insufficient_prefix_reports_requirement() {
        let x = gen_rotation(0.1, Complex64::new(1.0, 0.0), 100).unwrap();
        match autocorr_profile(&x, &[80], 30) {
            Err(Error::InsufficientData { required, available }) => {
                assert_eq!((required, available), (110, 100));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chunked_matches_unchunked() {
        let x = gen_iid(IidDist::ComplexGaussian, 4, 3000).unwrap();
        let whole = correlate_window(x.values(), 700, 1500, usize::MAX).unwrap();
        // budget for 1024 points forces many lag chunks
        let chunked = correlate_window(x.values(), 700, 1500, 1024 * BYTES_PER_POINT).unwrap();
        assert_eq!(whole.len(), chunked.len());
        for (a, b) in whole.iter().zip(&chunked) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(correlate_window(x.values(), 700, 10, 512 * BYTES_PER_POINT).is_err());
    }

    #[test]
    fn lag_zero_is_mean_square() {
        let x = gen_iid(IidDist::UniformDisk, 8, 2000).unwrap();
        let p = autocorr_profile(&x, &[1000], 5).unwrap();
        let ms = x.values()[..1000].iter().map(|v| v.norm_sqr()).sum::<f64>() / 1000.0;
        let r0 = p.values[0][0];
        assert!(r0.im.abs() < 1e-12 && r0.re >= 0.0);
        assert!((r0.re - ms).abs() < 1e-12);
    }

    #[test]
    fn geometric_sampling() {
        assert_eq!(geometric_windows(10_000, 20_000, 2.0).unwrap(), vec![10_000, 20_000]);
        assert_eq!(geometric_windows(100, 1000, 2.0).unwrap(), vec![100, 200, 400, 800, 1000]);
        assert_eq!(geometric_windows(5, 5, 2.0).unwrap(), vec![5]);
        assert!(geometric_windows(0, 5, 2.0).is_err());
        assert!(geometric_windows(5, 10, 1.0).is_err());
    }

    #[test]
    fn density_of_ones_is_one() {
        let x = gen_rotation(0.0, Complex64::new(1.0, 0.0), 400).unwrap();
        let p = autocorr_profile(&x, &[50, 100, 200], 200).unwrap();
        let r = density_bad_tau(&p, 0.5, 50, 200, 200).unwrap();
        assert_eq!(r.bad_count, 200);
        assert_eq!(r.density, 1.0);
        assert!(density_bad_tau(&p, 0.5, 300, 400, 10).is_err());
        assert!(density_bad_tau(&p, 0.5, 50, 200, 201).is_err());
    }

    #[test]
    fn rotation_subsequence_density_is_one() {
        let x = gen_rotation(0.37, Complex64::new(1.0, 0.0), 4000).unwrap();
        let tk: Vec<usize> = (1..=11).map(|k| 1 << k).collect();
        let p = autocorr_profile(&x, &tk[..10], 2048).unwrap();
        let r = subseq_density(&p, &tk, &[2, 4, 6, 9, 10], 0.99, 0, 3, 4).unwrap();
        assert_eq!(r.t, 2048);
        assert_eq!(r.density, 1.0);
        assert_eq!(r.windows, vec![8, 32, 128, 1024]);
    }

    #[test]
    fn subsequence_with_unit_steps_matches_contiguous() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 3, 600).unwrap();
        let tk: Vec<usize> = (1..=400).collect();
        let ns: Vec<usize> = (50..=60).collect();
        let p = autocorr_profile(&x, &ns, 200).unwrap();
        let subseq: Vec<usize> = (0..400).collect();
        let a = subseq_density(&p, &tk, &subseq, 0.2, 49, 59, 199).unwrap();
        let b = density_bad_tau(&p, 0.2, 50, 60, 200).unwrap();
        assert_eq!(a.bad_count, b.bad_count);
        assert_eq!(a.t, b.t);
    }

    #[test]
    fn subsequence_validation() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 3, 600).unwrap();
        let p = autocorr_profile(&x, &[4, 8], 100).unwrap();
        let tk = [2, 4, 8, 16];
        assert!(subseq_density(&p, &[4, 2], &[0], 0.1, 0, 0, 0).is_err());
        assert!(subseq_density(&p, &tk, &[2, 1], 0.1, 0, 0, 0).is_err());
        assert!(subseq_density(&p, &tk, &[1, 5], 0.1, 0, 0, 0).is_err());
        assert!(subseq_density(&p, &tk, &[0, 1], 0.1, 0, 1, 1).is_err());
        assert!(subseq_density(&p, &tk, &[1, 2, 3], 0.1, 0, 1, 2).is_ok());
    }

    #[test]
    fn dense_mode_matches_all_windows() {
        let x = gen_iid(IidDist::SymmetricTwoPoint, 11, 500).unwrap();
        let ns: Vec<usize> = (40..=60).collect();
        let p = autocorr_profile(&x, &ns, 100).unwrap();
        let sampled = density_bad_tau(&p, 0.25, 40, 60, 100).unwrap();
        let dense = density_bad_tau_dense(&x, 0.25, 40, 60, 100).unwrap();
        assert_eq!(sampled.bad_count, dense.bad_count);
        assert!(dense_window_max(&x, 1, DENSE_MAX_WINDOW + 1, 1).is_err());
    }

    #[test]
    fn atom_functional_rotation_is_one() {
        let x = gen_rotation(0.2, Complex64::new(1.0, 0.0), 3000).unwrap();
        let a = atom_functional(&x, 100, 2000).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
        assert!((a.lag0_term - 0.01).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn density_monotone(eps1 in 0.05f64..0.5, d in 0.0f64..0.3, seed in 0u64..1000) {
            let x = gen_iid(IidDist::SymmetricTwoPoint, seed, 800).unwrap();
            let p = autocorr_profile(&x, &[20, 40, 80, 160], 300).unwrap();
            let a = density_bad_tau(&p, eps1, 20, 80, 300).unwrap();
            let b = density_bad_tau(&p, eps1 + d, 20, 80, 300).unwrap();
            prop_assert!(b.bad_count <= a.bad_count);
            let wider = density_bad_tau(&p, eps1, 20, 160, 300).unwrap();
            prop_assert!(wider.bad_count >= a.bad_count);
            prop_assert_eq!(a.density, a.bad_count as f64 / 300.0);
        }

        #[test]
        fn fast_matches_naive(
            re in proptest::collection::vec(-1.0f64..1.0, 2..600),
            nfrac in 0.05f64..1.0,
        ) {
            let len = re.len();
            let x: Vec<Complex64> = re.iter().enumerate().map(|(i, r)| Complex64::new(*r, (i as f64 * 0.7).cos())).collect();
            let n = ((len as f64 * nfrac) as usize).clamp(1, len - 1);
            let tau_max = len - n;
            let fast = correlate_window(&x, n, tau_max, DEFAULT_MEMORY_BUDGET).unwrap();
            let slow = naive(&x, n, tau_max);
            for (tau, (a, b)) in fast.iter().zip(&slow).enumerate() {
                let scale = (x[tau..tau + n].iter().map(|v| v.norm_sqr()).sum::<f64>()
                    * x[..n].iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt() / n as f64;
                prop_assert!(b.norm() <= scale * (1.0 + 1e-12) + 1e-15);
                prop_assert!((a - b).norm() <= 1e-9 * scale.max(f64::MIN_POSITIVE));
            }
        }
    }
}
