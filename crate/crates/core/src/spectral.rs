//! Weyl averages `S_T(z) = (1/T) Σ_{n=1}^T x_n zⁿ`, Fourier-Bohr spectrum
//! scans over the unit circle, and equidistribution checks for
//! `(nβ, √n·α)` on the 2-torus.
//!
//! A sequence has an empty Fourier-Bohr spectrum when `S_T(z) → 0` for every
//! unit `z`. Only finitely many `z` and `T` can be inspected, so a scan is a
//! proxy: grid values are exact evaluations, and candidate atoms are points
//! whose refined magnitude stays above a threshold at the two largest
//! truncations.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::seqgen::{frac_mul, ComplexSeq};
use crate::{chunked_sum, cis_turns, Complex64, Error, Result};

/// Tolerance on `|z| = 1` for evaluation points.
pub const UNIT_Z_TOL: f64 = 1e-9;
/// Renormalization period of the phase recurrence `zⁿ`.
pub const RENORM_PERIOD: usize = 1 << 14;
/// Default grid size of [`fb_scan`].
pub const DEFAULT_GRID: usize = 512;
/// Default atom threshold θ.
pub const DEFAULT_ATOM_THRESHOLD: f64 = 0.1;
/// Largest dense grid used by [`detect_atoms`] (`2^24` points).
pub const MAX_DENSE_GRID: usize = 1 << 24;

const SUM_CHUNK: usize = 1 << 15;

/// `(1/T) Σ_{n=1}^T x_n zⁿ` using the recurrence `zⁿ = z·zⁿ⁻¹`, renormalized
/// to unit modulus every [`RENORM_PERIOD`] steps.
pub fn weyl_avg(x: &ComplexSeq, z: Complex64, t: usize) -> Result<Complex64> {
    if t == 0 {
        return Err(Error::invalid("truncation T must be at least 1"));
    }
    if t > x.len() {
        return Err(Error::InsufficientData {
            required: t,
            available: x.len(),
        });
    }
    if (z.norm() - 1.0).abs() > UNIT_Z_TOL {
        return Err(Error::invalid(format!("|z| = {} is not 1", z.norm())));
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in x.values()[..t].iter().enumerate() {
        acc += v * w;
        w *= z;
        if (i + 1) % RENORM_PERIOD == 0 {
            w /= w.norm();
        }
    }
    Ok(acc / t as f64)
}

/// Exact values of `S_T` on the `m`-th roots of unity `e^{2πik/m}`.
///
/// Folding `x_n` by `n mod m` turns the evaluation into one length-`m`
/// transform; the result is exact for every `T`, whatever the ratio `T/m`.
pub fn weyl_on_roots(x: &ComplexSeq, m: usize, t: usize) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    if t == 0 || t > x.len() {
        return Err(Error::InsufficientData {
            required: t.max(1),
            available: x.len(),
        });
    }
    let mut folded = vec![Complex64::new(0.0, 0.0); m];
    for (i, v) in x.values()[..t].iter().enumerate() {
        folded[(i + 1) % m] += v;
    }
    let fft = FftPlanner::new().plan_fft_inverse(m);
    fft.process(&mut folded);
    let scale = 1.0 / t as f64;
    Ok(folded.into_iter().map(|v| v * scale).collect())
}

/// Magnitudes `|S_T(z)|` on a uniform grid, one row per truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    /// Grid angles in turns, `k/M`.
    pub grid: Vec<f64>,
    pub ts: Vec<usize>,
    /// `magnitudes[i][k] = |S_{ts[i]}(e^{2πi grid[k]})|`.
    pub magnitudes: Vec<Vec<f64>>,
    /// `(1/T) Σ |x_n|` for each truncation, the triangle-inequality bound.
    pub l1_means: Vec<f64>,
}

impl SpectrumScan {
    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// Largest magnitude in the row for `ts[row]`.
    pub fn max_magnitude(&self, row: usize) -> f64 {
        self.magnitudes[row].iter().copied().fold(0.0, f64::max)
    }

    /// Largest magnitude over grid points farther than `exclude` turns
    /// (circular distance) from `angle`.
    pub fn max_excluding(&self, row: usize, angle: f64, exclude: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.magnitudes[row])
            .filter(|(g, _)| circular_distance(**g, angle) > exclude)
            .map(|(_, m)| *m)
            .fold(0.0, f64::max)
    }

    /// Index of the grid point nearest to `angle`.
    pub fn nearest_index(&self, angle: f64) -> usize {
        let m = self.grid.len();
        (angle.rem_euclid(1.0) * m as f64).round() as usize % m
    }

    /// Checks `|S_T(z)| ≤ (1/T) Σ |x_n|` on every cell.
    pub fn satisfies_triangle_bound(&self) -> bool {
        self.magnitudes
            .iter()
            .zip(&self.l1_means)
            .all(|(row, bound)| row.iter().all(|m| *m <= bound * (1.0 + 1e-12) + 1e-15))
    }
}

/// Distance between two angles on the circle of circumference 1.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn check_truncations(x: &ComplexSeq, ts: &[usize]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::invalid("at least one truncation is required"));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("truncations must be strictly increasing"));
    }
    if ts[0] == 0 {
        return Err(Error::invalid("truncation T must be at least 1"));
    }
    let last = *ts.last().unwrap();
    if last > x.len() {
        return Err(Error::InsufficientData {
            required: last,
            available: x.len(),
        });
    }
    Ok(())
}

/// Scans `|S_T(z)|` over the grid `z_k = e^{2πik/M}` for each `T` in `ts`.
pub fn fb_scan(x: &ComplexSeq, m: usize, ts: &[usize]) -> Result<SpectrumScan> {
    if m == 0 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    check_truncations(x, ts)?;
    let magnitudes = ts
        .par_iter()
        .map(|&t| weyl_on_roots(x, m, t).map(|v| v.into_iter().map(|c| c.norm()).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SpectrumScan {
        grid: (0..m).map(|k| k as f64 / m as f64).collect(),
        ts: ts.to_vec(),
        magnitudes,
        l1_means: ts.iter().map(|&t| x.mean_abs(t)).collect(),
    })
}

/// A unit-circle point whose Weyl averages did not decay over the scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCandidate {
    /// Refined angle in turns.
    pub angle: f64,
    /// Index of the nearest coarse grid point.
    pub grid_index: usize,
    /// `|S_T|` at the refined angle for the two largest truncations, in
    /// increasing `T` order.
    pub magnitudes: [f64; 2],
}

/// Dense grid size used to refine peaks at truncation `t`.
pub fn dense_grid_size(t: usize, coarse: usize) -> usize {
    (4 * t).max(coarse).next_power_of_two().min(MAX_DENSE_GRID)
}

/// Reports candidate Fourier-Bohr atoms.
///
/// Peaks are located on a dense grid of at least `4T` roots of unity (capped
/// at [`MAX_DENSE_GRID`]) for the largest truncation, so any true atom lies
/// within `1/(8T)` turns of an evaluated point. A peak is reported when its
/// magnitude is at least `theta` at the largest truncation and `|S_T|`
/// evaluated at the same refined angle is also at least `theta` at the
/// second-largest one. Peaks closer than one coarse grid step are merged.
pub fn detect_atoms(x: &ComplexSeq, scan: &SpectrumScan, theta: f64) -> Result<Vec<AtomCandidate>> {
    let k = scan.ts.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let t_hi = scan.ts[k - 1];
    let t_lo = if k >= 2 { scan.ts[k - 2] } else { t_hi };
    let m = scan.grid_size();
    let dense = dense_grid_size(t_hi, m);
    let values: Vec<f64> = weyl_on_roots(x, dense, t_hi)?
        .into_iter()
        .map(|c| c.norm())
        .collect();

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..dense {
        let v = values[i];
        if v < theta {
            continue;
        }
        let prev = values[(i + dense - 1) % dense];
        let next = values[(i + 1) % dense];
        if v >= prev && v >= next {
            peaks.push((i as f64 / dense as f64, v));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let step = 1.0 / m as f64;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for p in peaks {
        if kept.iter().all(|q| circular_distance(p.0, q.0) > step) {
            kept.push(p);
        }
    }

    let mut out = Vec::new();
    for (angle, mag_hi) in kept {
        let mag_lo = weyl_avg(x, cis_turns(angle), t_lo)?.norm();
        if mag_lo >= theta {
            out.push(AtomCandidate {
                angle,
                grid_index: scan.nearest_index(angle),
                magnitudes: [mag_lo, mag_hi],
            });
        }
    }
    out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(out)
}

/// Result of a 2-torus Weyl sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusWeyl {
    pub value: Complex64,
    /// Set when the frequencies make decay impossible or unexpected: the
    /// trivial character, a constant `√n` phase with `m1 = 0`, or a `β`
    /// numerically indistinguishable from a rational with small denominator.
    pub no_decay_expected: bool,
}

/// Denominator bound used to flag numerically rational `β`.
pub const RATIONAL_DENOMINATOR_LIMIT: u64 = 10_000;

/// Returns `Some(q)` when `beta` lies within `1e-12` of `p/q` with
/// `q ≤ RATIONAL_DENOMINATOR_LIMIT`.
pub fn small_denominator(beta: f64) -> Option<u64> {
    let b = beta.rem_euclid(1.0);
    (1..=RATIONAL_DENOMINATOR_LIMIT).find(|&q| {
        let s = b * q as f64;
        (s - s.round()).abs() < 1e-12 * q as f64
    })
}

/// `(1/N) Σ_{n=1}^N e^{2πi(m1·nβ + m2·√n·α)}`.
pub fn torus_weyl(beta: f64, alpha: f64, m1: i64, m2: i64, n: usize) -> Result<TorusWeyl> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !beta.is_finite() || !alpha.is_finite() {
        return Err(Error::invalid("beta and alpha must be finite"));
    }
    // without a √n phase the sum is geometric in nβ
    let no_decay = (m1 == 0 && m2 == 0)
        || ((m2 == 0 || alpha == 0.0)
            && (m1 == 0 || small_denominator(beta).is_some_and(|q| m1 % q as i64 == 0)));
    if m1 == 0 && m2 == 0 {
        return Ok(TorusWeyl {
            value: Complex64::new(1.0, 0.0),
            no_decay_expected: true,
        });
    }
    let (m1f, m2f) = (m1 as f64, m2 as f64);
    let sum = chunked_sum(n, SUM_CHUNK, |i| {
        let k = (i + 1) as f64;
        let turns = m1f * frac_mul(k, beta) + m2f * frac_mul(k.sqrt(), alpha);
        cis_turns(turns.rem_euclid(1.0))
    });
    Ok(TorusWeyl {
        value: sum / n as f64,
        no_decay_expected: no_decay,
    })
}

/// Half-open arc `[lo, hi)` of the circle, in turns, with `0 ≤ lo < hi ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::invalid(format!("arc [{lo}, {hi}) outside [0, 1]")));
        }
        if lo >= hi {
            return Err(Error::invalid(format!("degenerate arc [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t < self.hi
    }
}

/// Empirical box discrepancy of `(nβ mod 1, √n·α mod 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub value: f64,
    /// `β` is numerically rational, so the first coordinate does not
    /// equidistribute.
    pub beta_rational: bool,
}

pub fn discrepancy_2torus(beta: f64, alpha: f64, n: usize, u: Arc, v: Arc) -> Result<Discrepancy> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    Arc::new(u.lo, u.hi)?;
    Arc::new(v.lo, v.hi)?;
    const CHUNK: usize = 1 << 16;
    let counts: Vec<u64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(n);
            (c * CHUNK..end)
                .filter(|&i| {
                    let k = (i + 1) as f64;
                    u.contains(frac_mul(k, beta)) && v.contains(frac_mul(k.sqrt(), alpha))
                })
                .count() as u64
        })
        .collect();
    let inside: u64 = counts.into_iter().sum();
    let area = u.len() * v.len();
    Ok(Discrepancy {
        value: (inside as f64 / n as f64 - area).abs(),
        beta_rational: small_denominator(beta).is_some(),
    })
}
