//! Numerical and symbolic laboratory for cancellation sequences.
//!
//! A complex sequence `x` is a *pointwise cancellation sequence* when
//! `(1/T) Σ x_n Y_n(ω) → 0` almost surely for every finite-variance
//! stationary process `Y`, and a *mean cancellation sequence* when the same
//! averages vanish in L². This crate provides finite-data instruments for
//! both notions:
//!
//! - [`seqgen`]: reproducible generators for the sequence families studied
//!   (rotations, the `√n`-perturbed rotation, i.i.d. noise, sums, symbolic
//!   substitutions).
//! - [`spectral`]: Weyl averages, Fourier-Bohr spectrum scans and 2-torus
//!   equidistribution checks.
//! - [`autocorr`]: FFT-batched windowed auto-correlation `ρ_N(τ)` together
//!   with the bad-lag density criteria and the atom functional.
//! - [`processes`]: stationary process simulation and empirical
//!   pointwise / mean cancellation runs.
//! - [`symbolic`]: covers, generic words, cover pruning and the
//!   constructions of points whose pair orbital measures diverge.
//! - [`io`]: binary dumps, CSV and JSON formats shared with the CLI.

pub mod autocorr;
pub mod error;
pub mod io;
pub mod processes;
pub mod rng;
pub mod seqgen;
pub mod spectral;
pub mod symbolic;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `2π`, used everywhere phases are given in turns.
pub(crate) const TAU: f64 = std::f64::consts::TAU;

/// `e^{2πi·turns}`.
#[inline]
pub fn cis_turns(turns: f64) -> Complex64 {
    let (s, c) = (TAU * turns).sin_cos();
    Complex64::new(c, s)
}

/// Sums `f(i)` for `i in 0..len` in fixed-size chunks evaluated in parallel
/// and combined in index order, so the result does not depend on the number
/// of worker threads.
pub(crate) fn chunked_sum<F>(len: usize, chunk: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    let chunk = chunk.max(1);
    let parts: Vec<Complex64> = (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * chunk).min(len);
            (c * chunk..end).map(&f).sum()
        })
        .collect();
    parts.into_iter().sum()
}
