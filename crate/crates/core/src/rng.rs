//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, stream, index)`: the generator is a
//! ChaCha8 keystream keyed by `seed`, with `stream` selecting an independent
//! keystream and `index` selecting a fixed-width slot inside it. Sample `n`
//! always consumes the same words regardless of how the work is split, so
//! parallel chunked generation is bit-identical to a sequential pass.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used to separate the different consumers of a seed.
pub mod streams {
    /// i.i.d. sequence generation in `seqgen`.
    pub const SEQUENCE: u64 = 0x5345_5147;
    /// Process path simulation.
    pub const PROCESS: u64 = 0x5052_4f43;
    /// Word sampling in the symbolic module.
    pub const WORDS: u64 = 0x574f_5244;
}

/// A random-access view of one keystream.
#[derive(Clone)]
pub struct CounterStream {
    rng: ChaCha8Rng,
    words_per_slot: u64,
}

impl CounterStream {
    /// `words_per_slot` is the number of 64-bit words reserved for each
    /// sample index.
    pub fn new(seed: u64, stream: u64, words_per_slot: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            words_per_slot: words_per_slot.max(1),
        }
    }

    /// Positions the stream at the first word of slot `index`.
    pub fn seek(&mut self, index: u64) {
        // word_pos counts 32-bit words
        let pos = u128::from(index) * u128::from(self.words_per_slot) * 2;
        self.rng.set_word_pos(pos);
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, safe for logarithms.
    #[inline]
    pub fn next_f64_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
