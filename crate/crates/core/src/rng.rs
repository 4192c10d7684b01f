//! Seeded, stream-split random number generation.
//!
//! A single `u64` seed drives every random object of an experiment. Each
//! consumer (signal, noise, matrix, ...) reads from its own ChaCha stream so
//! that changing one ensemble never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used by instance generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Signal,
    Noise,
    GaussianMatrix,
    RademacherMatrix,
    /// Fresh matrices for the resampled recursion, one per iteration.
    Resampled(u32),
    Other(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Signal => 1,
            Stream::Noise => 2,
            Stream::GaussianMatrix => 3,
            Stream::RademacherMatrix => 4,
            Stream::Resampled(t) => (1 << 32) | t as u64,
            Stream::Other(k) => (2 << 32) ^ k,
        }
    }
}

/// Returns the generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// SplitMix64 finalizer. Used to derive per-cell seeds from structured keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a base seed with a list of key words into a derived seed.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(base), |acc, &k| mix64(acc ^ mix64(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: u64 = stream_rng(7, Stream::Signal).random();
        let b: u64 = stream_rng(7, Stream::Noise).random();
        let c: u64 = stream_rng(7, Stream::Signal).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn derived_seeds_depend_on_every_key() {
        let s = derive_seed(1, &[2, 3]);
        assert_ne!(s, derive_seed(1, &[3, 2]));
        assert_ne!(s, derive_seed(1, &[2, 4]));
        assert_eq!(s, derive_seed(1, &[2, 3]));
    }
}
