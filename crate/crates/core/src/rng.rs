//! Seeded random streams.
//!
//! Every simulated symbol belongs to a fixed-size chunk, and each chunk owns
//! an independent ChaCha stream derived from `(seed, chunk index)`. Workers
//! may process chunks in any order without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Symbols per independently seeded chunk.
pub(crate) const CHUNK: usize = 4096;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Number of chunks covering `n` symbols.
pub(crate) fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

/// Symbol range `[start, end)` of chunk `c` out of `n` symbols.
pub(crate) fn chunk_span(c: usize, n: usize) -> (usize, usize) {
    let start = c * CHUNK;
    (start, (start + CHUNK).min(n))
}

/// Derive a child seed from a parent seed and a purpose tag (splitmix64).
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
