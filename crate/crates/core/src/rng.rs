//! Seedable, splittable random streams.
//!
//! Every stochastic operation takes its generator explicitly. Independent
//! streams are derived from a master seed and an index by selecting a ChaCha
//! stream: `derive(master, i)` is `ChaCha8Rng::seed_from_u64(master)` with
//! `set_stream(i)`. Harness run `i` uses `derive(master_seed, i)`.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream `index` of the family rooted at `master`.
pub fn derive(master: u64, index: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Sub-stream of a stream, used to give each component of one run (algorithm,
/// adversary) its own generator.
pub fn split(master: u64, index: u64, component: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master ^ component.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}
