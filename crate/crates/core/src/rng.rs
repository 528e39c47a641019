//! Deterministic random streams derived from a 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SessionRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const KEYGEN_STREAM: u64 = 0;
pub const VERIFIER_STREAM: u64 = 1;
pub const PROVER_STREAM: u64 = 2;
/// Experiment trial `i` uses stream `TRIAL_STREAM_BASE + i`.
pub const TRIAL_STREAM_BASE: u64 = 1 << 32;
