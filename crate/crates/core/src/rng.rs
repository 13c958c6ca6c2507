//! Seed handling.
//!
//! All randomness flows from `ChaCha8Rng`, which produces the same stream on
//! every platform. Sub-streams of one seed are separated with ChaCha's stream
//! counter so that, e.g., the noise of trial `t` does not depend on how many
//! draws the signal generator consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named sub-streams of a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Signal = 1,
    Matrix = 2,
    Noise = 3,
    QuietTime = 4,
    Traffic = 5,
    Gain = 6,
    Search = 7,
    Idle = 8,
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Per-trial seed: `base ^ index`.
#[inline]
pub fn trial_seed(base: u64, index: u64) -> u64 {
    base ^ index
}
