//! Seeded random streams.
//!
//! Every random decision in a run (split shuffle, undersampling, weight init,
//! epoch shuffles) draws from its own ChaCha stream derived from the run seed,
//! so adding a draw in one place never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids, one per consumer.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const UNDERSAMPLE: u64 = 2;
    pub const LOGISTIC: u64 = 3;
    pub const MLP_INIT: u64 = 4;
    pub const MLP_SHUFFLE: u64 = 5;
    pub const SYNTHETIC: u64 = 6;
    pub const GRADCHECK: u64 = 7;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
