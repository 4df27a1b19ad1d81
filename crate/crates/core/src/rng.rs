//! Seeded RNG streams. Every randomized step draws from a stream keyed by a
//! master seed and a task index, so results do not depend on thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

// Salts keep each consumer of a user seed on its own family of streams.
pub const SALT_SYNTH: u64 = 0x7379_6e74;
pub const SALT_BASELINE: u64 = 0x6261_7365;
pub const SALT_FOLDS: u64 = 0x666f_6c64;
pub const SALT_GRID: u64 = 0x6772_6964;
pub const SALT_PERMUTE: u64 = 0x7065_726d;
pub const SALT_BOOTSTRAP: u64 = 0x626f_6f74;

/// `stream(derive(seed, salt), index)`.
pub fn salted(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    stream(derive(seed, salt), index)
}

/// Mixes a sub-seed out of a master seed and a salt (splitmix64 finalizer).
pub fn derive(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
