//! Seed splitting.
//!
//! Every random stream is a ChaCha8 generator whose seed is derived from the
//! run's master seed and a label path. The label is hashed with FNV-1a and
//! mixed with SplitMix64, so `derive(s, "init")` and `derive(s, "cand")` are
//! unrelated streams and adding a stream never shifts another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Child seed for a named sub-stream.
pub fn derive(seed: u64, label: &str) -> u64 {
    splitmix(seed ^ splitmix(fnv1a(label.as_bytes())))
}

/// Child seed for the `index`-th member of a named family (per-iteration,
/// per-trojan, per-run streams).
pub fn derive_indexed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix(derive(seed, label) ^ splitmix(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
