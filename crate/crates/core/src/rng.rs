//! Seeded random streams and stable seed derivation.
//!
//! Every stochastic component owns a ChaCha8 stream so results do not depend
//! on the platform or on the order in which parallel runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a seed from a label and a list of integers. Stable across
/// platforms and toolchain versions (no `std::hash`).
pub fn derive_seed(label: &str, parts: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(label.len() + 1 + parts.len() * 8);
    bytes.extend_from_slice(label.as_bytes());
    bytes.push(0);
    for p in parts {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    splitmix64(fnv1a64(&bytes))
}
