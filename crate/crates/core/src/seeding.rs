//! Deterministic seed derivation.
//!
//! Every stochastic stage (splits, augmentation, dropout, weight init) draws
//! from its own RNG stream derived from the user-facing seed plus a stream
//! label, so that reordering work or adding parallelism never changes what any
//! one stream produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; a cheap bijective mixer with good avalanche.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes, used to fold string tags into a stream id.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives a child seed from a base seed, a string label and integer indices.
pub fn derive_seed(base: u64, label: &str, indices: &[u64]) -> u64 {
    let mut acc = mix(base ^ fnv1a(label.as_bytes()));
    for &ix in indices {
        acc = mix(acc ^ mix(ix));
    }
    acc
}

/// A seeded RNG for the stream identified by `label` and `indices`.
pub fn stream_rng(base: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, indices))
}
