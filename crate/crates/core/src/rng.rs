//! Seeded, splittable random streams.
//!
//! Every randomized consumer derives its own substream from `(seed, label)`
//! so that parallel experiments stay reproducible: adding a new consumer
//! never shifts the draws seen by an existing one.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the label bytes; stable across platforms and versions.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the deterministic substream for `(seed, label)`.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ fnv1a(label.as_bytes()));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Substream additionally keyed by an index (per-point streams in ensembles).
pub fn stream_indexed(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ fnv1a(label.as_bytes()) ^ splitmix64(index));
    ChaCha8Rng::seed_from_u64(mixed)
}
