//! Deterministic seed derivation.
//!
//! All randomness in a pipeline flows from one base seed. Each consumer asks
//! for a named sub-stream (`"gen"`, `"partition"`, `"path"`, ...) plus an
//! index, so independent stages never share or reuse a generator state, and
//! adding a stage never shifts the streams of existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer; decorrelates seeds that differ in few bits.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `label`/`index` from `base`.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &base.to_le_bytes());
    h = fnv1a(h, label.as_bytes());
    h = fnv1a(h, &index.to_le_bytes());
    splitmix64(h)
}

/// Seeded generator for sub-stream `label`/`index`.
pub fn rng_for(base: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, index))
}

/// 64-bit FNV-1a of a byte string, as used for artifact fingerprints.
pub fn fnv1a_hash(bytes: &[u8]) -> u64 {
    fnv1a(FNV_OFFSET, bytes)
}
