//! Deterministic seed derivation so every RNG stream is reproducible and
//! independent streams never alias.

/// SplitMix64 step; good avalanche, stable across platforms.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed and a list of stream tags.
pub(crate) fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(base ^ 0xA076_1D64_78BD_642F);
    for &t in tags {
        s = splitmix64(s ^ t.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    }
    s
}
