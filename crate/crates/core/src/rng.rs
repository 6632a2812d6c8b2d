//! Seed derivation.
//!
//! Every random draw in a run comes from a generator seeded by mixing the run
//! seed with the coordinates of the draw (round, agent, purpose). No generator
//! state is carried between draws, so a run resumed from a snapshot replays
//! exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a base seed with any number of coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng_for(base: u64, parts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, parts))
}

/// Stable 64-bit FNV-1a hash, used wherever a hash must not change between
/// builds or platforms.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn hash_str(s: &str) -> u64 {
    fnv1a(s.as_bytes())
}

/// Purpose tags so different uses of the same coordinates never share a stream.
pub mod purpose {
    pub const GRAPH: u64 = 1;
    pub const PERSONA: u64 = 2;
    pub const RECOMMEND: u64 = 3;
    pub const SEARCH: u64 = 4;
    pub const SWEEP: u64 = 5;
    pub const SUPERSTAR: u64 = 6;
    pub const AUDIENCE: u64 = 7;
    pub const EVAL_LIST: u64 = 8;
    pub const USERS: u64 = 9;
    pub const ORACLE: u64 = 10;
    pub const DISSEMINATION: u64 = 11;
    pub const SOCIAL: u64 = 12;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = rng_for(7, &[1, 2, 3]).random();
        let b: u64 = rng_for(7, &[1, 2, 3]).random();
        let c: u64 = rng_for(7, &[1, 2, 4]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
    }

    #[test]
    fn fnv_known_vector() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
