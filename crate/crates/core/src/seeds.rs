//! Deterministic seed derivation.
//!
//! Every random consumer (one dataset record, one weight initialization,
//! one replicate) gets its own ChaCha stream derived from a master seed
//! and a purpose tag. Records can therefore be generated independently,
//! in any order or in parallel, while staying bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap tag mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a purpose `tag`.
pub fn derive(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag))
}

/// RNG for stream `stream` under `master`. Streams with different ids
/// never overlap regardless of how much either is consumed.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derive_is_deterministic_and_tag_sensitive() {
        assert_eq!(derive(42, 1), derive(42, 1));
        assert_ne!(derive(42, 1), derive(42, 2));
        assert_ne!(derive(42, 1), derive(43, 1));
    }

    #[test]
    fn streams_are_independent_of_consumption_order() {
        let mut a = stream_rng(9, 0);
        let first_of_b = stream_rng(9, 1).next_u64();
        // Consuming stream 0 must not shift stream 1.
        for _ in 0..100 {
            a.next_u64();
        }
        assert_eq!(stream_rng(9, 1).next_u64(), first_of_b);
    }
}
