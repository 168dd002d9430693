//! Counter-based random streams.
//!
//! Every random draw in the crate is addressed by `(seed, stream)`: the seed
//! keys a ChaCha8 generator and the stream index selects one of its 2^64
//! independent streams. Parallel work assigns one stream per path, so output
//! never depends on how paths are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from a master seed and a cell coordinate.
///
/// `derive_seed(s, &[a, b])` mixes each coordinate in order through
/// splitmix64, so distinct coordinates give unrelated seeds.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c.wrapping_add(0xA5A5))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _: u64| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 4), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derived_seeds_depend_on_every_coordinate() {
        let s = derive_seed(42, &[10, 1, 0]);
        assert_eq!(s, derive_seed(42, &[10, 1, 0]));
        assert_ne!(s, derive_seed(42, &[10, 1, 1]));
        assert_ne!(s, derive_seed(42, &[1, 10, 0]));
        assert_ne!(s, derive_seed(43, &[10, 1, 0]));
    }
}
