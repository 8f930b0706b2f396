//! One seed, many independent streams.
//!
//! Each consumer draws from the stream keyed by (purpose, epoch, index), so
//! adding a consumer never shifts another one's numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Terminals = 1,
    Groups = 2,
    Failures = 3,
    Reach = 4,
    Resilience = 5,
    Bitstring = 6,
}

pub fn stream(seed: u64, purpose: Purpose, epoch: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(mix(mix(purpose as u64) ^ epoch) ^ index));
    rng
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
