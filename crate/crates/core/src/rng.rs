//! Seeded random streams.
//!
//! A run is identified by one 64-bit seed; every independent consumer (a
//! simulated path, a test replicate) gets its own xoshiro256++ stream keyed by
//! `(seed, stream)`, so results never depend on evaluation order or thread
//! count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type RngState = Xoshiro256PlusPlus;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> RngState {
    // Two rounds of mixing so nearby (seed, stream) pairs land far apart.
    let key = splitmix(splitmix(seed) ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    let mut bytes = [0u8; 32];
    let mut z = key;
    for chunk in bytes.chunks_mut(8) {
        z = splitmix(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    Xoshiro256PlusPlus::from_seed(bytes)
}

/// Stream ids used by the path simulator. Jumps and Brownian increments of a
/// path draw from separate streams so the jump list of a path does not depend
/// on the continuous part of the model.
pub fn path_streams(seed: u64, path: u64) -> (RngState, RngState) {
    (stream(seed, 2 * path), stream(seed, 2 * path + 1))
}
