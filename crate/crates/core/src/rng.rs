//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! seed and a path of integers, e.g. `(seed, [BOOTSTRAP, i])` for bootstrap
//! resample `i`. Streams are independent of one another and of the order in
//! which they are created, which keeps parallel runs seed-deterministic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags separating the uses of one seed.
pub mod tag {
    pub const BOOTSTRAP_RESAMPLE: u64 = 0x6273_7472;
    pub const SUBSAMPLE_DRAW: u64 = 0x7375_6264;
    pub const SUBSAMPLE_BOOTSTRAP: u64 = 0x7362_6f6f;
    pub const COVERAGE_TRIAL: u64 = 0x636f_7674;
    pub const COVERAGE_BOOTSTRAP: u64 = 0x636f_7662;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed and a path into a single 64-bit value.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xd6e8_feb8_6659_fd93);
        out = splitmix64(&mut state) ^ out.rotate_left(17);
    }
    out
}

/// The stream at `path` under `seed`.
///
/// The ChaCha key is expanded from `seed`; the 64-bit stream id is a hash of
/// the path. Position within the stream is the block counter.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(derive_seed(0x5eed, path));
    rng
}
