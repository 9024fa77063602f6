//! Counter-based random streams. Every (master seed, grid cell, index,
//! purpose) tuple maps to an independent ChaCha20 key, so results do not
//! depend on which worker runs which iteration.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Snr = 1,
    Iteration = 2,
    Scale = 3,
    Sample = 4,
    Estimation = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(master: u64, cell: u64, index: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut state = splitmix64(master);
    for v in [cell, index, purpose as u64] {
        state = splitmix64(state ^ splitmix64(v));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}
