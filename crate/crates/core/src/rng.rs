//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `(seed, purpose, index)` and
//! positioned on stream number `replicate`, so results do not depend on the
//! order in which replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Simulation,
    Bootstrap,
    Other(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Simulation => 0x5349_4d55,
            Purpose::Bootstrap => 0x424f_4f54,
            Purpose::Other(t) => 0x4f54_4800_0000_0000 ^ t,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, replicate: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut state = seed ^ purpose.tag().rotate_left(17) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}
