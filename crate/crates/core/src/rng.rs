//! Counter-keyed random-number substreams.
//!
//! Every stream is a ChaCha12 generator whose 256-bit key is derived from
//! `(seed, path_index, stream id)` with a SplitMix64 expansion. Streams are
//! therefore fully determined by their key tuple: path-level parallelism
//! needs no shared RNG state and worker scheduling cannot change any draw.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent substreams of one path's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    /// Brownian increments on the master grid.
    Brownian,
    /// Jump count, event times and marks.
    Jumps,
    /// The initial-value draw shared by every mesh of the path.
    Initial,
}

impl StreamId {
    fn tag(self) -> u64 {
        match self {
            StreamId::Brownian => 0x42524f574e49414e, // "BROWNIAN"
            StreamId::Jumps => 0x4a554d5053000000,    // "JUMPS"
            StreamId::Initial => 0x494e495449414c00,  // "INITIAL"
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Build the substream for `(seed, path_index, stream)`.
pub fn stream(seed: u64, path_index: u64, stream: StreamId) -> ChaCha12Rng {
    let mut state = seed;
    // Mix the tuple components through disjoint rounds so that nearby
    // seeds/path indices land on unrelated keys.
    let a = splitmix64(&mut state);
    state ^= path_index.wrapping_mul(0xd1342543de82ef95);
    let b = splitmix64(&mut state);
    state ^= stream.tag();
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);

    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
