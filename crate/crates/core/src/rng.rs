//! Seed derivation for reproducible substreams.
//!
//! Every stochastic component draws from a ChaCha12 stream whose seed is
//! derived from the master seed and a stream tag, so runs are bit-exact
//! reproducible and substreams can execute in parallel without coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream tag into a single 64-bit value.
pub fn derive_u64(master_seed: u64, stream: u64) -> u64 {
    let mut state = master_seed ^ 0xa076_1d64_78bd_642f;
    let a = splitmix64(&mut state);
    let mut state2 = stream ^ a;
    splitmix64(&mut state2)
}

/// Expands `(master_seed, stream)` into a full 256-bit ChaCha seed.
pub fn derive_seed(master_seed: u64, stream: u64) -> [u8; 32] {
    let mut state = derive_u64(master_seed, stream);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// Independent substream for `(master_seed, stream)`.
pub fn substream(master_seed: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(master_seed, stream))
}
