//! Deterministic, keyed randomness.
//!
//! Every random decision in a run is drawn from a stream derived from a
//! [`StreamKey`]: (seed, round, client-or-server, purpose). Each draw builds
//! its generator from scratch out of the key, so no shared generator state
//! exists and results cannot depend on client evaluation order or on how much
//! randomness other streams consumed. Same key, same sequence — always.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is for. Distinct purposes get independent streams even at
/// the same (round, client).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Server-side coin deciding between the full-sync and sampled branch.
    RoundType,
    /// Server-side choice of the participating client subset.
    ClientSubset,
    /// Client minibatch for the full-sync branch.
    Batch1,
    /// Client minibatch for the first local correction step.
    Batch2,
    /// Client minibatch for local step `step` (re-drawn every step).
    Batch3 { step: u32 },
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::RoundType => 0,
            Purpose::ClientSubset => 1,
            Purpose::Batch1 => 2,
            Purpose::Batch2 => 3,
            Purpose::Batch3 { step } => 4 | ((step as u64) << 8),
        }
    }
}

/// Identifies one random stream within a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub round: u64,
    /// Drawing client index, or `None` for server-side draws.
    pub client: Option<u32>,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn server(seed: u64, round: u64, purpose: Purpose) -> Self {
        StreamKey {
            seed,
            round,
            client: None,
            purpose,
        }
    }

    pub fn client(seed: u64, round: u64, client: u32, purpose: Purpose) -> Self {
        StreamKey {
            seed,
            round,
            client: Some(client),
            purpose,
        }
    }
}

/// splitmix64 finalizer; the standard strong 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Build the generator for a key by absorbing its fields through mix64 and
/// squeezing a 256-bit ChaCha seed.
pub fn stream_rng(key: &StreamKey) -> ChaCha8Rng {
    let client_word = match key.client {
        None => u64::MAX,
        Some(c) => c as u64,
    };
    let mut state = 0x243F_6A88_85A3_08D3; // arbitrary nonzero start
    for word in [key.seed, key.round, client_word, key.purpose.code()] {
        state = mix64(state ^ word);
    }
    let mut seed_bytes = [0u8; 32];
    for chunk in seed_bytes.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed_bytes)
}

/// One Bernoulli(p) draw on the key's stream.
pub fn bernoulli(key: &StreamKey, p: f64) -> bool {
    assert!((0.0..=1.0).contains(&p), "bernoulli p={p} outside [0, 1]");
    stream_rng(key).gen::<f64>() < p
}

/// Uniform size-`size` subset of `0..universe` without replacement, sorted
/// ascending.
pub fn sample_subset(key: &StreamKey, universe: usize, size: usize) -> Vec<usize> {
    assert!(
        size >= 1 && size <= universe,
        "subset size {size} outside [1, {universe}]"
    );
    let mut rng = stream_rng(key);
    let mut picked = index::sample(&mut rng, universe, size).into_vec();
    picked.sort_unstable();
    picked
}
