//! Reproducible random streams.
//!
//! Every stochastic routine draws from a ChaCha8 generator (`rand_chacha`).
//! The 256-bit key is expanded from the 64-bit master seed with SplitMix64,
//! and the 64-bit ChaCha stream id is a hash of the derivation path
//! (experiment label, task index, sub-task index, ...). Two tasks with
//! different paths therefore never share a keystream, and a task's draws do
//! not depend on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all simulations.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Master seed plus a derivation path, folded into a stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    master: u64,
    stream: u64,
}

impl RngSeed {
    pub fn new(master: u64) -> Self {
        Self { master, stream: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child seed for task `index` under this path.
    #[must_use]
    pub fn derive(&self, index: u64) -> Self {
        let step = mix64(index.wrapping_add(GOLDEN));
        Self {
            master: self.master,
            stream: mix64(self.stream.rotate_left(17) ^ step),
        }
    }

    /// Child seed for a named experiment or stage.
    #[must_use]
    pub fn experiment(&self, label: &str) -> Self {
        self.derive(fnv1a64(label.as_bytes()))
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SimRng {
        let mut key = [0u8; 32];
        let mut state = self.master;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}
