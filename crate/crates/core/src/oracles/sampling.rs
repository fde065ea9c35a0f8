use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How a gradient estimate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    /// Full pass over the local samples (exact gradient).
    Full,
    /// Mean of this many per-sample gradients drawn with replacement.
    Mini(usize),
}

impl Batch {
    pub fn is_full(self) -> bool {
        matches!(self, Batch::Full)
    }
}

/// Independent sampling stream for `(seed, agent, iteration)`.
///
/// ChaCha is a counter-mode generator: the 64-bit stream id carries the
/// agent (high 24 bits) and iteration (low 40 bits), so any round of any
/// agent can be replayed without touching the others.
pub fn sample_stream(seed: u64, agent: usize, iteration: usize) -> ChaCha8Rng {
    debug_assert!(agent < (1 << 24) && (iteration as u64) < (1 << 40));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((agent as u64) << 40) | iteration as u64);
    rng
}
