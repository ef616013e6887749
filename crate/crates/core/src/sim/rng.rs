use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent stream from the master seed and a stream name.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(name.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Named streams, so drawing from one never shifts another.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub mobility: ChaCha8Rng,
    pub channel: ChaCha8Rng,
    pub pseudonym: ChaCha8Rng,
    pub attacker: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            mobility: stream(seed, "mobility"),
            channel: stream(seed, "channel"),
            pseudonym: stream(seed, "pseudonym"),
            attacker: stream(seed, "attacker"),
        }
    }
}
