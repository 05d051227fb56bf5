//! Named substream derivation for reproducible randomness.
//!
//! All stochastic stages draw from substreams derived from one master seed,
//! so partial reruns (e.g. one year of the novelty simulation) produce the
//! same draws as a full run. A substream is addressed by a path such as
//! `novelty.year.2020.run.7`; its generator state is the SHA-256 digest of
//! the master seed and the path, which keeps streams independent of thread
//! count and platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic generator for the substream named by `path`.
pub fn substream(master_seed: u64, path: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(path.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Substream path for one simulation run of one year.
pub fn novelty_run_path(year: i32, run: usize) -> String {
    format!("novelty.year.{year}.run.{run}")
}
