//! Reproducible random streams.
//!
//! Every stream is keyed by `(seed, domain, index)`, so a block of work
//! draws the same numbers whichever thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Stream domains; keep them distinct per use.
pub mod domain {
    pub const LARGE_DEVIATION: u64 = 1;
    pub const STABLE_SAMPLER: u64 = 2;
    pub const RIG_ACTOR_WEIGHTS: u64 = 3;
    pub const RIG_ATTRIBUTE_WEIGHTS: u64 = 4;
    pub const RIG_ATTRIBUTE_ROW: u64 = 5;
    pub const VERIFY_INSTANCES: u64 = 6;
}

pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let key = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Worker count from `STOPSUM_WORKERS`, falling back to 1.
pub fn default_workers() -> usize {
    std::env::var("STOPSUM_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or(1)
}

/// Run `f(block)` for every block on `workers` threads and return the
/// results in block order.
pub fn run_blocks<T, F>(blocks: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok((0..blocks).map(&f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..blocks).into_par_iter().map(&f).collect()))
}
