//! Deterministic randomness.
//!
//! Everything random in the engine flows from one `u64` master seed through
//! domain-separated ChaCha streams. Shuffles and draws are implemented here
//! rather than borrowed from `rand`'s sequence helpers so the exact byte
//! consumption — and therefore every downstream artifact — stays stable.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A ChaCha stream tied to `(master, domain, salt)`. Different domains or
/// salts give statistically independent streams, so e.g. each ceremony's
/// assignment draws don't perturb the next one's.
pub fn derive(master: u64, domain: &str, salt: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_be_bytes());
    hasher.update([domain.len() as u8]);
    hasher.update(domain.as_bytes());
    hasher.update(salt.to_be_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Fisher–Yates, fixed implementation.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// `k` distinct indices drawn uniformly from `0..n`, in draw order.
pub fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} of {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}
