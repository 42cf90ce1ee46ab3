//! Deterministic fan-out over path indices.
//!
//! Work is a pure function of the path index. Results come back in index
//! order and every reduction downstream runs sequentially over that order,
//! so totals are bit-identical for any worker count.

use rayon::prelude::*;

use crate::rng::{derive_stream, Seed};

/// Maps `f` over path seeds `0..n` in parallel, preserving index order.
pub fn map_paths<T, F>(master: u64, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Seed) -> T + Sync + Send,
{
    let n = usize::try_from(n).expect("path count fits in memory");
    (0..n)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let i = i as u64;
            f(i, derive_stream(master, i))
        })
        .collect()
}

/// Runs `op` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}

/// Independent master seed for an auxiliary run, so checks never reuse the
/// main experiment's paths.
pub fn sub_master(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
