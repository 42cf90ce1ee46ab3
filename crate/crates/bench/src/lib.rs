//! Shared fixtures for the criterion benchmarks.

use mgtail_core::models::{sample_terminal, ModelSpec, DEFAULT_STEP};
use mgtail_core::rng::derive_stream;

/// Master seed used by every benchmark.
pub const BENCH_SEED: u64 = 0xBE7C_4000;

/// Terminal `<M>_inf` draws from `model`, for estimator benchmarks.
pub fn qv_samples(model: &ModelSpec, n: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            sample_terminal(model, derive_stream(BENCH_SEED, i), DEFAULT_STEP)
                .expect("catalog model samples")
                .qv_pred
        })
        .collect()
}
