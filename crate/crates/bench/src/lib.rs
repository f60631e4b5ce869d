//! Shared fixtures for the criterion benchmarks: a norm-skewed corpus and an
//! isotropic query set, sized so that a full run stays in the seconds range.

use ipnsw::{Dataset, NormModel};

/// Number of indexed vectors in the benchmark corpus.
pub const CORPUS_SIZE: usize = 2000;
/// Vector dimension of the benchmark corpus.
pub const DIM: usize = 16;
/// Number of benchmark queries.
pub const NUM_QUERIES: usize = 32;

/// A dataset whose top 5% of items carry 3x norms — the regime where
/// inner-product graphs concentrate edges on large-norm hubs.
pub fn corpus() -> Dataset {
    Dataset::synth_gaussian(
        CORPUS_SIZE,
        DIM,
        &NormModel::ScaledTop {
            fraction: 0.05,
            factor: 3.0,
        },
        1001,
    )
    .expect("fixture synthesis")
}

/// Isotropic queries matching the corpus dimension.
pub fn queries() -> Dataset {
    Dataset::synth_gaussian(NUM_QUERIES, DIM, &NormModel::Iid, 1002).expect("fixture synthesis")
}
