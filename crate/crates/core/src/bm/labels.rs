use crate::baselines::{kmeans_rows, KMeansOptions};
use crate::error::Result;
use crate::model::{FactorMatrix, Labeling};

const LABEL_MAX_ITER: usize = 300;
pub const DEFAULT_LABEL_RESTARTS: usize = 10;

/// Rounds a factor to a partition by clustering its `n` rows (points in
/// `ℝ^r`) with K-means++ seeded Lloyd, best of 10 restarts.
pub fn extract_labels(u: &FactorMatrix, k: usize, seed: u64) -> Result<Labeling> {
    extract_labels_with(u, k, seed, DEFAULT_LABEL_RESTARTS)
}

pub fn extract_labels_with(u: &FactorMatrix, k: usize, seed: u64, restarts: usize) -> Result<Labeling> {
    let fit = kmeans_rows(
        u.view(),
        &KMeansOptions {
            k,
            restarts,
            max_iter: LABEL_MAX_ITER,
            seed,
        },
    )?;
    Labeling::compact(&fit.assignments)
}
