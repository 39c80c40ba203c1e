//! Comparator clustering methods: K-means++ seeded Lloyd, symmetric NMF by
//! projected gradient descent, and spectral clustering on the top singular
//! subspace of the data.

mod lloyd;
mod spectral;
mod symnmf;

pub use lloyd::{kmeans_rows, lloyd_kmeanspp, KMeansFit, KMeansOptions};
pub use spectral::{spectral_cluster, spectral_embedding, SpectralEmbedding};
pub use symnmf::{symnmf_gradient, symnmf_objective, symnmf_pgd, SymNmfFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataMatrix, Labeling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    KMeansPP,
    SymNmf,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub k: usize,
    /// Factor rank, SymNMF only.
    pub rank: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, k: usize) -> Self {
        let (max_iter, restarts) = match method {
            BaselineMethod::KMeansPP => (300, 10),
            BaselineMethod::SymNmf => (1000, 1),
            BaselineMethod::Spectral => (300, 10),
        };
        Self {
            method,
            k,
            rank: 2 * k,
            max_iter,
            tol: 1e-6,
            restarts,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidArgument(format!("need 1 <= K <= n, got K = {}, n = {n}", self.k)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.method == BaselineMethod::SymNmf && self.rank < self.k {
            return Err(Error::InvalidArgument(format!("rank {} is below K = {}", self.rank, self.k)));
        }
        Ok(())
    }
}

/// Runs the configured baseline and returns its labels.
pub fn run_baseline(x: &DataMatrix, cfg: &BaselineConfig) -> Result<Labeling> {
    match cfg.method {
        BaselineMethod::KMeansPP => lloyd_kmeanspp(x, cfg).map(|(labels, _)| labels),
        BaselineMethod::SymNmf => symnmf_pgd(x, cfg).map(|fit| fit.labels),
        BaselineMethod::Spectral => spectral_cluster(x, cfg),
    }
}
