use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use super::{kmeans_rows, BaselineConfig, KMeansOptions};
use crate::error::Result;
use crate::model::{DataMatrix, Labeling};
use crate::rng;

const OVERSAMPLE: usize = 8;
const POWER_ITERS: usize = 12;
/// Relative eigenvalue below which a direction counts as numerically absent.
const RANK_TOL: f64 = 1e-12;

/// Top right singular vectors of `X`, i.e. eigenvectors of `XᵀX`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `n x K` with orthonormal columns, apart from zero columns past the
    /// numerical rank.
    pub vectors: Array2<f64>,
    /// Eigenvalues of `XᵀX`, descending.
    pub values: Vec<f64>,
    pub rank: usize,
}

/// Randomized subspace iteration on `XᵀX` with Rayleigh-Ritz extraction. Only
/// products with `X` and `Xᵀ` are used.
pub fn spectral_embedding(x: &DataMatrix, k: usize, seed: u64) -> Result<SpectralEmbedding> {
    let n = x.n();
    let xv = x.values();
    let width = (k + OVERSAMPLE).min(n);
    let mut rng = rng::seeded(rng::derive_seed(seed, 0x5bec));
    let mut q = Array2::from_shape_fn((n, width), |_| StandardNormal.sample(&mut rng));
    orthonormalize(&mut q);
    for _ in 0..POWER_ITERS {
        let mut next = xv.t().dot(&xv.dot(&q));
        orthonormalize(&mut next);
        q = next;
    }
    // Rayleigh-Ritz: B = (XQ)ᵀ(XQ).
    let xq = xv.dot(&q);
    let b = xq.t().dot(&xq);
    let (evals, evecs) = jacobi_eigen(b);
    let mut order: Vec<usize> = (0..evals.len()).collect();
    order.sort_by(|&a, &c| evals[c].total_cmp(&evals[a]).then(a.cmp(&c)));

    let top = evals.iter().cloned().fold(0.0_f64, f64::max);
    let mut vectors = Array2::zeros((n, k));
    let mut values = Vec::with_capacity(k);
    let mut rank = 0;
    for (col, &idx) in order.iter().take(k).enumerate() {
        let lambda = evals[idx].max(0.0);
        values.push(lambda);
        if top > 0.0 && lambda > RANK_TOL * top {
            vectors.column_mut(col).assign(&q.dot(&evecs.column(idx)));
            rank += 1;
        }
    }
    if values.len() < k {
        values.resize(k, 0.0);
    }
    if rank < k {
        log::warn!("spectral embedding: numerical rank {rank} below K = {k}, padding with zero vectors");
    }
    Ok(SpectralEmbedding { vectors, values, rank })
}

/// Lloyd clustering of the rows of the top-K singular subspace.
pub fn spectral_cluster(x: &DataMatrix, cfg: &BaselineConfig) -> Result<Labeling> {
    cfg.validate(x.n())?;
    let emb = spectral_embedding(x, cfg.k, cfg.seed)?;
    let fit = kmeans_rows(
        emb.vectors.view(),
        &KMeansOptions {
            k: cfg.k,
            restarts: cfg.restarts,
            max_iter: cfg.max_iter,
            seed: cfg.seed,
        },
    )?;
    Labeling::compact(&fit.assignments)
}

/// Modified Gram-Schmidt in place; columns that vanish are zeroed.
fn orthonormalize(q: &mut Array2<f64>) {
    let scale = q.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi: Array1<f64> = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm > 1e-13 * scale {
            q.column_mut(j).mapv_inplace(|v| v / norm);
        } else {
            q.column_mut(j).fill(0.0);
        }
    }
}

/// Cyclic Jacobi eigensolver for a small symmetric matrix. Returns the
/// eigenvalues and the eigenvectors as columns.
pub(crate) fn jacobi_eigen(mut a: Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let m = a.nrows();
    let mut v = Array2::eye(m);
    for _ in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[[i, j]] * a[[i, j]]).sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let evals = (0..m).map(|i| a[[i, i]]).collect();
    (evals, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineMethod;
    use crate::gmm::sample;
    use crate::metrics::misclustering_error;
    use crate::model::GmmSpec;
    use ndarray::array;

    #[test]
    fn jacobi_diagonalizes() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]];
        let (evals, v) = jacobi_eigen(a.clone());
        let d = Array2::from_diag(&Array1::from(evals));
        let back = v.dot(&d).dot(&v.t());
        assert!((&back - &a).iter().all(|e| e.abs() < 1e-12));
        assert!((&v.t().dot(&v) - &Array2::<f64>::eye(3)).iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn embedding_is_orthonormal() {
        let spec = GmmSpec::balanced(300, 20, 4, 1.0, 1.0).unwrap();
        let s = sample(&spec, 0, true).unwrap();
        let emb = spectral_embedding(&s.data, 4, 0).unwrap();
        assert_eq!(emb.rank, 4);
        let gram = emb.vectors.t().dot(&emb.vectors);
        assert!((&gram - &Array2::<f64>::eye(4)).iter().all(|e| e.abs() < 1e-8));
        assert!(emb.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn noiseless_data_is_exact() {
        let spec = GmmSpec::balanced(120, 6, 3, 0.0, 1.0).unwrap().with_separation(5.0).unwrap();
        let s = sample(&spec, 2, true).unwrap();
        let cfg = BaselineConfig::new(BaselineMethod::Spectral, 3);
        let labels = spectral_cluster(&s.data, &cfg).unwrap();
        assert_eq!(misclustering_error(&labels, &s.truth).unwrap(), 0.0);
    }

    #[test]
    fn rank_deficiency_pads_with_zeros() {
        let x = DataMatrix::new(array![[1.0, 1.0, 0.0, 0.0, 2.0]]).unwrap();
        let emb = spectral_embedding(&x, 3, 0).unwrap();
        assert_eq!(emb.rank, 1);
        assert!(emb.vectors.column(2).iter().all(|&v| v == 0.0));
    }
}
