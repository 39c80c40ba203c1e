//! Synthetic Gaussian-mixture instances placed at a chosen multiple of the
//! exact-recovery threshold.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{DataMatrix, GmmSpec, Labeling};
use crate::rng;

/// Squared centroid separation `Θ̄²` at which exact recovery becomes possible:
/// `4σ²(1 + √(1 + Kp/(n ln n))) ln n`, natural log.
pub fn sharp_threshold(n: usize, p: usize, k: usize, sigma: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("threshold needs n >= 2, got {n}")));
    }
    if p == 0 || k == 0 {
        return Err(Error::InvalidArgument("threshold needs p >= 1 and K >= 1".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be non-negative, got {sigma}")));
    }
    let ln_n = (n as f64).ln();
    let ratio = (k * p) as f64 / (n as f64 * ln_n);
    Ok(4.0 * sigma * sigma * (1.0 + (1.0 + ratio).sqrt()) * ln_n)
}

/// `K` centers `(θ/√2) e_k` as columns of a `p x K` matrix; all pairwise
/// distances equal `theta_min`.
pub fn place_simplex_centers(p: usize, k: usize, theta_min: f64) -> Result<Array2<f64>> {
    if p < k {
        return Err(Error::InvalidArgument(format!("simplex placement needs p >= K, got p = {p}, K = {k}")));
    }
    if !(theta_min >= 0.0 && theta_min.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid separation {theta_min}")));
    }
    let mut centers = Array2::zeros((p, k));
    let scale = theta_min / std::f64::consts::SQRT_2;
    for c in 0..k {
        centers[[c, c]] = scale;
    }
    Ok(centers)
}

/// A drawn instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct GmmSample {
    pub data: DataMatrix,
    pub truth: Labeling,
    pub spec: GmmSpec,
    /// Realized minimal pairwise center distance.
    pub theta_min: f64,
    pub theta_bar_sq: f64,
    /// `permutation[i]` is the block-order index of column `i`.
    pub permutation: Vec<usize>,
}

/// Draws `X_i = μ_k + σ z_i` with `z_i` standard normal. Labels are laid out
/// in contiguous blocks, then the columns are shuffled when `shuffle` is set.
pub fn sample(spec: &GmmSpec, seed: u64, shuffle: bool) -> Result<GmmSample> {
    spec.validate()?;
    let mut rng = rng::seeded(seed);
    let block_labels: Vec<usize> = spec
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();

    let mut block = Array2::zeros((spec.p, spec.n));
    for (i, &c) in block_labels.iter().enumerate() {
        for j in 0..spec.p {
            let z: f64 = StandardNormal.sample(&mut rng);
            block[[j, i]] = spec.centers[[j, c]] + spec.sigma * z;
        }
    }

    let mut permutation: Vec<usize> = (0..spec.n).collect();
    if shuffle {
        permutation.shuffle(&mut rng);
    }
    let mut values = Array2::zeros((spec.p, spec.n));
    for (i, &src) in permutation.iter().enumerate() {
        values.column_mut(i).assign(&block.column(src));
    }
    let labels = permutation.iter().map(|&src| block_labels[src]).collect();

    Ok(GmmSample {
        data: DataMatrix::new(values)?,
        truth: Labeling::new(labels, spec.k)?,
        theta_min: min_center_distance(&spec.centers),
        theta_bar_sq: spec.theta_bar_sq(),
        spec: spec.clone(),
        permutation,
    })
}

fn min_center_distance(centers: &Array2<f64>) -> f64 {
    let k = centers.ncols();
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let d = (&centers.column(a) - &centers.column(b)).mapv(|v| v * v).sum().sqrt();
            best = best.min(d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_reference_value() {
        // 4 (1 + sqrt(1 + 80 / (1000 ln 1000))) ln 1000 with ln 1000 = 6.907755279,
        // evaluated independently in extended precision.
        let t = sharp_threshold(1000, 20, 4, 1.0).unwrap();
        assert!((t - 55.421_581_65).abs() < 1e-6, "{t}");
    }

    #[test]
    fn threshold_scales_quadratically_and_vanishes_at_zero_noise() {
        assert_eq!(sharp_threshold(500, 10, 3, 0.0).unwrap(), 0.0);
        let one = sharp_threshold(500, 10, 3, 1.0).unwrap();
        let two = sharp_threshold(500, 10, 3, 2.0).unwrap();
        assert!((two - 4.0 * one).abs() < 1e-12 * two);
        assert!(sharp_threshold(1, 10, 3, 1.0).is_err());
    }

    #[test]
    fn simplex_two_points() {
        let c = place_simplex_centers(2, 2, 2f64.sqrt()).unwrap();
        assert!((c[[0, 0]] - 1.0).abs() < 1e-15 && (c[[1, 1]] - 1.0).abs() < 1e-15);
        assert_eq!(c[[1, 0]], 0.0);
        assert!(place_simplex_centers(2, 3, 1.0).is_err());
        let single = place_simplex_centers(5, 1, 3.0).unwrap();
        assert_eq!(single.ncols(), 1);
    }

    #[test]
    fn simplex_pairwise_distances_brute_force() {
        let theta = 7.3;
        let c = place_simplex_centers(20, 4, theta).unwrap();
        for a in 0..4 {
            for b in a + 1..4 {
                let d: f64 = (0..20).map(|j| (c[[j, a]] - c[[j, b]]).powi(2)).sum::<f64>().sqrt();
                assert!((d - theta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_columns_equal_centers() {
        let spec = GmmSpec::balanced(40, 5, 3, 0.0, 1.0).unwrap();
        let s = sample(&spec, 3, true).unwrap();
        for (i, &l) in s.truth.labels().iter().enumerate() {
            assert_eq!(s.data.sample(i), spec.centers.column(l));
        }
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let spec = GmmSpec::balanced(60, 4, 2, 1.0, 1.0).unwrap();
        let a = sample(&spec, 11, true).unwrap();
        let b = sample(&spec, 11, true).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.truth, b.truth);
        let c = sample(&spec, 12, true).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn histogram_and_separation_match_spec() {
        let spec = GmmSpec::balanced(103, 6, 4, 1.5, 0.64).unwrap();
        let s = sample(&spec, 5, true).unwrap();
        assert_eq!(s.truth.sizes(), spec.sizes.as_slice());
        assert!((s.theta_min.powi(2) - spec.gamma * s.theta_bar_sq).abs() < 1e-9);
        let mut perm = s.permutation.clone();
        perm.sort_unstable();
        assert_eq!(perm, (0..103).collect::<Vec<_>>());
    }

    #[test]
    fn unshuffled_labels_are_contiguous() {
        let spec = GmmSpec::balanced(9, 3, 3, 1.0, 1.0).unwrap();
        let s = sample(&spec, 0, false).unwrap();
        assert_eq!(s.truth.labels(), &[0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn cluster_means_concentrate() {
        // CLT check: sample means lie within 4σ/√n_k of the center.
        let spec = GmmSpec::balanced(4000, 20, 4, 1.0, 1.0).unwrap();
        let bound = 4.0 / (1000f64).sqrt();
        for seed in 0..20 {
            let s = sample(&spec, seed, true).unwrap();
            let mut sums = Array2::<f64>::zeros((20, 4));
            for (i, &l) in s.truth.labels().iter().enumerate() {
                let mut col = sums.column_mut(l);
                col += &s.data.sample(i);
            }
            let mut inside = 0;
            for c in 0..4 {
                for j in 0..20 {
                    let mean = sums[[j, c]] / 1000.0;
                    if (mean - spec.centers[[j, c]]).abs() <= bound {
                        inside += 1;
                    }
                }
            }
            assert!(inside as f64 >= 0.95 * 80.0, "seed {seed}: {inside}/80");
        }
    }
}
