use ndarray::Array2;

use crate::error::{Error, Result};
use crate::gmm::{place_simplex_centers, sharp_threshold};

/// Tolerance on pairwise center distances.
const CENTER_TOL: f64 = 1e-9;

/// Parameters of an isotropic Gaussian mixture `X_i = μ_k + σ ε_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    /// Noise standard deviation `σ`.
    pub sigma: f64,
    /// Separation factor: `Θ²_min = γ · Θ̄²`.
    pub gamma: f64,
    /// Cluster sizes `n_k`, summing to `n`.
    pub sizes: Vec<usize>,
    /// `p x K`, one center per column.
    pub centers: Array2<f64>,
    /// Explicit `Θ_min` overriding `√(γ Θ̄²)`; lets noiseless instances keep
    /// their clusters apart.
    pub separation: Option<f64>,
}

impl GmmSpec {
    /// Equal-size clusters (the remainder spread over the first clusters),
    /// centers on a scaled simplex with `Θ²_min = γ · Θ̄²`.
    pub fn balanced(n: usize, p: usize, k: usize, sigma: f64, gamma: f64) -> Result<Self> {
        if k == 0 || n < k {
            return Err(Error::InvalidArgument(format!("need 1 <= K <= n, got K = {k}, n = {n}")));
        }
        let sizes = (0..k).map(|c| n / k + usize::from(c < n % k)).collect();
        Self::with_sizes(p, sigma, gamma, sizes)
    }

    pub fn with_sizes(p: usize, sigma: f64, gamma: f64, sizes: Vec<usize>) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let k = sizes.len();
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {gamma}")));
        }
        let theta_bar_sq = sharp_threshold(n, p, k, sigma)?;
        let centers = place_simplex_centers(p, k, (gamma * theta_bar_sq).sqrt())?;
        let spec = Self {
            n,
            p,
            k,
            sigma,
            gamma,
            sizes,
            centers,
            separation: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `Θ̄²` for this spec's `(n, p, K, σ)`.
    pub fn theta_bar_sq(&self) -> f64 {
        sharp_threshold(self.n, self.p, self.k, self.sigma).expect("validated spec")
    }

    /// Places the centers `theta_min` apart regardless of `γ`.
    pub fn with_separation(mut self, theta_min: f64) -> Result<Self> {
        if !(theta_min >= 0.0 && theta_min.is_finite()) {
            return Err(Error::InvalidArgument(format!("separation must be non-negative, got {theta_min}")));
        }
        self.centers = place_simplex_centers(self.p, self.k, theta_min)?;
        self.separation = Some(theta_min);
        self.validate()?;
        Ok(self)
    }

    /// Target minimal separation: `√(γ Θ̄²)` unless overridden.
    pub fn theta_min(&self) -> f64 {
        self.separation
            .unwrap_or_else(|| (self.gamma * self.theta_bar_sq()).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.p < self.k {
            return bad(format!("simplex placement needs p >= K, got p = {}, K = {}", self.p, self.k));
        }
        if self.sizes.len() != self.k || self.sizes.iter().sum::<usize>() != self.n {
            return bad("cluster sizes must have K entries summing to n".into());
        }
        if self.sizes.contains(&0) {
            return bad("every cluster needs at least one sample".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.centers.dim() != (self.p, self.k) {
            return bad(format!("centers must be {}x{}", self.p, self.k));
        }
        let target = self.theta_min();
        for a in 0..self.k {
            for b in a + 1..self.k {
                let d = (&self.centers.column(a) - &self.centers.column(b))
                    .mapv(|v| v * v)
                    .sum()
                    .sqrt();
                if (d - target).abs() > CENTER_TOL * target.max(1.0) {
                    return bad(format!("centers {a} and {b} are {d} apart, expected {target}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sizes_cover_n() {
        let spec = GmmSpec::balanced(10, 5, 3, 1.0, 1.0).unwrap();
        assert_eq!(spec.sizes, vec![4, 3, 3]);
        let spec = GmmSpec::balanced(1000, 20, 4, 1.0, 1.44).unwrap();
        assert_eq!(spec.sizes, vec![250; 4]);
        assert!((spec.theta_min().powi(2) - 1.44 * spec.theta_bar_sq()).abs() < 1e-9);
    }

    #[test]
    fn p_below_k_is_rejected() {
        assert!(GmmSpec::balanced(100, 2, 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn moved_center_breaks_validation() {
        let mut spec = GmmSpec::balanced(100, 4, 3, 1.0, 1.0).unwrap();
        spec.centers[[0, 0]] += 0.5;
        assert!(spec.validate().is_err());
    }
}
