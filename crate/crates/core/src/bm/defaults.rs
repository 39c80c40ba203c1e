use crate::baselines::{kmeans_rows, KMeansOptions};
use crate::error::Result;
use crate::model::{DataMatrix, SolverConfig, StepRule};
use crate::rng;

/// `β = PENALTY_SCALE · Θ̂²`.
pub const PENALTY_SCALE: f64 = 16.0;
/// `α₀ = STEP_SCALE / (K² n Θ̂²)`.
pub const STEP_SCALE: f64 = 30.0;

const SEPARATION_RESTARTS: usize = 3;
const SEPARATION_MAX_ITER: usize = 100;

/// Plug-in estimate of the squared minimal centroid separation: the smallest
/// pairwise squared distance between Lloyd centroids (K-means++ seeded).
///
/// Falls back to the mean pairwise squared distance between centroids when two
/// coincide, and for `K = 1` to the mean pairwise squared distance between
/// samples. Returns 1 if every fallback is zero.
pub fn estimate_separation(x: &DataMatrix, k: usize, seed: u64) -> Result<f64> {
    if k <= 1 {
        let n = x.n() as f64;
        if x.n() < 2 {
            return Ok(1.0);
        }
        // mean_{i≠j} ‖x_i - x_j‖² = 2n/(n-1) · (mean ‖x_i‖² - ‖x̄‖²)
        let mean = x.mean();
        let second = x.values().iter().map(|v| v * v).sum::<f64>() / n;
        let spread = 2.0 * n / (n - 1.0) * (second - mean.dot(&mean));
        return Ok(positive_or_one(spread));
    }
    let rows = x.samples_as_rows();
    let fit = kmeans_rows(
        rows.view(),
        &KMeansOptions {
            k,
            restarts: SEPARATION_RESTARTS,
            max_iter: SEPARATION_MAX_ITER,
            seed: rng::derive_seed(seed, 0x5e9a),
        },
    )?;
    let c = &fit.centroids;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..k {
        for b in a + 1..k {
            let d: f64 = c.row(a).iter().zip(c.row(b).iter()).map(|(u, v)| (u - v) * (u - v)).sum();
            min = min.min(d);
            sum += d;
            pairs += 1;
        }
    }
    if min > 0.0 {
        Ok(min)
    } else {
        Ok(positive_or_one(sum / pairs as f64))
    }
}

fn positive_or_one(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        v
    } else {
        1.0
    }
}

/// Fills unset `β`, `L` and line-search start `α₀` from the data:
/// `L = nΘ̂²/(2K)`, `β = 16·Θ̂²`, `α₀ = 30/(K² n Θ̂²)`.
///
/// A config with every parameter already set is returned unchanged.
pub fn set_defaults_from_data(x: &DataMatrix, cfg: &SolverConfig) -> Result<SolverConfig> {
    let step_set = !matches!(cfg.step, StepRule::Backtracking { initial: None });
    if cfg.beta.is_some() && cfg.shift.is_some() && step_set {
        return Ok(cfg.clone());
    }
    let theta_sq = estimate_separation(x, cfg.k, cfg.seed)?;
    let (n, k) = (x.n() as f64, cfg.k as f64);
    let mut out = cfg.clone();
    out.shift.get_or_insert(n * theta_sq / (2.0 * k));
    out.beta.get_or_insert(PENALTY_SCALE * theta_sq);
    if !step_set {
        out.step = StepRule::Backtracking {
            initial: Some(STEP_SCALE / (k * k * n * theta_sq)),
        };
    }
    Ok(out)
}
