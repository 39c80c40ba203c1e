//! Evaluation: permutation-matched mis-clustering error and the relative
//! membership-matrix error.

use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Result};
use crate::model::{FactorMatrix, Labeling};

/// Summary metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub misclust: f64,
    /// Only defined for methods that produce a factor.
    pub rel_z_err: Option<f64>,
    pub feas_eq: Option<f64>,
    pub objective: Option<f64>,
    pub wall_ms: f64,
}

/// Fraction of samples misassigned under the best bijection between
/// estimated and true labels. Labels without a partner count as errors.
pub fn misclustering_error(est: &Labeling, truth: &Labeling) -> Result<f64> {
    if est.n() != truth.n() {
        return Err(shape_mismatch(format!("{} labels", truth.n()), format!("{}", est.n())));
    }
    let m = est.k().max(truth.k());
    let mut agree = vec![vec![0i64; m]; m];
    for (&e, &t) in est.labels().iter().zip(truth.labels()) {
        agree[e][t] += 1;
    }
    let cost: Vec<Vec<i64>> = agree.iter().map(|row| row.iter().map(|&a| -a).collect()).collect();
    let matched: i64 = -assignment_cost(&cost);
    Ok(1.0 - matched as f64 / est.n() as f64)
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials, `O(m³)`). Returns the optimal total cost.
pub fn assignment_cost(cost: &[Vec<i64>]) -> i64 {
    let assignment = hungarian(cost);
    assignment.iter().enumerate().map(|(row, &col)| cost[row][col]).sum()
}

/// Optimal column for each row of a square cost matrix.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let m = cost.len();
    if m == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=m {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = i64::MAX;
            let mut col1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; m];
    for j in 1..=m {
        out[owner[j] - 1] = j - 1;
    }
    out
}

/// `‖UUᵀ - Z*‖_F / ‖Z*‖_F` with `Z*` the membership matrix of `truth`,
/// through `‖UUᵀ - Z*‖² = ‖UᵀU‖² - 2Σ_k ‖Uᵀ1_{G_k}‖²/n_k + K` and
/// `‖Z*‖_F = √K`. Costs `O(nr²)`.
pub fn relative_membership_error(u: &FactorMatrix, truth: &Labeling) -> Result<f64> {
    if u.n() != truth.n() {
        return Err(shape_mismatch(format!("{} factor rows", truth.n()), format!("{}", u.n())));
    }
    let k = truth.k();
    let uv = u.view();
    let gram = uv.t().dot(&uv);
    let gram_sq: f64 = gram.iter().map(|v| v * v).sum();
    let mut sums = ndarray::Array2::<f64>::zeros((k, u.r()));
    for (row, &label) in uv.rows().into_iter().zip(truth.labels()) {
        let mut s = sums.row_mut(label);
        s += &row;
    }
    let cross: f64 = sums
        .rows()
        .into_iter()
        .zip(truth.sizes())
        .map(|(s, &nk)| s.dot(&s) / nk as f64)
        .sum();
    let sq = (gram_sq - 2.0 * cross + k as f64).max(0.0);
    Ok(sq.sqrt() / (k as f64).sqrt())
}
