use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;

use super::BaselineConfig;
use crate::bm::extract_labels_with;
use crate::error::{shape_mismatch, Result};
use crate::gram::{frobenius_sq, GramOperator};
use crate::model::{DataMatrix, FactorMatrix, Labeling};
use crate::rng;

const MAX_HALVINGS: usize = 60;
const ZERO_JITTER: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SymNmfFit {
    pub u: Array2<f64>,
    pub labels: Labeling,
    /// `‖A + UUᵀ‖²_F` at the returned factor.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// `‖A + UUᵀ‖²_F = ‖XXᵀ‖²_F - 2‖XU‖²_F + ‖UᵀU‖²_F` with `A = -XᵀX`.
pub fn symnmf_objective(x: &DataMatrix, u: ArrayView2<'_, f64>) -> Result<f64> {
    let op = GramOperator::new(x);
    let sketch = op.sketch(u)?;
    Ok(objective_from_parts(gram_norm_sq(x), &sketch, u))
}

/// `4(A + UUᵀ)U = 4(-Xᵀ(XU) + U(UᵀU))`, never forming an `n x n` matrix.
pub fn symnmf_gradient(x: &DataMatrix, u: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let op = GramOperator::new(x);
    let sketch = op.sketch(u)?;
    Ok(gradient_from_parts(&op, &sketch, u))
}

fn gram_norm_sq(x: &DataMatrix) -> f64 {
    let xv = x.values();
    frobenius_sq(&xv.dot(&xv.t()))
}

fn objective_from_parts(gram_sq: f64, sketch: &Array2<f64>, u: ArrayView2<'_, f64>) -> f64 {
    let utu = u.t().dot(&u);
    gram_sq - 2.0 * frobenius_sq(sketch) + frobenius_sq(&utu)
}

fn gradient_from_parts(op: &GramOperator<'_>, sketch: &Array2<f64>, u: ArrayView2<'_, f64>) -> Array2<f64> {
    let utu = u.t().dot(&u);
    let mut g = op.lift(sketch);
    g += &u.dot(&utu);
    g.mapv_inplace(|v| 4.0 * v);
    g
}

/// Projected gradient descent for `min_{U ≥ 0} ‖A + UUᵀ‖²_F` from a uniform
/// random start, with labels from rounding the rows of `U`.
pub fn symnmf_pgd(x: &DataMatrix, cfg: &BaselineConfig) -> Result<SymNmfFit> {
    cfg.validate(x.n())?;
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, 0x2f));
    let u0 = Array2::from_shape_fn((x.n(), cfg.rank), |_| rng.random::<f64>());
    symnmf_from(x, cfg, u0)
}

/// As [`symnmf_pgd`] from a caller-supplied start. An all-zero start is a
/// stationary point and gets a small positive jitter first.
pub fn symnmf_from(x: &DataMatrix, cfg: &BaselineConfig, mut u: Array2<f64>) -> Result<SymNmfFit> {
    cfg.validate(x.n())?;
    if u.nrows() != x.n() {
        return Err(shape_mismatch(format!("{} rows", x.n()), format!("{}", u.nrows())));
    }
    u.mapv_inplace(|v| v.max(0.0));
    let op = GramOperator::new(x);
    let gram_sq = gram_norm_sq(x);
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, 0x3f));
    if u.iter().all(|&v| v == 0.0) {
        u.mapv_inplace(|_| ZERO_JITTER * rng.random::<f64>());
    }

    // Best rescaling of the start along its ray: c² = ‖XU‖² / ‖UᵀU‖².
    let sketch = op.sketch(u.view())?;
    let utu = frobenius_sq(&u.t().dot(&u));
    if utu > 0.0 {
        let c = (frobenius_sq(&sketch) / utu).sqrt().sqrt();
        if c > 0.0 && c.is_finite() {
            u.mapv_inplace(|v| v * c);
        }
    }

    let mut sketch = op.sketch(u.view())?;
    let mut value = objective_from_parts(gram_sq, &sketch, u.view());
    let mut history = vec![value];
    let mut alpha = 1.0 / (4.0 * (gram_sq.sqrt() + frobenius_sq(&u.t().dot(&u)).sqrt())).max(f64::MIN_POSITIVE);
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        let grad = gradient_from_parts(&op, &sketch, u.view());
        let mut accepted = None;
        let mut a = alpha * 2.0;
        for _ in 0..MAX_HALVINGS {
            let mut cand = &u - &(a * &grad);
            cand.mapv_inplace(|v| v.max(0.0));
            let mut inner = 0.0;
            let mut dist_sq = 0.0;
            Zip::from(&cand).and(&u).and(&grad).for_each(|&c, &x, &g| {
                inner += g * (c - x);
                dist_sq += (c - x) * (c - x);
            });
            let sk = op.sketch(cand.view())?;
            let v = objective_from_parts(gram_sq, &sk, cand.view());
            if v.is_finite() && v <= value && v <= value + inner + dist_sq / (2.0 * a) {
                accepted = Some((cand, sk, v, dist_sq.sqrt()));
                break;
            }
            a *= 0.5;
        }
        let Some((cand, sk, v, step)) = accepted else { break };
        alpha = a;
        let scale = frobenius_sq(&cand).sqrt().max(1e-300);
        u = cand;
        sketch = sk;
        value = v;
        history.push(v);
        iterations += 1;
        if step <= cfg.tol * scale {
            break;
        }
    }

    let labels = extract_labels_with(
        &FactorMatrix::unprojected(u.clone()),
        cfg.k,
        rng::derive_seed(cfg.seed, 0x1abe1),
        cfg.restarts.max(crate::bm::DEFAULT_LABEL_RESTARTS),
    )?;
    Ok(SymNmfFit {
        u,
        labels,
        objective: value,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineMethod;
    use crate::gmm::sample;
    use crate::metrics::misclustering_error;
    use crate::model::GmmSpec;
    use ndarray::Array2;

    fn cfg(k: usize) -> BaselineConfig {
        BaselineConfig::new(BaselineMethod::SymNmf, k)
    }

    #[test]
    fn identity_data_makes_identity_stationary() {
        let x = DataMatrix::new(Array2::eye(4)).unwrap();
        let g = symnmf_gradient(&x, Array2::eye(4).view()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        assert!(symnmf_objective(&x, Array2::eye(4).view()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_start_is_jittered() {
        let spec = GmmSpec::balanced(40, 4, 2, 0.5, 1.0).unwrap();
        let s = sample(&spec, 0, true).unwrap();
        let x = &s.data;
        assert!(symnmf_gradient(x, Array2::zeros((40, 4)).view()).unwrap().iter().all(|&v| v == 0.0));
        let fit = symnmf_from(x, &cfg(2), Array2::zeros((40, 4))).unwrap();
        assert!(fit.iterations > 0);
        assert!(fit.objective < fit.history[0]);
    }

    #[test]
    fn objective_is_monotone_and_nonnegative() {
        let spec = GmmSpec::balanced(200, 10, 3, 1.0, 1.44).unwrap();
        let s = sample(&spec, 4, true).unwrap();
        let fit = symnmf_pgd(&s.data, &cfg(3)).unwrap();
        assert!(fit.u.iter().all(|&v| v >= 0.0));
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(fit.objective >= -1e-6 * fit.history[0]);
    }

    #[test]
    fn separated_clusters_are_found() {
        let spec = GmmSpec::balanced(150, 10, 3, 0.2, 1.0).unwrap().with_separation(10.0).unwrap();
        let s = sample(&spec, 1, true).unwrap();
        let fit = symnmf_pgd(&s.data, &cfg(3)).unwrap();
        assert_eq!(misclustering_error(&fit.labels, &s.truth).unwrap(), 0.0);
    }
}
