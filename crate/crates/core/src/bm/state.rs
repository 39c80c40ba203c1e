use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{shape_mismatch, Result};
use crate::gram::{frobenius_sq, GramOperator};
use crate::model::FactorMatrix;

/// `U (Uᵀ 1) - 1`, the row-sum residual of `Z = UUᵀ`, in `O(nr)`.
pub fn row_sum_residual(u: ArrayView2<'_, f64>) -> Array1<f64> {
    let colsum = u.sum_axis(ndarray::Axis(0));
    let mut res = u.dot(&colsum);
    res.mapv_inplace(|v| v - 1.0);
    res
}

/// Live state of the primal-dual iteration.
///
/// The residual and the shifted multiplier `ȳ = y + β·residual` are kept in
/// sync with `u`, `y` and `beta` by the setters.
#[derive(Debug, Clone)]
pub struct SolverState {
    u: FactorMatrix,
    y: Array1<f64>,
    beta: f64,
    residual: Array1<f64>,
    y_bar: Array1<f64>,
    pub outer_iter: usize,
    pub inner_iter: usize,
}

impl SolverState {
    pub fn new(u: FactorMatrix, y: Array1<f64>, beta: f64) -> Result<Self> {
        if y.len() != u.n() {
            return Err(shape_mismatch(format!("dual of length {}", u.n()), format!("length {}", y.len())));
        }
        let residual = row_sum_residual(u.view());
        let y_bar = &y + &(beta * &residual);
        Ok(Self {
            u,
            y,
            beta,
            residual,
            y_bar,
            outer_iter: 0,
            inner_iter: 0,
        })
    }

    pub fn u(&self) -> &FactorMatrix {
        &self.u
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn residual(&self) -> &Array1<f64> {
        &self.residual
    }

    pub fn y_bar(&self) -> &Array1<f64> {
        &self.y_bar
    }

    pub fn set_u(&mut self, u: FactorMatrix) {
        let residual = row_sum_residual(u.view());
        self.set_u_with_residual(u, residual);
    }

    pub(crate) fn set_u_with_residual(&mut self, u: FactorMatrix, residual: Array1<f64>) {
        self.u = u;
        self.residual = residual;
        self.refresh_y_bar();
    }

    pub fn set_y(&mut self, y: Array1<f64>) {
        self.y = y;
        self.refresh_y_bar();
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
        self.refresh_y_bar();
    }

    pub fn into_parts(self) -> (FactorMatrix, Array1<f64>) {
        (self.u, self.y)
    }

    fn refresh_y_bar(&mut self) {
        self.y_bar = &self.y + &(self.beta * &self.residual);
    }
}

/// Augmented Lagrangian
/// `⟨L·I + A, UUᵀ⟩ + ⟨y, res⟩ + (β/2)‖res‖²` with `res = UUᵀ1 - 1`,
/// evaluated as `-‖XU‖² + L‖U‖² + yᵀres + (β/2)‖res‖²`.
pub fn lagrangian_value(state: &SolverState, op: &GramOperator<'_>, shift: f64) -> Result<f64> {
    let sketch = op.sketch(state.u.view())?;
    Ok(value_from_parts(
        &sketch,
        state.u.values(),
        state.residual(),
        state.y(),
        state.beta(),
        shift,
    ))
}

pub(crate) fn value_from_parts(
    sketch: &Array2<f64>,
    u: &Array2<f64>,
    residual: &Array1<f64>,
    y: &Array1<f64>,
    beta: f64,
    shift: f64,
) -> f64 {
    -frobenius_sq(sketch) + shift * frobenius_sq(u) + y.dot(residual) + 0.5 * beta * residual.dot(residual)
}

/// `∇_U L_β = (2A + 2L·I + 1ȳᵀ + ȳ1ᵀ) U`, in `O(npr)`.
pub fn lagrangian_gradient(state: &SolverState, op: &GramOperator<'_>, shift: f64) -> Result<Array2<f64>> {
    let sketch = op.sketch(state.u.view())?;
    Ok(gradient_from_parts(op, &sketch, state.u.values(), state.y_bar(), shift))
}

pub(crate) fn gradient_from_parts(
    op: &GramOperator<'_>,
    sketch: &Array2<f64>,
    u: &Array2<f64>,
    y_bar: &Array1<f64>,
    shift: f64,
) -> Array2<f64> {
    let mut grad = op.lift(sketch);
    grad.mapv_inplace(|v| 2.0 * v);
    grad.scaled_add(2.0 * shift, u);
    // 1 (ȳᵀU): every row gets ȳᵀU; ȳ (1ᵀU): row i gets ȳ_i times the column sums.
    let ybar_u = u.t().dot(y_bar);
    let colsum = u.sum_axis(ndarray::Axis(0));
    for (mut row, &yb) in grad.rows_mut().into_iter().zip(y_bar.iter()) {
        row += &ybar_u;
        row.scaled_add(yb, &colsum);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ideal_factor, DataMatrix, Labeling};
    use ndarray::array;
    use rand::Rng;

    fn random(rows: usize, cols: usize, lo: f64, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..1.0))
    }

    /// Dense oracle: form `A` and `Z` and evaluate every term directly.
    fn dense_value(x: &Array2<f64>, u: &Array2<f64>, y: &Array1<f64>, beta: f64, shift: f64) -> f64 {
        let n = x.ncols();
        let a = Array2::from_shape_fn((n, n), |(i, j)| -(0..x.nrows()).map(|k| x[[k, i]] * x[[k, j]]).sum::<f64>());
        let z = Array2::from_shape_fn((n, n), |(i, j)| (0..u.ncols()).map(|c| u[[i, c]] * u[[j, c]]).sum::<f64>());
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += (a[[i, j]] + if i == j { shift } else { 0.0 }) * z[[i, j]];
            }
        }
        let res: Vec<f64> = (0..n).map(|i| (0..n).map(|j| z[[i, j]]).sum::<f64>() - 1.0).collect();
        total + (0..n).map(|i| y[i] * res[i]).sum::<f64>() + 0.5 * beta * res.iter().map(|r| r * r).sum::<f64>()
    }

    #[test]
    fn value_matches_dense_oracle() {
        let x = random(3, 6, -1.0, 1);
        let u = random(6, 2, 0.0, 2);
        let y = Array1::from_vec(vec![0.3, -0.1, 0.7, 0.0, -2.0, 1.1]);
        let data = DataMatrix::new(x.clone()).unwrap();
        let op = GramOperator::new(&data);
        let state = SolverState::new(FactorMatrix::unprojected(u.clone()), y.clone(), 1.7).unwrap();
        let got = lagrangian_value(&state, &op, 0.9).unwrap();
        assert!((got - dense_value(&x, &u, &y, 1.7, 0.9)).abs() < 1e-10);
    }

    #[test]
    fn value_at_ideal_factor_is_shift_times_k_plus_objective() {
        let truth = Labeling::new(vec![0, 1, 0, 1, 1], 2).unwrap();
        let data = DataMatrix::new(random(3, 5, -1.0, 3)).unwrap();
        let op = GramOperator::new(&data);
        let u = ideal_factor(&truth, 2).unwrap();
        let state = SolverState::new(u.clone(), Array1::zeros(5), 5.0).unwrap();
        assert!(state.residual().iter().all(|r| r.abs() < 1e-15));
        let expected = 2.5 * 2.0 + op.quadratic_form(u.view()).unwrap();
        assert!((lagrangian_value(&state, &op, 2.5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn penalty_off_reduces_to_shifted_objective() {
        let data = DataMatrix::new(random(2, 4, -1.0, 4)).unwrap();
        let op = GramOperator::new(&data);
        let u = random(4, 3, 0.0, 5);
        let state = SolverState::new(FactorMatrix::unprojected(u.clone()), Array1::zeros(4), 0.0).unwrap();
        let expected = op.quadratic_form(u.view()).unwrap() + 1.5 * frobenius_sq(&u);
        assert!((lagrangian_value(&state, &op, 1.5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_cancels_when_a_is_minus_identity() {
        let data = DataMatrix::new(Array2::eye(3)).unwrap();
        let op = GramOperator::new(&data);
        let u = random(3, 2, 0.0, 6);
        let state = SolverState::new(FactorMatrix::unprojected(u), Array1::zeros(3), 0.0).unwrap();
        let g = lagrangian_gradient(&state, &op, 1.0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn feasible_point_gradient_has_no_penalty_term() {
        let truth = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let data = DataMatrix::new(array![[1.0, 2.0, -1.0, 0.5], [0.0, 1.0, 1.0, 3.0]]).unwrap();
        let op = GramOperator::new(&data);
        let u = ideal_factor(&truth, 2).unwrap();
        let state = SolverState::new(u.clone(), Array1::zeros(4), 3.0).unwrap();
        assert!(state.y_bar().iter().all(|v| v.abs() < 1e-15));
        let g = lagrangian_gradient(&state, &op, 0.7).unwrap();
        let expected = 2.0 * op.apply(u.view()).unwrap() + 1.4 * u.values();
        assert!((&g - &expected).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn setters_keep_y_bar_in_sync() {
        let u = FactorMatrix::unprojected(random(3, 2, 0.0, 7));
        let mut state = SolverState::new(u, Array1::zeros(3), 1.0).unwrap();
        state.set_y(Array1::from_vec(vec![1.0, 2.0, 3.0]));
        state.set_beta(2.0);
        let expected = state.y() + &(2.0 * state.residual());
        assert_eq!(state.y_bar(), &expected);
    }
}
