//! Matrix-free access to the negative Gram matrix `A = -XᵀX`.
//!
//! Products are always evaluated as `-Xᵀ(XU)`, costing `O(npr)` time and
//! `O(pr + nr)` extra memory; the `n x n` matrix is never formed.

use ndarray::{Array2, ArrayView2};

use crate::error::{shape_mismatch, Result};
use crate::model::DataMatrix;

#[derive(Debug, Clone, Copy)]
pub struct GramOperator<'a> {
    data: &'a DataMatrix,
}

impl<'a> GramOperator<'a> {
    pub fn new(data: &'a DataMatrix) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &'a DataMatrix {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    fn check(&self, u: &ArrayView2<'_, f64>) -> Result<()> {
        if u.nrows() != self.n() {
            return Err(shape_mismatch(format!("{} rows", self.n()), format!("{} rows", u.nrows())));
        }
        Ok(())
    }

    /// The `p x r` sketch `XU`.
    pub fn sketch(&self, u: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(&u)?;
        Ok(self.data.values().dot(&u))
    }

    /// `-Xᵀ S` for a sketch `S = XU`.
    pub fn lift(&self, sketch: &Array2<f64>) -> Array2<f64> {
        let mut out = self.data.values().t().dot(sketch);
        out.mapv_inplace(|v| -v);
        out
    }

    /// `A U = -Xᵀ(XU)`.
    pub fn apply(&self, u: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let sketch = self.sketch(u)?;
        Ok(self.lift(&sketch))
    }

    /// `⟨A, UUᵀ⟩ = -‖XU‖²_F`.
    pub fn quadratic_form(&self, u: ArrayView2<'_, f64>) -> Result<f64> {
        let sketch = self.sketch(u)?;
        Ok(-frobenius_sq(&sketch))
    }
}

pub(crate) fn frobenius_sq(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    /// Dense reference: form `A = -XᵀX` entry by entry.
    fn dense_gram(x: &Array2<f64>) -> Array2<f64> {
        let n = x.ncols();
        Array2::from_shape_fn((n, n), |(i, j)| -(0..x.nrows()).map(|k| x[[k, i]] * x[[k, j]]).sum::<f64>())
    }

    fn naive_matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        Array2::from_shape_fn((a.nrows(), b.ncols()), |(i, j)| {
            (0..a.ncols()).map(|k| a[[i, k]] * b[[k, j]]).sum()
        })
    }

    #[test]
    fn identity_data_gives_negative_identity() {
        let x = DataMatrix::new(Array2::eye(2)).unwrap();
        let op = GramOperator::new(&x);
        assert_eq!(op.apply(Array2::eye(2).view()).unwrap(), -Array2::<f64>::eye(2));
        assert_eq!(op.quadratic_form(Array2::eye(2).view()).unwrap(), -2.0);
        assert_eq!(op.apply(Array2::zeros((2, 3)).view()).unwrap(), Array2::<f64>::zeros((2, 3)));
        assert_eq!(op.quadratic_form(Array2::zeros((2, 1)).view()).unwrap(), 0.0);
    }

    #[test]
    fn matches_dense_oracle() {
        let x = random(3, 5, 1);
        let u = random(5, 2, 2);
        let op_data = DataMatrix::new(x.clone()).unwrap();
        let op = GramOperator::new(&op_data);
        let expected = naive_matmul(&dense_gram(&x), &u);
        let got = op.apply(u.view()).unwrap();
        assert!((&got - &expected).iter().all(|d| d.abs() < 1e-12));

        let x = random(4, 6, 3);
        let u = random(6, 3, 4);
        let data = DataMatrix::new(x.clone()).unwrap();
        let au = naive_matmul(&dense_gram(&x), &u);
        let trace: f64 = (0..3).map(|c| (0..6).map(|i| u[[i, c]] * au[[i, c]]).sum::<f64>()).sum();
        let q = GramOperator::new(&data).quadratic_form(u.view()).unwrap();
        assert!((q - trace).abs() < 1e-10);
    }

    #[test]
    fn rejects_mismatched_rows() {
        let x = DataMatrix::new(array![[1.0, 2.0, 3.0]]).unwrap();
        assert!(GramOperator::new(&x).apply(Array2::zeros((2, 1)).view()).is_err());
    }

    #[test]
    fn linear_and_nonpositive() {
        let data = DataMatrix::new(random(4, 9, 5)).unwrap();
        let op = GramOperator::new(&data);
        for seed in 0..10 {
            let u = random(9, 3, 10 + seed);
            let v = random(9, 3, 100 + seed);
            let sum = op.apply((&u + &v).view()).unwrap();
            let parts = op.apply(u.view()).unwrap() + op.apply(v.view()).unwrap();
            assert!((&sum - &parts).iter().all(|d| d.abs() < 1e-10));
            assert!(op.quadratic_form(u.view()).unwrap() <= 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let data = DataMatrix::new(random(7, 40, 8)).unwrap();
        let u = random(40, 4, 9);
        let op = GramOperator::new(&data);
        assert_eq!(op.apply(u.view()).unwrap(), op.apply(u.view()).unwrap());
    }
}
