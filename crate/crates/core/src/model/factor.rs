use ndarray::{Array2, ArrayView2};

use super::Labeling;
use crate::error::{Error, Result};

/// Tolerance on `|‖U‖²_F - K|` for a factor to count as feasible.
pub const NORM_TOL: f64 = 1e-10;

/// Whether a factor is known to lie in `Ω = {U ≥ 0, ‖U‖²_F = K}`.
///
/// The inner solver loop holds transiently infeasible iterates between the
/// gradient step and the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorState {
    Feasible,
    Unprojected,
}

/// The `n x r` Burer-Monteiro factor `U`, with `Z = U Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    values: Array2<f64>,
    state: FactorState,
}

impl FactorMatrix {
    pub fn unprojected(values: Array2<f64>) -> Self {
        Self {
            values,
            state: FactorState::Unprojected,
        }
    }

    /// Marks `values` as feasible without checking. Callers guarantee membership in `Ω`.
    pub(crate) fn feasible_unchecked(values: Array2<f64>) -> Self {
        Self {
            values,
            state: FactorState::Feasible,
        }
    }

    /// Wraps `values` as a feasible factor after checking it against `k`.
    pub fn feasible(values: Array2<f64>, k: usize) -> Result<Self> {
        let u = Self::unprojected(values);
        validate_factor(&u, k).map_err(|v| {
            Error::InvalidArgument(format!("factor is not feasible: {} violation(s), first {:?}", v.len(), v[0]))
        })?;
        Ok(Self {
            state: FactorState::Feasible,
            ..u
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Rank parameter `r` (column count).
    pub fn r(&self) -> usize {
        self.values.ncols()
    }

    pub fn state(&self) -> FactorState {
        self.state
    }

    pub fn is_feasible(&self) -> bool {
        self.state == FactorState::Feasible
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// A single broken constraint of `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorViolation {
    Negative { row: usize, col: usize, value: f64 },
    Norm { frobenius_sq: f64, expected: f64 },
    NonFinite { row: usize, col: usize },
}

/// Checks `U ≥ 0` and `‖U‖²_F = K` (within `1e-10`), reporting every violation.
pub fn validate_factor(u: &FactorMatrix, k: usize) -> Result<(), Vec<FactorViolation>> {
    let mut violations = Vec::new();
    for ((row, col), &value) in u.values.indexed_iter() {
        if !value.is_finite() {
            violations.push(FactorViolation::NonFinite { row, col });
        } else if value < 0.0 {
            violations.push(FactorViolation::Negative { row, col, value });
        }
    }
    let frobenius_sq = u.frobenius_sq();
    let expected = k as f64;
    if !((frobenius_sq - expected).abs() <= NORM_TOL) {
        violations.push(FactorViolation::Norm {
            frobenius_sq,
            expected,
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// The ideal factor `U*`: column `s` holds `1/√n_s` on the rows of cluster `s`.
///
/// Columns `K..r` are zero, and `U* U*ᵀ` is the block-constant membership matrix.
pub fn ideal_factor(truth: &Labeling, r: usize) -> Result<FactorMatrix> {
    let k = truth.k();
    if r < k {
        return Err(Error::InvalidArgument(format!("rank {r} is below cluster count {k}")));
    }
    let weights: Vec<f64> = truth.sizes().iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
    let mut values = Array2::zeros((truth.n(), r));
    for (i, &l) in truth.labels().iter().enumerate() {
        values[[i, l]] = weights[l];
    }
    Ok(FactorMatrix::feasible_unchecked(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn z_of(u: &FactorMatrix) -> Array2<f64> {
        u.values().dot(&u.values().t())
    }

    #[test]
    fn ideal_factor_two_pairs() {
        let truth = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let u = ideal_factor(&truth, 2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(u.values(), &array![[h, 0.0], [h, 0.0], [0.0, h], [0.0, h]]);
        assert!(validate_factor(&u, 2).is_ok());

        let padded = ideal_factor(&truth, 3).unwrap();
        assert!(padded.values().column(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singletons_give_identity() {
        let truth = Labeling::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(ideal_factor(&truth, 3).unwrap().values(), &Array2::<f64>::eye(3));
    }

    #[test]
    fn rank_below_k_is_rejected() {
        let truth = Labeling::new(vec![0, 1, 2], 3).unwrap();
        assert!(ideal_factor(&truth, 2).is_err());
    }

    #[test]
    fn membership_matrix_properties() {
        let truth = Labeling::new(vec![2, 0, 1, 0, 2, 2, 1], 3).unwrap();
        let z = z_of(&ideal_factor(&truth, 5).unwrap());
        for row in z.rows() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        assert!((z.diag().sum() - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn violations_are_located() {
        let truth = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let mut values = ideal_factor(&truth, 2).unwrap().into_values();
        values[[1, 1]] = -1e-3;
        let err = validate_factor(&FactorMatrix::unprojected(values), 2).unwrap_err();
        assert!(err.contains(&FactorViolation::Negative {
            row: 1,
            col: 1,
            value: -1e-3
        }));

        let zero = FactorMatrix::unprojected(Array2::zeros((4, 2)));
        assert_eq!(
            validate_factor(&zero, 2).unwrap_err(),
            vec![FactorViolation::Norm {
                frobenius_sq: 0.0,
                expected: 2.0
            }]
        );
    }
}
