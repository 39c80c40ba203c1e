use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::model::FactorMatrix;

/// Euclidean projection onto `Ω = {U ≥ 0, ‖U‖²_F = K}`:
/// `√K · (V)₊ / ‖(V)₊‖_F`.
///
/// Fails with [`Error::DegenerateProjection`] when `(V)₊ = 0`; the solver then
/// reinitializes the iterate.
pub fn project_omega(v: ArrayView2<'_, f64>, k: usize) -> Result<FactorMatrix> {
    project_owned(v.to_owned(), k)
}

pub(crate) fn project_owned(mut positive: Array2<f64>, k: usize) -> Result<FactorMatrix> {
    positive.mapv_inplace(|x| if x > 0.0 { x } else { 0.0 });
    let norm = positive.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateProjection);
    }
    let scale = (k as f64).sqrt() / norm;
    positive.mapv_inplace(|x| x * scale);
    Ok(FactorMatrix::feasible_unchecked(positive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_factor;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn positive_input_is_only_rescaled() {
        let u = project_omega(array![[2.0, 0.0], [0.0, 0.0]].view(), 1).unwrap();
        assert_eq!(u.values(), &array![[1.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn negative_entries_are_clipped() {
        let u = project_omega(array![[1.0, -1.0], [1.0, 1.0]].view(), 2).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        let expected = array![[s, 0.0], [s, s]];
        assert!((u.values() - &expected).iter().all(|d| d.abs() < 1e-15));
        assert!(u.is_feasible());
    }

    #[test]
    fn nonpositive_input_is_degenerate() {
        assert!(matches!(
            project_omega(array![[-1.0, 0.0], [0.0, -3.0]].view(), 2),
            Err(Error::DegenerateProjection)
        ));
    }

    proptest! {
        #[test]
        fn lands_in_omega_and_is_idempotent(
            entries in proptest::collection::vec(-1.0f64..1.0, 12),
            k in 1usize..5,
        ) {
            let v = Array2::from_shape_vec((4, 3), entries).unwrap();
            prop_assume!(v.iter().any(|&x| x > 1e-3));
            let once = project_omega(v.view(), k).unwrap();
            prop_assert!(validate_factor(&once, k).is_ok());
            let twice = project_omega(once.view(), k).unwrap();
            prop_assert!((once.values() - twice.values()).iter().all(|d| d.abs() < 1e-14));
        }
    }
}
