use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// The `p x n` sample matrix: one column per sample, one row per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    /// Wraps a `p x n` matrix, rejecting empty shapes and non-finite entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (p, n) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument(format!(
                "data matrix must be non-empty, got {p}x{n}"
            )));
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values })
    }

    /// Builds the matrix from row-per-sample records (the usual CSV orientation).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let p = samples.first().map_or(0, Vec::len);
        let mut values = Array2::zeros((p, n));
        for (i, sample) in samples.iter().enumerate() {
            if sample.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has {} features, expected {p}",
                    sample.len()
                )));
            }
            for (j, &v) in sample.iter().enumerate() {
                values[[j, i]] = v;
            }
        }
        Self::new(values)
    }

    /// Sample count.
    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// Feature dimension.
    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.column(i)
    }

    /// Samples as rows (`n x p`), in standard layout.
    pub fn samples_as_rows(&self) -> Array2<f64> {
        self.values.t().as_standard_layout().into_owned()
    }

    pub fn mean(&self) -> Array1<f64> {
        self.values
            .mean_axis(Axis(1))
            .expect("data matrix has at least one column")
    }

    /// Copy with the global mean subtracted from every sample.
    pub fn centered(&self) -> Self {
        let mean = self.mean();
        let values = &self.values - &mean.insert_axis(Axis(1));
        Self { values }
    }
}
