//! Nonnegative low-rank relaxation of K-means.
//!
//! The membership matrix `Z = UUᵀ` of the K-means semidefinite relaxation is
//! parameterized by a thin nonnegative factor `U` with `‖U‖²_F = K`, and the
//! row-sum constraint `UUᵀ1 = 1` is handled by an augmented Lagrangian. The
//! solver alternates projected gradient descent on `U` with dual ascent on
//! the multipliers, touching the data only through products with `X` and
//! `Xᵀ`, so each iteration costs `O(npr)` time and `O(np + nr)` memory.
//!
//! ```
//! use lowrank_kmeans::{bm, gmm, metrics, model::{GmmSpec, SolverConfig}};
//!
//! let spec = GmmSpec::balanced(200, 10, 2, 1.0, 2.0).unwrap();
//! let sample = gmm::sample(&spec, 7, true).unwrap();
//! let result = bm::solve(&sample.data, &SolverConfig::new(2).with_seed(7)).unwrap();
//! let err = metrics::misclustering_error(&result.labels, &sample.truth).unwrap();
//! assert!(err < 0.05);
//! ```

pub mod baselines;
pub mod bench;
pub mod bm;
pub mod error;
pub mod gmm;
pub mod gram;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
