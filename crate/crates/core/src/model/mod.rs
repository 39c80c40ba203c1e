//! Shared domain types: the data matrix, the nonnegative factor, cluster
//! labelings, solver configuration and the Gaussian-mixture specification.

mod config;
mod data;
mod factor;
mod gmm_spec;
mod labeling;

pub use config::{InitStrategy, PenaltyWarmup, SolverConfig, StepRule};
pub use data::DataMatrix;
pub use factor::{ideal_factor, validate_factor, FactorMatrix, FactorState, FactorViolation};
pub use gmm_spec::GmmSpec;
pub use labeling::Labeling;
