//! The primal-dual solver for the nonnegative low-rank relaxation: projection
//! onto `Ω`, augmented Lagrangian value and gradient, inner projected gradient
//! descent, outer dual ascent and rounding of the factor to labels.

mod defaults;
mod labels;
mod projection;
mod solver;
mod state;

pub use defaults::{estimate_separation, set_defaults_from_data, PENALTY_SCALE, STEP_SCALE};
pub use labels::{extract_labels, extract_labels_with, DEFAULT_LABEL_RESTARTS};
pub use projection::project_omega;
pub use solver::{dual_ascent, primal_descent, solve, solve_with_truth, PrimalOutcome, SolveResult, TraceRecord};
pub use state::{lagrangian_gradient, lagrangian_value, row_sum_residual, SolverState};

pub(crate) use solver::Clock;
