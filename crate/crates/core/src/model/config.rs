use serde_json::json;

use super::FactorMatrix;
use crate::error::{Error, Result};

/// Step-size rule for the projected gradient steps.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// Halve from `initial` until the step is accepted; restarts every inner
    /// iteration. `None` takes the data-driven default.
    Backtracking { initial: Option<f64> },
    /// Constant step size, kept for convergence-rate experiments.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// i.i.d. uniform(0, 1) entries, then projected onto `Ω`.
    RandomProjected,
    /// Lloyd labeling turned into an ideal factor plus a small positive jitter.
    KMeansPlusPlus,
    Provided(FactorMatrix),
}

/// Geometric ramp of the penalty over the first outer iterations:
/// `β_k = β · min(1, start_fraction · growth^k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWarmup {
    pub start_fraction: f64,
    pub growth: f64,
}

impl Default for PenaltyWarmup {
    fn default() -> Self {
        Self {
            start_fraction: 1.0 / 8.0,
            growth: 1.6,
        }
    }
}

impl PenaltyWarmup {
    pub fn factor(&self, outer_iter: usize) -> f64 {
        (self.start_fraction * self.growth.powi(outer_iter as i32)).min(1.0)
    }
}

/// Parameters of the primal-dual solver. `None` entries are filled from the
/// data by [`crate::bm::set_defaults_from_data`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Cluster count `K`.
    pub k: usize,
    /// Factor rank `r`.
    pub rank: usize,
    /// Penalty `β`.
    pub beta: Option<f64>,
    /// Trace shift `L`.
    pub shift: Option<f64>,
    pub step: StepRule,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner stop on `‖U^{t+1} - U^t‖_F`.
    pub tol_inner: f64,
    /// Outer stop on `max(‖U_new - U‖_F, ‖U_new U_newᵀ 1 - 1‖_F)`.
    pub tol_outer: f64,
    pub seed: u64,
    pub init: InitStrategy,
    pub warmup: Option<PenaltyWarmup>,
    /// Lloyd restarts used when rounding the factor to labels.
    pub label_restarts: usize,
    /// Measure wall time per outer iteration. Off gives byte-identical
    /// traces across runs and avoids the system clock on targets without one.
    pub record_timing: bool,
}

impl SolverConfig {
    /// Defaults for `k` clusters: `r = 2K`, 100 outer and 100 inner iterations.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            rank: 2 * k,
            beta: None,
            shift: None,
            step: StepRule::Backtracking { initial: None },
            max_outer: 100,
            max_inner: 100,
            tol_inner: 1e-7,
            tol_outer: 1e-6,
            seed: 0,
            init: InitStrategy::RandomProjected,
            warmup: Some(PenaltyWarmup::default()),
            label_restarts: 10,
            record_timing: true,
        }
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.rank < self.k {
            return bad(format!("rank {} is below K = {}", self.rank, self.k));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta.is_finite()) {
                return bad(format!("penalty beta must be positive, got {beta}"));
            }
        }
        if let Some(shift) = self.shift {
            if !(shift > 0.0 && shift.is_finite()) {
                return bad(format!("trace shift L must be positive, got {shift}"));
            }
        }
        match self.step {
            StepRule::Fixed(a) | StepRule::Backtracking { initial: Some(a) } if !(a > 0.0 && a.is_finite()) => {
                return bad(format!("step size must be positive, got {a}"));
            }
            _ => {}
        }
        if self.max_inner == 0 {
            return bad("max_inner must be at least 1".into());
        }
        if let Some(w) = self.warmup {
            if !(w.start_fraction > 0.0 && w.growth >= 1.0) {
                return bad(format!("invalid penalty warmup {w:?}"));
            }
        }
        if self.label_restarts == 0 {
            return bad("label_restarts must be at least 1".into());
        }
        if let InitStrategy::Provided(u) = &self.init {
            if u.r() != self.rank {
                return bad(format!("provided factor has rank {}, config says {}", u.r(), self.rank));
            }
        }
        Ok(())
    }

    /// JSON echo of the configuration for run summaries.
    pub fn describe(&self) -> serde_json::Value {
        let step = match self.step {
            StepRule::Backtracking { initial } => json!({"rule": "backtracking", "initial": initial}),
            StepRule::Fixed(a) => json!({"rule": "fixed", "alpha": a}),
        };
        let init = match self.init {
            InitStrategy::RandomProjected => "random",
            InitStrategy::KMeansPlusPlus => "kmeans++",
            InitStrategy::Provided(_) => "provided",
        };
        json!({
            "k": self.k,
            "rank": self.rank,
            "beta": self.beta,
            "shift": self.shift,
            "step": step,
            "max_outer": self.max_outer,
            "max_inner": self.max_inner,
            "tol_inner": self.tol_inner,
            "tol_outer": self.tol_outer,
            "seed": self.seed,
            "init": init,
            "warmup": self.warmup.map(|w| json!({"start_fraction": w.start_fraction, "growth": w.growth})),
            "label_restarts": self.label_restarts,
            "record_timing": self.record_timing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SolverConfig::new(4);
        assert_eq!(cfg.rank, 8);
        assert_eq!(cfg.max_inner, 100);
        cfg.validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let mut cfg = SolverConfig::new(3).with_rank(2);
        assert!(cfg.validate().is_err());
        cfg.rank = 3;
        cfg.beta = Some(0.0);
        assert!(cfg.validate().is_err());
        cfg.beta = Some(1.0);
        cfg.shift = Some(-1.0);
        assert!(cfg.validate().is_err());
        cfg.shift = None;
        cfg.max_inner = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn warmup_ramps_to_one() {
        let w = PenaltyWarmup::default();
        assert!(w.factor(0) < 1.0);
        assert_eq!(w.factor(5), 1.0);
        assert_eq!(w.factor(50), 1.0);
    }
}
