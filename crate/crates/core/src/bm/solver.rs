use std::time::Duration;

use ndarray::{Array1, Array2, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::defaults::set_defaults_from_data;
use super::labels::extract_labels_with;
use super::projection::project_owned;
use super::state::{gradient_from_parts, row_sum_residual, value_from_parts, SolverState};
use crate::baselines::{kmeans_rows, KMeansOptions};
use crate::error::{Error, Result};
use crate::gram::{frobenius_sq, GramOperator};
use crate::metrics::relative_membership_error;
use crate::model::{ideal_factor, DataMatrix, FactorMatrix, InitStrategy, Labeling, SolverConfig, StepRule};
use crate::rng;

/// Halvings allowed per backtracking search before the inner loop gives up.
const MAX_HALVINGS: usize = 60;
/// Random restarts allowed when a fixed step projects to zero.
const MAX_REINITS: usize = 3;
const INIT_JITTER: f64 = 1e-3;

/// One row per outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub inner_iters: usize,
    /// `⟨A, UUᵀ⟩`.
    pub objective: f64,
    /// `‖UUᵀ1 - 1‖_∞` after the primal step.
    pub feas_inf: f64,
    pub delta_u: f64,
    pub delta_y: f64,
    pub rel_z_err: Option<f64>,
    /// Wall time since the solve started.
    pub elapsed_ms: f64,
    /// Wall time spent inside this outer iteration's primal descent.
    pub inner_ms: f64,
    /// Penalty in effect for this iteration.
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: FactorMatrix,
    pub y: Array1<f64>,
    pub labels: Labeling,
    /// `⟨A, UUᵀ⟩`.
    pub objective: f64,
    /// `‖UUᵀ1 - 1‖_∞`.
    pub feas_eq: f64,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    /// Configuration with every data-driven default filled in.
    pub resolved: SolverConfig,
    pub elapsed_ms: f64,
}

impl SolveResult {
    pub fn outer_iters(&self) -> usize {
        self.trace.len()
    }

    pub fn inner_iters(&self) -> usize {
        self.trace.iter().map(|t| t.inner_iters).sum()
    }
}

/// Outcome of one primal descent phase.
#[derive(Debug, Clone, Default)]
pub struct PrimalOutcome {
    pub iterations: usize,
    /// `L_β(U^t, y)` after each accepted step, starting with the entry value.
    pub values: Vec<f64>,
    /// `‖U^{t+1} - U^t‖_F` of the last step.
    pub last_step: f64,
    /// Backtracking found no acceptable step.
    pub stalled: bool,
    pub reinitializations: usize,
}

fn resolved_shift(cfg: &SolverConfig) -> Result<f64> {
    cfg.shift
        .ok_or_else(|| Error::InvalidArgument("trace shift L is unset; resolve defaults first".into()))
}

fn random_factor(n: usize, r: usize, k: usize, rng: &mut rng::Rng) -> Result<FactorMatrix> {
    let v = Array2::from_shape_fn((n, r), |_| rng.random::<f64>());
    project_owned(v, k)
}

/// Projected gradient steps `U ← Π_Ω(U - α∇_U L_β(U, y))` with `y` and `β`
/// taken from `state`, until `‖ΔU‖_F ≤ tol_inner` or `max_inner` steps.
///
/// Under backtracking every accepted step satisfies the sufficient-decrease
/// test `L(U⁺) ≤ L(U) + ⟨G, U⁺-U⟩ + ‖U⁺-U‖²/(2α)`, so `L_β` never increases.
pub fn primal_descent(state: &mut SolverState, op: &GramOperator<'_>, cfg: &SolverConfig) -> Result<PrimalOutcome> {
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, 0xd15c_0000 + state.outer_iter as u64));
    descend(state, op, cfg, &mut rng, MAX_REINITS)
}

fn descend(
    state: &mut SolverState,
    op: &GramOperator<'_>,
    cfg: &SolverConfig,
    rng: &mut rng::Rng,
    reinit_budget: usize,
) -> Result<PrimalOutcome> {
    let shift = resolved_shift(cfg)?;
    let k = cfg.k;
    let mut sketch = op.sketch(state.u().view())?;
    let mut value = value_from_parts(&sketch, state.u().values(), state.residual(), state.y(), state.beta(), shift);
    let mut out = PrimalOutcome {
        values: vec![value],
        ..Default::default()
    };

    for _ in 0..cfg.max_inner {
        let grad = gradient_from_parts(op, &sketch, state.u().values(), state.y_bar(), shift);
        let accepted = match cfg.step {
            StepRule::Backtracking { initial } => {
                let alpha0 = initial.ok_or_else(|| {
                    Error::InvalidArgument("line-search start step is unset; resolve defaults first".into())
                })?;
                backtrack(state, op, &grad, value, alpha0, k, shift)?
            }
            StepRule::Fixed(alpha) => {
                let u = state.u().values();
                let cand = match project_owned(u - &(alpha * &grad), k) {
                    Ok(c) => c,
                    Err(Error::DegenerateProjection) => {
                        if out.reinitializations >= reinit_budget {
                            return Err(Error::SolverAborted(format!(
                                "projection degenerate after {reinit_budget} random reinitializations"
                            )));
                        }
                        out.reinitializations += 1;
                        random_factor(u.nrows(), u.ncols(), k, rng)?
                    }
                    Err(e) => return Err(e),
                };
                let sk = op.sketch(cand.view())?;
                let res = row_sum_residual(cand.view());
                let v = value_from_parts(&sk, cand.values(), &res, state.y(), state.beta(), shift);
                Some((cand, sk, res, v))
            }
        };
        let Some((cand, sk, res, v)) = accepted else {
            out.stalled = true;
            break;
        };
        let step = distance(cand.values(), state.u().values());
        state.set_u_with_residual(cand, res);
        state.inner_iter += 1;
        sketch = sk;
        value = v;
        out.values.push(v);
        out.iterations += 1;
        out.last_step = step;
        if step <= cfg.tol_inner {
            break;
        }
    }
    Ok(out)
}

type Candidate = (FactorMatrix, Array2<f64>, Array1<f64>, f64);

fn backtrack(
    state: &SolverState,
    op: &GramOperator<'_>,
    grad: &Array2<f64>,
    value: f64,
    alpha0: f64,
    k: usize,
    shift: f64,
) -> Result<Option<Candidate>> {
    let u = state.u().values();
    let mut alpha = alpha0;
    for _ in 0..MAX_HALVINGS {
        let trial = u - &(alpha * grad);
        match project_owned(trial, k) {
            Ok(cand) => {
                let mut inner = 0.0;
                let mut dist_sq = 0.0;
                Zip::from(cand.values()).and(u).and(grad).for_each(|&c, &x, &g| {
                    let d = c - x;
                    inner += g * d;
                    dist_sq += d * d;
                });
                let sk = op.sketch(cand.view())?;
                let res = row_sum_residual(cand.view());
                let v = value_from_parts(&sk, cand.values(), &res, state.y(), state.beta(), shift);
                if v.is_finite() && v <= value && v <= value + inner + dist_sq / (2.0 * alpha) {
                    return Ok(Some((cand, sk, res, v)));
                }
            }
            Err(Error::DegenerateProjection) => {}
            Err(e) => return Err(e),
        }
        alpha *= 0.5;
    }
    Ok(None)
}

fn distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    Zip::from(a).and(b).for_each(|&x, &y| s += (x - y) * (x - y));
    s.sqrt()
}

/// `y ← y + β(UUᵀ1 - 1)` with the penalty held in `state`. Returns `‖Δy‖₂`.
pub fn dual_ascent(state: &mut SolverState) -> f64 {
    let delta = state.beta() * state.residual();
    let norm = delta.dot(&delta).sqrt();
    let y = state.y() + &delta;
    state.set_y(y);
    norm
}

fn initial_factor(x: &DataMatrix, cfg: &SolverConfig, rng: &mut rng::Rng) -> Result<FactorMatrix> {
    let n = x.n();
    match &cfg.init {
        InitStrategy::RandomProjected => random_factor(n, cfg.rank, cfg.k, rng),
        InitStrategy::Provided(u) => {
            if u.n() != n {
                return Err(crate::error::shape_mismatch(format!("{n} factor rows"), format!("{}", u.n())));
            }
            project_owned(u.values().clone(), cfg.k)
        }
        InitStrategy::KMeansPlusPlus => {
            let rows = x.samples_as_rows();
            let fit = kmeans_rows(
                rows.view(),
                &KMeansOptions {
                    k: cfg.k,
                    restarts: cfg.label_restarts,
                    max_iter: 300,
                    seed: rng::derive_seed(cfg.seed, 0x1417),
                },
            )?;
            let labels = Labeling::compact(&fit.assignments)?;
            let mut v = ideal_factor(&labels, cfg.rank)?.into_values();
            v.mapv_inplace(|e| e + INIT_JITTER * rng.random::<f64>());
            project_owned(v, cfg.k)
        }
    }
}

/// Primal-dual solve without ground truth.
pub fn solve(x: &DataMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_with_truth(x, cfg, None)
}

/// Alternates [`primal_descent`] and [`dual_ascent`] from `y = 0` until
/// `max(‖ΔU‖_F, ‖UUᵀ1 - 1‖₂) ≤ tol_outer` or `max_outer` iterations.
///
/// When `truth` is given, the trace carries `‖UUᵀ - Z*‖_F / ‖Z*‖_F` per outer
/// iteration.
pub fn solve_with_truth(x: &DataMatrix, cfg: &SolverConfig, truth: Option<&Labeling>) -> Result<SolveResult> {
    cfg.validate()?;
    if cfg.k > x.n() {
        return Err(Error::InvalidArgument(format!("K = {} exceeds n = {}", cfg.k, x.n())));
    }
    if let Some(t) = truth {
        if t.n() != x.n() {
            return Err(crate::error::shape_mismatch(format!("{} labels", x.n()), format!("{}", t.n())));
        }
    }
    let clock = Clock::start(cfg.record_timing);
    let cfg = set_defaults_from_data(x, cfg)?;
    let beta = cfg.beta.expect("resolved");
    let op = GramOperator::new(x);
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, 0xb0));

    let u0 = initial_factor(x, &cfg, &mut rng)?;
    let ramp = |k: usize| beta * cfg.warmup.map_or(1.0, |w| w.factor(k));
    let mut state = SolverState::new(u0, Array1::zeros(x.n()), ramp(0))?;
    let mut trace = Vec::with_capacity(cfg.max_outer);
    let mut converged = false;
    let mut reinits = 0;

    for outer in 0..cfg.max_outer {
        state.outer_iter = outer;
        state.set_beta(ramp(outer));
        let before = state.u().values().clone();
        let inner_clock = Clock::start(cfg.record_timing);
        let primal = descend(&mut state, &op, &cfg, &mut rng, MAX_REINITS - reinits)?;
        let inner_ms = inner_clock.ms();
        reinits += primal.reinitializations;

        let delta_u = distance(state.u().values(), &before);
        let res = state.residual();
        let res_two = res.dot(res).sqrt();
        let feas_inf = res.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let objective = -frobenius_sq(&op.sketch(state.u().view())?);
        let rel_z_err = truth.map(|t| relative_membership_error(state.u(), t)).transpose()?;
        let delta_y = dual_ascent(&mut state);
        trace.push(TraceRecord {
            outer_iter: outer,
            inner_iters: primal.iterations,
            objective,
            feas_inf,
            delta_u,
            delta_y,
            rel_z_err,
            elapsed_ms: clock.ms(),
            inner_ms,
            beta: state.beta(),
        });
        log::debug!(
            "outer {outer}: inner {} obj {objective:.6e} feas {feas_inf:.3e} du {delta_u:.3e} dy {delta_y:.3e}",
            primal.iterations
        );
        if delta_u.max(res_two) <= cfg.tol_outer {
            converged = true;
            break;
        }
    }

    let (u, y) = state.into_parts();
    let res = row_sum_residual(u.view());
    let feas_eq = res.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let objective = -frobenius_sq(&op.sketch(u.view())?);
    let labels = extract_labels_with(&u, cfg.k, rng::derive_seed(cfg.seed, 0x1abe1), cfg.label_restarts)?;
    Ok(SolveResult {
        u,
        y,
        labels,
        objective,
        feas_eq,
        trace,
        converged,
        resolved: cfg,
        elapsed_ms: clock.ms(),
    })
}

/// Wall clock that reads nothing when timing is disabled.
pub(crate) struct Clock(Option<std::time::Instant>);

impl Clock {
    pub(crate) fn start(enabled: bool) -> Self {
        Self(enabled.then(std::time::Instant::now))
    }

    pub(crate) fn ms(&self) -> f64 {
        self.0.map_or(0.0, |t| duration_ms(t.elapsed()))
    }
}

fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::sample;
    use crate::metrics::misclustering_error;
    use crate::model::{validate_factor, GmmSpec};

    fn resolved(x: &DataMatrix, k: usize) -> SolverConfig {
        set_defaults_from_data(x, &SolverConfig::new(k)).unwrap()
    }

    #[test]
    fn zero_inner_budget_is_a_no_op() {
        let s = sample(&GmmSpec::balanced(40, 4, 2, 1.0, 1.0).unwrap(), 0, true).unwrap();
        let mut cfg = resolved(&s.data, 2);
        cfg.max_inner = 0;
        let u = random_factor(40, 4, 2, &mut rng::seeded(0)).unwrap();
        let mut state = SolverState::new(u.clone(), Array1::zeros(40), 1.0).unwrap();
        let out = primal_descent(&mut state, &GramOperator::new(&s.data), &cfg).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(state.u(), &u);
    }

    #[test]
    fn dual_ascent_matches_formula() {
        let (a, b) = (0.6_f64, 0.5_f64);
        let u = FactorMatrix::unprojected(ndarray::array![[a, 0.0], [b, 0.0], [0.0, 1.0]]);
        let mut state = SolverState::new(u, Array1::zeros(3), 2.0).unwrap();
        let res = state.residual().clone();
        let norm = dual_ascent(&mut state);
        for i in 0..3 {
            assert!((state.y()[i] - 2.0 * res[i]).abs() < 1e-15);
        }
        assert!((norm - 2.0 * res.dot(&res).sqrt()).abs() < 1e-14);

        state.set_beta(0.0);
        let before = state.y().clone();
        dual_ascent(&mut state);
        assert_eq!(state.y(), &before);
    }

    #[test]
    fn dual_ascent_toy_shift() {
        // Residual (0.1, -0.1, 0) with β = 2 shifts y by (0.2, -0.2, 0).
        let u = FactorMatrix::unprojected(ndarray::array![[1.1_f64.sqrt()], [0.9 / 1.1_f64.sqrt()], [0.0]]);
        let mut state = SolverState::new(u, Array1::zeros(3), 2.0).unwrap();
        let res = state.residual().clone();
        dual_ascent(&mut state);
        for i in 0..3 {
            assert!((state.y()[i] - 2.0 * res[i]).abs() < 1e-15);
        }
        let feasible = FactorMatrix::unprojected(ndarray::array![[1.0], [0.0]]);
        let mut s2 = SolverState::new(feasible, ndarray::array![0.3, -0.2], 5.0).unwrap();
        // Row 0 sums to 1, row 1 to 0: only row 1 moves.
        dual_ascent(&mut s2);
        assert_eq!(s2.y()[0], 0.3);
        assert_eq!(s2.y()[1], -0.2 - 5.0);
    }

    #[test]
    fn noiseless_clusters_are_recovered() {
        // σ = 0 has a zero threshold, so the separation is set directly.
        let spec = GmmSpec::balanced(400, 20, 4, 0.0, 1.0).unwrap().with_separation(10.0).unwrap();
        let s = sample(&spec, 3, true).unwrap();
        let res = solve_with_truth(&s.data, &SolverConfig::new(4).with_seed(3), Some(&s.truth)).unwrap();
        assert_eq!(misclustering_error(&res.labels, &s.truth).unwrap(), 0.0);
        assert!(validate_factor(&res.u, 4).is_ok());
        let last = res.trace.last().unwrap().rel_z_err.unwrap();
        assert!(last < 1e-3, "rel err {last}");
    }

    #[test]
    fn lagrangian_is_monotone_within_inner_loops() {
        let spec = GmmSpec::balanced(200, 10, 3, 1.0, 1.44).unwrap();
        let s = sample(&spec, 1, true).unwrap();
        let cfg = resolved(&s.data, 3);
        let op = GramOperator::new(&s.data);
        let u = random_factor(200, 6, 3, &mut rng::seeded(9)).unwrap();
        let mut state = SolverState::new(u, Array1::zeros(200), cfg.beta.unwrap()).unwrap();
        for outer in 0..5 {
            state.outer_iter = outer;
            let out = primal_descent(&mut state, &op, &cfg).unwrap();
            for w in out.values.windows(2) {
                assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
            }
            dual_ascent(&mut state);
        }
    }

    #[test]
    fn fixed_step_stays_feasible() {
        let spec = GmmSpec::balanced(120, 6, 3, 1.0, 1.44).unwrap();
        let s = sample(&spec, 2, true).unwrap();
        let mut cfg = resolved(&s.data, 3);
        let StepRule::Backtracking { initial: Some(a) } = cfg.step else { unreachable!() };
        cfg.step = StepRule::Fixed(a / 1000.0);
        cfg.max_outer = 10;
        let res = solve(&s.data, &cfg).unwrap();
        assert!(validate_factor(&res.u, 3).is_ok());
        assert!(res.trace.len() <= 10);
        assert!(res.trace.iter().all(|t| t.objective.is_finite()));
    }

    #[test]
    fn huge_fixed_step_reinitializes_then_aborts() {
        // A huge step pushes every entry negative once the gradient is
        // positive everywhere, which happens when y is large and positive.
        let x = DataMatrix::new(Array2::from_elem((1, 6), 1e-3)).unwrap();
        let mut cfg = SolverConfig::new(2).with_rank(2);
        cfg.beta = Some(1.0);
        cfg.shift = Some(1.0);
        cfg.step = StepRule::Fixed(1e6);
        let op = GramOperator::new(&x);
        let u = random_factor(6, 2, 2, &mut rng::seeded(0)).unwrap();
        let mut state = SolverState::new(u, Array1::from_elem(6, 10.0), 1.0).unwrap();
        let err = primal_descent(&mut state, &op, &cfg).unwrap_err();
        assert!(matches!(err, Error::SolverAborted(_)), "{err:?}");
    }

    #[test]
    fn same_seed_same_trace() {
        let spec = GmmSpec::balanced(150, 8, 3, 1.0, 1.2).unwrap();
        let s = sample(&spec, 5, true).unwrap();
        let mut cfg = SolverConfig::new(3).with_seed(11);
        cfg.record_timing = false;
        cfg.max_outer = 8;
        let a = solve_with_truth(&s.data, &cfg, Some(&s.truth)).unwrap();
        let b = solve_with_truth(&s.data, &cfg, Some(&s.truth)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.u, b.u);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn kmeanspp_init_is_feasible_and_close() {
        let spec = GmmSpec::balanced(200, 10, 4, 1.0, 1.44).unwrap();
        let s = sample(&spec, 7, true).unwrap();
        let mut cfg = SolverConfig::new(4);
        cfg.init = InitStrategy::KMeansPlusPlus;
        let u = initial_factor(&s.data, &cfg, &mut rng::seeded(0)).unwrap();
        assert!(validate_factor(&u, 4).is_ok());
        assert!(relative_membership_error(&u, &s.truth).unwrap() < 0.2);
    }
}
