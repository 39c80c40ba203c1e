//! Experiment drivers: error versus time across sample sizes, per-iteration
//! convergence traces, and per-iteration cost scaling. Every CSV starts with
//! a `#` comment line holding the full plan as JSON.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{lloyd_kmeanspp, spectral_cluster, symnmf_pgd, BaselineConfig, BaselineMethod};
use crate::bm::{solve_with_truth, Clock, SolveResult};
use crate::error::{Error, Result};
use crate::gmm::{sample, GmmSample};
use crate::metrics::{misclustering_error, relative_membership_error};
use crate::model::{DataMatrix, GmmSpec, Labeling, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bm,
    Km,
    Nmf,
    Spectral,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bm, Method::Km, Method::Nmf, Method::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bm => "bm",
            Method::Km => "km",
            Method::Nmf => "nmf",
            Method::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}; expected bm, km, nmf or spectral")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub n_grid: Vec<usize>,
    pub gammas: Vec<f64>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub k: usize,
    pub p: usize,
    /// Ranks to sweep; tradeoff and scaling runs use the first.
    pub ranks: Vec<usize>,
    pub sigma: f64,
    pub seed_base: u64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub shuffle: bool,
    /// Off writes zero for every timing column so reruns are byte-identical.
    pub record_timing: bool,
}

impl ExperimentPlan {
    /// Error versus time grid: `n` from 400 doubling to 12 800 at `γ = 0.64`.
    pub fn tradeoff() -> Self {
        Self {
            name: "tradeoff".into(),
            n_grid: vec![400, 800, 1600, 3200, 6400, 12800],
            gammas: vec![0.64],
            methods: vec![Method::Bm, Method::Km, Method::Nmf, Method::Spectral],
            replicates: 20,
            k: 4,
            p: 20,
            ranks: vec![8],
            sigma: 1.0,
            seed_base: 0,
            max_outer: 100,
            max_inner: 100,
            shuffle: true,
            record_timing: true,
        }
    }

    /// Convergence traces at `n = 1000`, `γ = 1.44`, `r ∈ {K, 2K, 20K}`.
    pub fn convergence() -> Self {
        Self {
            name: "convergence".into(),
            n_grid: vec![1000],
            gammas: vec![1.44],
            methods: vec![Method::Bm],
            replicates: 30,
            ranks: vec![4, 8, 80],
            ..Self::tradeoff()
        }
    }

    /// Per-iteration cost for `n ∈ {2000, 4000, 8000, 16 000}`, `r = 8`.
    pub fn scaling() -> Self {
        Self {
            name: "scaling".into(),
            n_grid: vec![2000, 4000, 8000, 16000],
            gammas: vec![1.44],
            methods: vec![Method::Bm],
            replicates: 3,
            ranks: vec![8],
            max_outer: 3,
            ..Self::tradeoff()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.n_grid.is_empty() || self.gammas.is_empty() || self.methods.is_empty() || self.ranks.is_empty() {
            return bad("experiment grid is empty");
        }
        if self.ranks.iter().any(|&r| r < self.k) {
            return bad("every rank must be at least K");
        }
        if self.p < self.k {
            return bad("simplex centers need p >= K");
        }
        Ok(())
    }

    /// Seed of replicate `i`: `seed_base + i`.
    pub fn seed(&self, replicate: usize) -> u64 {
        self.seed_base + replicate as u64
    }

    pub fn spec(&self, n: usize, gamma: f64) -> Result<GmmSpec> {
        GmmSpec::balanced(n, self.p, self.k, self.sigma, gamma)
    }

    /// BM configuration for one replicate of this plan.
    pub fn solver_config(&self, rank: usize, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.k).with_rank(rank).with_seed(seed);
        cfg.max_outer = self.max_outer;
        cfg.max_inner = self.max_inner;
        cfg.record_timing = self.record_timing;
        cfg
    }

    fn header_comment(&self) -> Result<String> {
        Ok(format!("# plan: {}\n", serde_json::to_string(self)?))
    }
}

/// Result of running one method on one dataset.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub labels: Labeling,
    /// Against the truth, when one is known.
    pub misclust: Option<f64>,
    pub rel_z_err: Option<f64>,
    pub wall_ms: f64,
    pub solve: Option<SolveResult>,
}

/// Runs `method` on a simulated sample and scores it against the truth.
pub fn run_method(
    s: &GmmSample,
    method: Method,
    rank: usize,
    seed: u64,
    solver: &SolverConfig,
    record_timing: bool,
) -> Result<MethodOutcome> {
    run_on(&s.data, Some(&s.truth), method, s.spec.k, rank, seed, solver, record_timing)
}

/// Runs `method` with `k` clusters on `data`. `solver` configures BM; the
/// baselines take `rank` and `seed`.
#[allow(clippy::too_many_arguments)]
pub fn run_on(
    data: &DataMatrix,
    truth: Option<&Labeling>,
    method: Method,
    k: usize,
    rank: usize,
    seed: u64,
    solver: &SolverConfig,
    record_timing: bool,
) -> Result<MethodOutcome> {
    let base = |m: BaselineMethod| {
        let mut c = BaselineConfig::new(m, k).with_seed(seed);
        c.rank = rank;
        c
    };
    let clock = Clock::start(record_timing);
    let (labels, rel, solve) = match method {
        Method::Bm => {
            let res = solve_with_truth(data, solver, truth)?;
            let rel = truth.map(|t| relative_membership_error(&res.u, t)).transpose()?;
            (res.labels.clone(), rel, Some(res))
        }
        Method::Km => (lloyd_kmeanspp(data, &base(BaselineMethod::KMeansPP))?.0, None, None),
        Method::Nmf => (symnmf_pgd(data, &base(BaselineMethod::SymNmf))?.labels, None, None),
        Method::Spectral => (spectral_cluster(data, &base(BaselineMethod::Spectral))?, None, None),
    };
    let wall_ms = clock.ms();
    let misclust = truth.map(|t| misclustering_error(&labels, t)).transpose()?;
    Ok(MethodOutcome {
        labels,
        misclust,
        rel_z_err: rel,
        wall_ms,
        solve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub n: usize,
    pub gamma: f64,
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
    pub misclust: Option<f64>,
    pub rel_z_err: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TradeoffReport {
    pub rows: Vec<TradeoffRow>,
    pub path: Option<PathBuf>,
    pub failures: usize,
}

impl TradeoffReport {
    /// Mean mis-clustering error of the successful rows of one cell.
    pub fn mean_error(&self, n: usize, method: Method) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.n == n && r.method == method)
            .filter_map(|r| r.misclust)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Runs `f` over `0..jobs`, in parallel when available; output order follows
/// the job index, not completion time.
fn dispatch<T: Send>(jobs: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..jobs).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..jobs).map(f).collect()
    }
}

/// For each `(n, γ, method, replicate)`: sample, run, score. Failed runs are
/// kept as rows with a `failed:` status.
pub fn run_tradeoff(plan: &ExperimentPlan, out: Option<&Path>) -> Result<TradeoffReport> {
    plan.validate()?;
    let rank = plan.ranks[0];
    let mut cells = Vec::new();
    for &n in &plan.n_grid {
        for &gamma in &plan.gammas {
            for &method in &plan.methods {
                for rep in 0..plan.replicates {
                    cells.push((n, gamma, method, rep));
                }
            }
        }
    }
    let rows = dispatch(cells.len(), |i| {
        let (n, gamma, method, replicate) = cells[i];
        let seed = plan.seed(replicate);
        let outcome = plan.spec(n, gamma).and_then(|spec| {
            let s = sample(&spec, seed, plan.shuffle)?;
            run_method(&s, method, rank, seed, &plan.solver_config(rank, seed), plan.record_timing)
        });
        match outcome {
            Ok(o) => TradeoffRow {
                n,
                gamma,
                method,
                replicate,
                seed,
                status: "ok".into(),
                misclust: o.misclust,
                rel_z_err: o.rel_z_err,
                wall_ms: o.wall_ms,
            },
            Err(e) => {
                log::error!("{method} n={n} seed={seed} failed: {e}");
                TradeoffRow {
                    n,
                    gamma,
                    method,
                    replicate,
                    seed,
                    status: format!("failed: {e}"),
                    misclust: None,
                    rel_z_err: None,
                    wall_ms: 0.0,
                }
            }
        }
    });
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    let path = match out {
        Some(dir) => Some(write_rows(dir, "tradeoff.csv", &plan.header_comment()?, &rows)?),
        None => None,
    };
    Ok(TradeoffReport { rows, path, failures })
}

fn write_rows<T: Serialize>(dir: &Path, file: &str, header: &str, rows: &[T]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    let mut f = fs::File::create(&path)?;
    f.write_all(header.as_bytes())?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Reads a CSV written by this module, skipping the plan comment.
pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: usize,
    pub replicate: usize,
    pub seed: u64,
    pub outer_iter: usize,
    pub inner_iters: usize,
    pub rel_z_err: f64,
    pub delta_y: f64,
    pub feas_inf: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMeanRow {
    pub r: usize,
    pub outer_iter: usize,
    pub mean_rel_z_err: f64,
    pub replicates: usize,
}

/// One replicate's trace at one rank.
#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub r: usize,
    pub replicate: usize,
    pub seed: u64,
    pub misclust: f64,
    pub rel_z_err: Vec<f64>,
    pub delta_y: Vec<f64>,
    pub feas_eq: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub runs: Vec<ConvergenceRun>,
    pub means: Vec<ConvergenceMeanRow>,
    pub failures: usize,
    pub paths: Vec<PathBuf>,
}

/// Per-outer-iteration relative membership error of BM for each rank, on the
/// plan's first `(n, γ)`. Replicates share samples across ranks.
pub fn run_convergence(plan: &ExperimentPlan, out: Option<&Path>) -> Result<ConvergenceReport> {
    plan.validate()?;
    let spec = plan.spec(plan.n_grid[0], plan.gammas[0])?;
    let jobs: Vec<(usize, usize)> = plan
        .ranks
        .iter()
        .flat_map(|&r| (0..plan.replicates).map(move |rep| (r, rep)))
        .collect();
    let results = dispatch(jobs.len(), |i| {
        let (r, replicate) = jobs[i];
        let seed = plan.seed(replicate);
        let s = sample(&spec, seed, plan.shuffle)?;
        let res = solve_with_truth(&s.data, &plan.solver_config(r, seed), Some(&s.truth))?;
        Ok::<_, Error>(ConvergenceRun {
            r,
            replicate,
            seed,
            misclust: misclustering_error(&res.labels, &s.truth)?,
            rel_z_err: res.trace.iter().map(|t| t.rel_z_err.unwrap_or(f64::NAN)).collect(),
            delta_y: res.trace.iter().map(|t| t.delta_y).collect(),
            feas_eq: res.feas_eq,
            converged: res.converged,
        })
        .map(|run| (run, res.trace))
    });

    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let mut failures = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((run, trace)) => {
                rows.extend(trace.iter().map(|t| ConvergenceRow {
                    r: run.r,
                    replicate: run.replicate,
                    seed: run.seed,
                    outer_iter: t.outer_iter,
                    inner_iters: t.inner_iters,
                    rel_z_err: t.rel_z_err.unwrap_or(f64::NAN),
                    delta_y: t.delta_y,
                    feas_inf: t.feas_inf,
                    elapsed_ms: t.elapsed_ms,
                }));
                runs.push(run);
            }
            Err(e) => {
                log::error!("convergence job {:?} failed: {e}", jobs[i]);
                failures += 1;
            }
        }
    }
    let means = mean_traces(&runs, &plan.ranks);
    let mut paths = Vec::new();
    if let Some(dir) = out {
        let header = plan.header_comment()?;
        paths.push(write_rows(dir, "convergence.csv", &header, &rows)?);
        paths.push(write_rows(dir, "convergence_mean.csv", &header, &means)?);
    }
    Ok(ConvergenceReport {
        runs,
        means,
        failures,
        paths,
    })
}

/// Mean error per `(r, outer_iter)`; a run that stopped early contributes its
/// final value to later iterations.
fn mean_traces(runs: &[ConvergenceRun], ranks: &[usize]) -> Vec<ConvergenceMeanRow> {
    let mut out = Vec::new();
    for &r in ranks {
        let group: Vec<&ConvergenceRun> = runs.iter().filter(|x| x.r == r && !x.rel_z_err.is_empty()).collect();
        let len = group.iter().map(|x| x.rel_z_err.len()).max().unwrap_or(0);
        for k in 0..len {
            let sum: f64 = group.iter().map(|x| x.rel_z_err[k.min(x.rel_z_err.len() - 1)]).sum();
            out.push(ConvergenceMeanRow {
                r,
                outer_iter: k,
                mean_rel_z_err: sum / group.len() as f64,
                replicates: group.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub inner_iters: usize,
    pub inner_ms: f64,
    pub ms_per_inner: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `(n, median ms per inner iteration)`.
    pub medians: Vec<(usize, f64)>,
    pub slope: f64,
    pub r_squared: f64,
}

/// Median wall time per inner iteration of BM for each `n`, and the slope of
/// log-time against log-n. Timing covers the inner iterations only.
///
/// Replicates run one after another so timings do not compete for cores.
pub fn run_scaling(plan: &ExperimentPlan, out: Option<&Path>) -> Result<ScalingReport> {
    plan.validate()?;
    if plan.n_grid.len() < 2 {
        return Err(Error::InvalidArgument("scaling needs at least two sample sizes".into()));
    }
    let rank = plan.ranks[0];
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &n in &plan.n_grid {
        let spec = plan.spec(n, plan.gammas[0])?;
        let mut per = Vec::new();
        for replicate in 0..plan.replicates {
            let seed = plan.seed(replicate);
            let s = sample(&spec, seed, plan.shuffle)?;
            let mut cfg = plan.solver_config(rank, seed);
            cfg.record_timing = true;
            let res = solve_with_truth(&s.data, &cfg, None)?;
            let inner_iters: usize = res.trace.iter().map(|t| t.inner_iters).sum();
            let inner_ms: f64 = res.trace.iter().map(|t| t.inner_ms).sum();
            let ms_per_inner = inner_ms / inner_iters.max(1) as f64;
            per.push(ms_per_inner);
            rows.push(ScalingRow {
                n,
                replicate,
                seed,
                inner_iters,
                inner_ms,
                ms_per_inner,
            });
        }
        medians.push((n, median(&mut per)));
    }
    let xs: Vec<f64> = medians.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&(_, t)| t.max(1e-12).ln()).collect();
    let (slope, _, r_squared) = fit_line(&xs, &ys);
    let report = ScalingReport {
        rows,
        medians,
        slope,
        r_squared,
    };
    if let Some(dir) = out {
        write_rows(dir, "scaling.csv", &plan.header_comment()?, &report.rows)?;
        fs::write(dir.join("scaling_fit.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares line `y = slope·x + intercept`; returns `(slope, intercept, R²)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}
