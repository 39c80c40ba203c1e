//! `lowrank-kmeans simulate|solve|bench-tradeoff|bench-convergence|bench-scaling`
//!
//! Exit status: 0 on success, 1 if any replicate failed, 2 on usage errors.

mod settings;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lowrank_kmeans::bench::{self, ExperimentPlan, Method};
use lowrank_kmeans::io::{self, DatasetFile, LabelColumn, RunRecord};
use lowrank_kmeans::metrics::EvalReport;
use lowrank_kmeans::model::{DataMatrix, GmmSpec, Labeling};
use lowrank_kmeans::{gmm, Error};
use serde_json::json;

use settings::{FileSettings, Flags, Settings};

#[derive(Parser)]
#[command(name = "lowrank-kmeans", version, about = "Nonnegative low-rank K-means relaxation: simulate, solve, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw Gaussian-mixture samples and write them as CSV.
    Simulate,
    /// Cluster a CSV dataset or a simulated sample.
    Solve,
    /// Mis-clustering error and wall time across sample sizes and methods.
    BenchTradeoff,
    /// Per-outer-iteration error traces for several ranks.
    BenchConvergence,
    /// Per-inner-iteration cost across sample sizes.
    BenchScaling,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = (|| {
        let file = match &cli.flags.config {
            Some(path) => settings::load_file(path).map_err(Failure::Usage)?,
            None => FileSettings::default(),
        };
        let s = Settings::merge(cli.flags.clone(), file);
        match cli.command {
            Command::Simulate => simulate(&s),
            Command::Solve => solve(&s),
            Command::BenchTradeoff => tradeoff(&s),
            Command::BenchConvergence => convergence(&s),
            Command::BenchScaling => scaling(&s),
        }
    })();

    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} replicate(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn out_dir(s: &Settings, default: &str) -> Result<PathBuf, Failure> {
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn methods(s: &Settings, default: &[Method]) -> Result<Vec<Method>, Failure> {
    match &s.method {
        None => Ok(default.to_vec()),
        Some(list) => list.iter().map(|m| m.parse::<Method>().map_err(Failure::from)).collect(),
    }
}

fn spec_from(s: &Settings) -> Result<GmmSpec, Failure> {
    let n = Settings::single(&s.n, "n", 1000).map_err(usage)?;
    let gamma = Settings::single(&s.gamma, "gamma", 1.44).map_err(usage)?;
    Ok(GmmSpec::balanced(n, s.p.unwrap_or(20), s.k.unwrap_or(4), s.sigma.unwrap_or(1.0), gamma)?)
}

fn simulate(s: &Settings) -> Result<usize, Failure> {
    let spec = spec_from(s)?;
    let dir = out_dir(s, ".")?;
    let base = s.seed.unwrap_or(0);
    for i in 0..s.replicates.unwrap_or(1) {
        let seed = base + i as u64;
        let sample = gmm::sample(&spec, seed, s.shuffle)?;
        let csv = dir.join(format!("sample-seed{seed}.csv"));
        io::save_csv(&csv, &sample.data, Some(&sample.truth), true)?;
        let meta = json!({
            "n": spec.n, "p": spec.p, "k": spec.k, "sigma": spec.sigma, "gamma": spec.gamma,
            "sizes": spec.sizes, "seed": seed, "shuffle": s.shuffle,
            "theta_min": sample.theta_min, "theta_bar_sq": sample.theta_bar_sq,
            "centers": spec.centers.columns().into_iter().map(|c| c.to_vec()).collect::<Vec<_>>(),
        });
        fs::write(dir.join(format!("sample-seed{seed}.json")), serde_json::to_string_pretty(&meta).unwrap())?;
        println!("{}", csv.display());
    }
    Ok(0)
}

struct Dataset {
    data: DataMatrix,
    truth: Option<Labeling>,
    spec: Option<GmmSpec>,
}

fn load_input(s: &Settings, path: &Path) -> Result<Dataset, Failure> {
    let mut file = DatasetFile::new(path).with_header(s.header);
    if let Some(col) = &s.label_column {
        file = file.with_labels(match col.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(col.clone()),
        });
    }
    let loaded = io::load_csv(&file).map_err(|e| match e {
        Error::Io(_) | Error::Csv(_) => Failure::Usage(format!("{}: {e}", path.display())),
        other => other.into(),
    })?;
    Ok(Dataset {
        data: loaded.data,
        truth: loaded.labels,
        spec: None,
    })
}

fn solve(s: &Settings) -> Result<usize, Failure> {
    let methods = methods(s, &[Method::Bm])?;
    let base = s.seed.unwrap_or(0);
    let dir = out_dir(s, "runs")?;
    let replicates = s.replicates.unwrap_or(1);
    if replicates == 0 {
        return Err(usage("replicates must be at least 1"));
    }
    let fixed = match &s.input {
        Some(path) => Some(load_input(s, path)?),
        None => None,
    };
    let k = s.k.or_else(|| fixed.as_ref().and_then(|d| d.truth.as_ref().map(Labeling::k))).unwrap_or(4);
    let rank = Settings::single(&s.r, "r", 2 * k).map_err(usage)?;
    let mut failed = 0;
    for i in 0..replicates {
        let seed = base + i as u64;
        let ds = match &fixed {
            Some(d) => Dataset {
                data: d.data.clone(),
                truth: d.truth.clone(),
                spec: None,
            },
            None => {
                let spec = spec_from(s)?;
                let sample = gmm::sample(&spec, seed, s.shuffle)?;
                Dataset {
                    data: sample.data,
                    truth: Some(sample.truth),
                    spec: Some(spec),
                }
            }
        };
        let mut cfg = lowrank_kmeans::model::SolverConfig::new(k).with_rank(rank).with_seed(seed);
        cfg.record_timing = s.timing;
        if let Some(m) = s.max_outer {
            cfg.max_outer = m;
        }
        cfg.validate()?;
        for &method in &methods {
            let mut record = RunRecord {
                method: method.name().into(),
                n: ds.data.n(),
                p: ds.data.p(),
                k,
                r: rank,
                gamma: ds.spec.as_ref().map_or(f64::NAN, |sp| sp.gamma),
                sigma: ds.spec.as_ref().map_or(f64::NAN, |sp| sp.sigma),
                seed,
                replicate: i,
                status: "ok".into(),
                misclust: None,
                rel_z_err: None,
                feas_eq: None,
                objective: None,
                outer_iters: None,
                inner_iters: None,
                wall_ms: 0.0,
            };
            match bench::run_on(&ds.data, ds.truth.as_ref(), method, k, rank, seed, &cfg, s.timing) {
                Ok(out) => {
                    record.misclust = out.misclust;
                    record.rel_z_err = out.rel_z_err;
                    record.wall_ms = out.wall_ms;
                    if let Some(res) = &out.solve {
                        record.feas_eq = Some(res.feas_eq);
                        record.objective = Some(res.objective);
                        record.outer_iters = Some(res.outer_iters());
                        record.inner_iters = Some(res.inner_iters());
                        let report = EvalReport {
                            misclust: out.misclust.unwrap_or(f64::NAN),
                            rel_z_err: out.rel_z_err,
                            feas_eq: Some(res.feas_eq),
                            objective: Some(res.objective),
                            wall_ms: out.wall_ms,
                        };
                        io::save_run(res, &report, &record, &dir)?;
                    } else {
                        io::append_ledger(&dir, &record)?;
                    }
                    let labels_path = dir.join(format!("{}-n{}-seed{seed}.labels.csv", method, ds.data.n()));
                    let labels: String = out.labels.labels().iter().map(|l| format!("{l}\n")).collect();
                    fs::write(labels_path, labels)?;
                    println!(
                        "{method} seed={seed} misclust={} wall_ms={:.1}",
                        out.misclust.map_or("n/a".into(), |m| format!("{m:.6}")),
                        out.wall_ms
                    );
                }
                Err(e) => {
                    eprintln!("{method} seed={seed} failed: {e}");
                    record.status = format!("failed: {e}");
                    io::append_ledger(&dir, &record)?;
                    failed += 1;
                }
            }
        }
    }
    Ok(failed)
}

fn plan_from(s: &Settings, mut plan: ExperimentPlan) -> Result<ExperimentPlan, Failure> {
    if let Some(n) = &s.n {
        plan.n_grid = n.clone();
    }
    if let Some(g) = &s.gamma {
        plan.gammas = g.clone();
    }
    if let Some(r) = &s.r {
        plan.ranks = r.clone();
    }
    plan.methods = methods(s, &plan.methods)?;
    if let Some(v) = s.p {
        plan.p = v;
    }
    if let Some(v) = s.k {
        plan.k = v;
        if s.r.is_none() {
            plan.ranks = if plan.name == "convergence" { vec![v, 2 * v, 20 * v] } else { vec![2 * v] };
        }
    }
    if let Some(v) = s.sigma {
        plan.sigma = v;
    }
    if let Some(v) = s.seed {
        plan.seed_base = v;
    }
    if let Some(v) = s.replicates {
        plan.replicates = v;
    }
    if let Some(v) = s.max_outer {
        plan.max_outer = v;
    }
    plan.shuffle = s.shuffle;
    plan.record_timing = s.timing;
    plan.validate()?;
    Ok(plan)
}

fn tradeoff(s: &Settings) -> Result<usize, Failure> {
    let plan = plan_from(s, ExperimentPlan::tradeoff())?;
    let dir = out_dir(s, "results")?;
    let report = bench::run_tradeoff(&plan, Some(&dir))?;
    for &n in &plan.n_grid {
        for &m in &plan.methods {
            if let Some(e) = report.mean_error(n, m) {
                println!("n={n} {m}: mean misclust {e:.5}");
            }
        }
    }
    println!("{}", report.path.expect("written").display());
    Ok(report.failures)
}

fn convergence(s: &Settings) -> Result<usize, Failure> {
    let plan = plan_from(s, ExperimentPlan::convergence())?;
    let dir = out_dir(s, "results")?;
    let report = bench::run_convergence(&plan, Some(&dir))?;
    for &r in &plan.ranks {
        if let Some(last) = report.means.iter().rfind(|m| m.r == r) {
            println!("r={r}: mean rel_z_err {:.3e} after {} outer iterations", last.mean_rel_z_err, last.outer_iter + 1);
        }
    }
    for p in &report.paths {
        println!("{}", p.display());
    }
    Ok(report.failures)
}

fn scaling(s: &Settings) -> Result<usize, Failure> {
    let plan = plan_from(s, ExperimentPlan::scaling())?;
    let dir = out_dir(s, "results")?;
    let report = bench::run_scaling(&plan, Some(&dir))?;
    for (n, t) in &report.medians {
        println!("n={n}: {t:.4} ms per inner iteration");
    }
    println!("log-log slope {:.3} (R² {:.3})", report.slope, report.r_squared);
    Ok(0)
}
