//! WebAssembly bindings for the demo page in `www/`. Every entry point
//! returns a JSON string so the page needs no extra glue.
//!
//! Timing is disabled throughout: `wasm32-unknown-unknown` has no clock.

use lowrank_kmeans::baselines::spectral_embedding;
use lowrank_kmeans::bench::{run_method, Method};
use lowrank_kmeans::gmm::{sample, sharp_threshold};
use lowrank_kmeans::model::{GmmSpec, SolverConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Clustering {
    /// Sample coordinates in the top two singular directions.
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Vec<usize>,
    truth: Vec<usize>,
    misclust: f64,
    rel_z_err: Option<f64>,
    outer_iters: Option<usize>,
    theta_bar_sq: f64,
}

#[derive(Serialize)]
struct Curve {
    n: Vec<usize>,
    theta_bar_sq: Vec<f64>,
}

#[derive(Serialize)]
struct Trace {
    r: usize,
    rel_z_err: Vec<f64>,
    delta_y: Vec<f64>,
    misclust: f64,
}

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(fail)
}

/// Simulates a `p = 20` Gaussian mixture and clusters it with `method`
/// (`bm`, `km`, `nmf` or `spectral`).
#[wasm_bindgen]
pub fn cluster_sample(n: usize, k: usize, gamma: f64, seed: u32, method: &str) -> Result<String, JsError> {
    let method: Method = method.parse().map_err(fail)?;
    let spec = GmmSpec::balanced(n, 20, k, 1.0, gamma).map_err(fail)?;
    let s = sample(&spec, seed as u64, true).map_err(fail)?;
    let mut cfg = SolverConfig::new(k).with_seed(seed as u64);
    cfg.record_timing = false;
    let out = run_method(&s, method, 2 * k, seed as u64, &cfg, false).map_err(fail)?;
    let emb = spectral_embedding(&s.data, 2, seed as u64).map_err(fail)?;
    let scale: Vec<f64> = emb.values.iter().map(|v| v.sqrt()).collect();
    to_json(&Clustering {
        x: emb.vectors.column(0).iter().map(|v| v * scale[0]).collect(),
        y: emb.vectors.column(1).iter().map(|v| v * scale[1]).collect(),
        labels: out.labels.labels().to_vec(),
        truth: s.truth.labels().to_vec(),
        misclust: out.misclust.unwrap_or(f64::NAN),
        rel_z_err: out.rel_z_err,
        outer_iters: out.solve.as_ref().map(|r| r.outer_iters()),
        theta_bar_sq: s.theta_bar_sq,
    })
}

/// Sharp threshold `Θ̄²` on a geometric grid of `steps` sample sizes.
#[wasm_bindgen]
pub fn threshold_curve(p: usize, k: usize, sigma: f64, n_min: usize, n_max: usize, steps: usize) -> Result<String, JsError> {
    if n_min < 2 || n_max < n_min || steps < 2 {
        return Err(JsError::new("need 2 <= n_min <= n_max and steps >= 2"));
    }
    let ratio = (n_max as f64 / n_min as f64).powf(1.0 / (steps - 1) as f64);
    let mut n = Vec::with_capacity(steps);
    for i in 0..steps {
        let v = (n_min as f64 * ratio.powi(i as i32)).round() as usize;
        if n.last() != Some(&v) {
            n.push(v);
        }
    }
    let theta_bar_sq = n
        .iter()
        .map(|&m| sharp_threshold(m, p, k, sigma))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    to_json(&Curve { n, theta_bar_sq })
}

/// Per-outer-iteration relative membership error for each rank in `ranks`
/// (comma-separated) on one simulated sample.
#[wasm_bindgen]
pub fn convergence_traces(n: usize, k: usize, gamma: f64, seed: u32, ranks: &str) -> Result<String, JsError> {
    let ranks = ranks
        .split(',')
        .map(|r| r.trim().parse::<usize>().map_err(fail))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = GmmSpec::balanced(n, 20, k, 1.0, gamma).map_err(fail)?;
    let s = sample(&spec, seed as u64, true).map_err(fail)?;
    let mut traces = Vec::new();
    for r in ranks {
        let mut cfg = SolverConfig::new(k).with_rank(r).with_seed(seed as u64);
        cfg.record_timing = false;
        let out = run_method(&s, Method::Bm, r, seed as u64, &cfg, false).map_err(fail)?;
        let res = out.solve.expect("bm returns its solve");
        traces.push(Trace {
            r,
            rel_z_err: res.trace.iter().map(|t| t.rel_z_err.unwrap_or(f64::NAN)).collect(),
            delta_y: res.trace.iter().map(|t| t.delta_y).collect(),
            misclust: out.misclust.unwrap_or(f64::NAN),
        });
    }
    to_json(&traces)
}
