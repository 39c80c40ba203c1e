//! Flag and config-file merging. Every flag has a config-file key of the same
//! name; flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

/// A single value or a list, so `n = 1000` and `n = [400, 1600]` both parse.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub n: Option<OneOrMany<usize>>,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<OneOrMany<usize>>,
    pub gamma: Option<OneOrMany<f64>>,
    pub sigma: Option<f64>,
    pub method: Option<OneOrMany<String>>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub max_outer: Option<usize>,
    pub shuffle: Option<bool>,
    pub timing: Option<bool>,
    pub input: Option<PathBuf>,
    pub header: Option<bool>,
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Sample size; comma-separated list for benchmark grids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Feature dimension.
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Number of clusters.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Factor rank; comma-separated list for convergence runs.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r: Vec<usize>,
    /// Separation as a multiple of the sharp threshold; list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Noise standard deviation.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// bm, km, nmf or spectral; list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    pub method: Vec<String>,
    /// Base seed; replicate i uses seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// TOML file with any of the flags as keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Outer iteration cap for BM.
    #[arg(long, global = true)]
    pub max_outer: Option<usize>,
    /// Keep simulated samples in block order.
    #[arg(long, global = true)]
    pub no_shuffle: bool,
    /// Write zeros in timing columns so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
    /// CSV of features, one sample per row (solve only).
    #[arg(long, global = true, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// The input CSV has a header row.
    #[arg(long, global = true)]
    pub header: bool,
    /// Name or 0-based index of the label column in the input CSV.
    #[arg(long, global = true)]
    pub label_column: Option<String>,
}

/// Fully merged settings; unset entries fall back to per-command defaults.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub n: Option<Vec<usize>>,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<Vec<usize>>,
    pub gamma: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub method: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub max_outer: Option<usize>,
    pub shuffle: bool,
    pub timing: bool,
    pub input: Option<PathBuf>,
    pub header: bool,
    pub label_column: Option<String>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

pub fn load_file(path: &Path) -> Result<FileSettings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

impl Settings {
    pub fn merge(flags: Flags, file: FileSettings) -> Self {
        Self {
            n: nonempty(flags.n).or(file.n.map(OneOrMany::into_vec)),
            p: flags.p.or(file.p),
            k: flags.k.or(file.k),
            r: nonempty(flags.r).or(file.r.map(OneOrMany::into_vec)),
            gamma: nonempty(flags.gamma).or(file.gamma.map(OneOrMany::into_vec)),
            sigma: flags.sigma.or(file.sigma),
            method: nonempty(flags.method).or(file.method.map(OneOrMany::into_vec)),
            seed: flags.seed.or(file.seed),
            replicates: flags.replicates.or(file.replicates),
            out: flags.out.or(file.out),
            max_outer: flags.max_outer.or(file.max_outer),
            shuffle: !flags.no_shuffle && file.shuffle.unwrap_or(true),
            timing: !flags.no_timing && file.timing.unwrap_or(true),
            input: flags.input.or(file.input),
            header: flags.header || file.header.unwrap_or(false),
            label_column: flags.label_column.or(file.label_column),
        }
    }

    /// The single value of a list setting, for commands that take one.
    pub fn single<T: Copy>(list: &Option<Vec<T>>, name: &str, default: T) -> Result<T, String> {
        match list.as_deref() {
            None => Ok(default),
            Some([v]) => Ok(*v),
            Some(_) => Err(format!("--{name} takes a single value for this command")),
        }
    }
}
