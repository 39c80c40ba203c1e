//! CSV ingestion and run persistence.
//!
//! Files hold one sample per row; loading transposes them into the `p x n`
//! column-per-sample [`DataMatrix`].

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bm::{SolveResult, TraceRecord};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::model::{DataMatrix, Labeling};

pub const TRACE_COLUMNS: [&str; 6] = ["outer_iter", "inner_iters", "objective", "feas_inf", "rel_z_err", "elapsed_ms"];
pub const LEDGER_FILE: &str = "runs.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Header name; requires a header row.
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: b',',
            has_header: false,
            label_column: None,
        }
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }

    pub fn with_labels(mut self, column: LabelColumn) -> Self {
        self.label_column = Some(column);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub data: DataMatrix,
    pub labels: Option<Labeling>,
    /// Original label string of each dense label, in first-appearance order.
    pub label_names: Vec<String>,
    pub feature_names: Option<Vec<String>>,
}

/// Reads a row-per-sample CSV. Every feature cell must parse as a finite real
/// and every row must have the same number of cells.
pub fn load_csv(file: &DatasetFile) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(file.delimiter)
        .has_headers(file.has_header)
        .flexible(true)
        .from_path(&file.path)?;
    let parse_err = |line: u64, col: usize, msg: String| Error::Parse {
        path: file.path.clone(),
        line,
        col,
        msg,
    };

    let headers: Option<Vec<String>> = if file.has_header {
        Some(reader.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let label_idx = match (&file.label_column, &headers) {
        (None, _) => None,
        (Some(LabelColumn::Index(i)), _) => Some(*i),
        (Some(LabelColumn::Name(name)), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| parse_err(1, 0, format!("no column named {name:?}")))?,
        ),
        (Some(LabelColumn::Name(name)), None) => {
            return Err(Error::InvalidArgument(format!("label column {name:?} given by name but the file has no header")))
        }
    };

    let mut width = headers.as_ref().map(Vec::len);
    let mut samples = Vec::new();
    let mut raw_labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(line, record.len(), format!("expected {expected} cells, found {}", record.len())));
        }
        if let Some(li) = label_idx {
            if li >= expected {
                return Err(parse_err(line, li, format!("label column {li} out of range for {expected} columns")));
            }
        }
        let mut row = Vec::with_capacity(expected);
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                let id = match names.iter().position(|n| n == cell) {
                    Some(id) => id,
                    None => {
                        names.push(cell.to_owned());
                        names.len() - 1
                    }
                };
                raw_labels.push(id);
                continue;
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| parse_err(line, col, format!("{cell:?}: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, col, format!("non-finite value {cell:?}")));
            }
            row.push(v);
        }
        samples.push(row);
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no data rows", file.path.display())));
    }
    let data = DataMatrix::from_samples(&samples)?;
    let labels = label_idx.map(|_| Labeling::from_labels(raw_labels)).transpose()?;
    let feature_names = headers.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, n)| n)
            .collect()
    });
    Ok(LoadedDataset {
        data,
        labels,
        label_names: names,
        feature_names,
    })
}

/// Writes one sample per row, features `x0..x{p-1}` plus an optional trailing
/// `label` column. Values use the shortest round-trip representation.
pub fn save_csv(path: &Path, data: &DataMatrix, labels: Option<&Labeling>, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if header {
        let mut h: Vec<String> = (0..data.p()).map(|j| format!("x{j}")).collect();
        if labels.is_some() {
            h.push("label".into());
        }
        w.write_record(&h)?;
    }
    let mut row = Vec::with_capacity(data.p() + 1);
    for i in 0..data.n() {
        row.clear();
        row.extend(data.sample(i).iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            row.push(l.labels()[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line of the replicate ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub r: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub seed: u64,
    pub replicate: usize,
    pub status: String,
    pub misclust: Option<f64>,
    pub rel_z_err: Option<f64>,
    pub feas_eq: Option<f64>,
    pub objective: Option<f64>,
    pub outer_iters: Option<usize>,
    pub inner_iters: Option<usize>,
    pub wall_ms: f64,
}

/// Where [`save_run`] put its files.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub summary: PathBuf,
    pub trace: PathBuf,
    pub ledger: PathBuf,
}

/// Writes `trace` as CSV with the fixed trace columns.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for t in trace {
        w.write_record([
            t.outer_iter.to_string(),
            t.inner_iters.to_string(),
            t.objective.to_string(),
            t.feas_inf.to_string(),
            t.rel_z_err.map(|v| v.to_string()).unwrap_or_default(),
            t.elapsed_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Persists one replicate: `<tag>.json` summary, `<tag>.trace.csv`, and a row
/// appended to `runs.csv` in `dir`.
pub fn save_run(result: &SolveResult, report: &EvalReport, record: &RunRecord, dir: &Path) -> Result<RunPaths> {
    fs::create_dir_all(dir)?;
    let tag = format!("{}-n{}-seed{}", record.method, record.n, record.seed);
    let summary = dir.join(format!("{tag}.json"));
    let trace = dir.join(format!("{tag}.trace.csv"));
    let doc = serde_json::json!({
        "run": record,
        "config": result.resolved.describe(),
        "metrics": report,
        "converged": result.converged,
    });
    fs::write(&summary, serde_json::to_string_pretty(&doc)?)?;
    write_trace_csv(File::create(&trace)?, &result.trace)?;
    let ledger = append_ledger(dir, record)?;
    Ok(RunPaths { summary, trace, ledger })
}

/// Appends `record` to `dir/runs.csv`, writing the header on first use.
pub fn append_ledger(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(LEDGER_FILE);
    let fresh = fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(record)?;
    w.flush()?;
    Ok(path)
}

pub fn read_ledger(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}
