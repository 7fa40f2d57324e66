//! Per-run traces and their on-disk form.
//!
//! A trace CSV has the header `iter,dim,f,best` and one LF-terminated row
//! per objective evaluation, floats in shortest round-trip form. Everything
//! that is not reproducible bit for bit (wall-clock timings) goes to the
//! JSON metadata sidecar instead, so rerunning a configuration rewrites
//! identical CSV bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsebo::ExpansionHistory;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "iter,dim,f,best";

/// One objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based evaluation index.
    pub iter: usize,
    /// Subspace dimension the point was proposed in (`D` for random search).
    pub dim: usize,
    pub f: f64,
    pub best: f64,
    /// Milliseconds since the run started.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The run stopped early; the rows recorded up to that point are kept.
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    pub seed: u64,
    pub config_digest: String,
    pub rows: Vec<TraceRow>,
    pub expansions: ExpansionHistory,
    /// Evaluations spent per bandit arm, in arm order (empty otherwise).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arm_pulls: Vec<usize>,
    pub total_ms: f64,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn new(algorithm: impl Into<String>, seed: u64) -> Self {
        Self {
            algorithm: algorithm.into(),
            seed,
            config_digest: String::new(),
            rows: Vec::new(),
            expansions: ExpansionHistory::default(),
            arm_pulls: Vec::new(),
            total_ms: 0.0,
            status: RunStatus::Completed,
        }
    }

    /// Appends an evaluation, maintaining the running minimum.
    pub fn record(&mut self, dim: usize, f: f64, elapsed_ms: f64) {
        let best = self.rows.last().map_or(f, |r| r.best.min(f));
        self.rows.push(TraceRow {
            iter: self.rows.len() + 1,
            dim,
            f,
            best,
            elapsed_ms,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.rows.last().map(|r| r.best)
    }

    pub fn best_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.best).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f).collect()
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(out, "{},{},{:?},{:?}", r.iter, r.dim, r.f, r.best).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Sidecar with everything but the CSV rows' reproducible columns.
    pub fn write_meta(&self, path: &Path) -> Result<()> {
        let meta = MetaRef::new(self, self.rows.iter().map(|r| r.elapsed_ms).collect());
        let text = serde_json::to_string_pretty(&meta)
            .map_err(|e| Error::Data(format!("serializing run metadata: {e}")))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize)]
struct MetaRef<'a> {
    algorithm: &'a str,
    seed: u64,
    config_digest: &'a str,
    expansions: &'a ExpansionHistory,
    #[serde(skip_serializing_if = "<[usize]>::is_empty")]
    arm_pulls: &'a [usize],
    total_ms: f64,
    status: &'a RunStatus,
    elapsed_ms: Vec<f64>,
}

impl<'a> MetaRef<'a> {
    fn new(trace: &'a RunTrace, elapsed_ms: Vec<f64>) -> Self {
        Self {
            algorithm: &trace.algorithm,
            seed: trace.seed,
            config_digest: &trace.config_digest,
            expansions: &trace.expansions,
            arm_pulls: &trace.arm_pulls,
            total_ms: trace.total_ms,
            status: &trace.status,
            elapsed_ms,
        }
    }
}

/// Run metadata as read back from a sidecar file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub seed: u64,
    pub config_digest: String,
    pub expansions: ExpansionHistory,
    #[serde(default)]
    pub arm_pulls: Vec<usize>,
    pub total_ms: f64,
    pub status: RunStatus,
    pub elapsed_ms: Vec<f64>,
}

impl RunMeta {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: malformed run metadata: {e}", path.display())))
    }
}

/// A row of a trace CSV read back from disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub iter: usize,
    pub dim: usize,
    pub f: f64,
    pub best: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Data(format!(
                "trace header {other:?} does not match {CSV_HEADER:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Data(format!("malformed trace row {}: {line:?}", i + 2));
            let mut cols = line.split(',');
            let mut next = || cols.next().ok_or_else(bad);
            let iter = next()?.parse().map_err(|_| bad())?;
            let dim = next()?.parse().map_err(|_| bad())?;
            let f = next()?.parse().map_err(|_| bad())?;
            let best = next()?.parse().map_err(|_| bad())?;
            Ok(CsvRow { iter, dim, f, best })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}
