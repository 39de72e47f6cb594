//! CSV emission. Headers are always written; floats use the shortest
//! representation that parses back to the same value.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{RoundRecord, RunTrace};
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 9] = [
    "round",
    "cumulative_cost",
    "depth_selected",
    "fidelity",
    "feedbacks_received",
    "best_value",
    "simple_regret",
    "tree_height",
    "node_count",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "algorithm",
    "benchmark",
    "delay",
    "seeds",
    "max_final_value",
    "median_final_value",
    "std_final_value",
    "median_tree_height",
    "median_node_count",
];

pub const CURVE_HEADER: [&str; 4] = ["checkpoint", "median_regret", "min_regret", "max_regret"];

/// One trace CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    pub cumulative_cost: f64,
    pub depth_selected: u32,
    pub fidelity: f64,
    pub feedbacks_received: usize,
    pub best_value: Option<f64>,
    pub simple_regret: f64,
    pub tree_height: u32,
    pub node_count: usize,
}

impl From<&RoundRecord> for TraceRow {
    fn from(r: &RoundRecord) -> Self {
        Self {
            round: r.round,
            cumulative_cost: r.cumulative_cost,
            depth_selected: r.depth(),
            fidelity: r.fidelity,
            feedbacks_received: r.feedbacks_received,
            best_value: r.best_value,
            simple_regret: r.simple_regret,
            tree_height: r.tree_height,
            node_count: r.node_count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub benchmark: String,
    pub delay: String,
    pub seeds: usize,
    pub max_final_value: f64,
    pub median_final_value: f64,
    /// Population standard deviation.
    pub std_final_value: f64,
    pub median_tree_height: f64,
    pub median_node_count: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub checkpoint: f64,
    pub median_regret: f64,
    pub min_regret: f64,
    pub max_regret: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    let mut file = w.into_inner().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    file.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

pub fn emit_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    write_rows(path, &TRACE_HEADER, trace.records.iter().map(TraceRow::from))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    read_rows(path)
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_rows(path, &SUMMARY_HEADER, rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

pub fn emit_curve_csv(curve: &[CurvePoint], path: &Path) -> Result<()> {
    write_rows(path, &CURVE_HEADER, curve)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    read_rows(path)
}
