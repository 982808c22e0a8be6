//! Run-log and threshold-summary persistence.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One line of the JSON-lines run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(rename = "split-file")]
    pub split_file: String,
    #[serde(rename = "W")]
    pub width: usize,
    #[serde(rename = "L")]
    pub coupling_length: usize,
    #[serde(rename = "ebn0Db")]
    pub ebn0_db: f64,
    pub converged: bool,
    #[serde(rename = "N_it")]
    pub iterations: usize,
}

/// One row of the threshold summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub split_file: String,
    pub width: usize,
    pub coupling_length: usize,
    pub start_db: f64,
    pub threshold_db: f64,
    pub max_iter: usize,
    pub samples: usize,
    pub seed: u64,
}

fn to_io(e: impl std::fmt::Display) -> crate::Error {
    crate::Error::Io(e.to_string())
}

/// Appends records to a JSON-lines log.
pub fn append_run_log(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for r in records {
        let line = serde_json::to_string(r).map_err(to_io)?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Reads every record of a JSON-lines log.
pub fn read_run_log(path: &Path) -> Result<Vec<RunRecord>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| crate::Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes threshold rows as CSV with a header.
pub fn write_thresholds(path: &Path, rows: &[ThresholdRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    for r in rows {
        w.serialize(r).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}
