//! File formats: JSON plan and experiment-config documents, the
//! `cell,count` CSV for observed data, and CSV emission for profiles and
//! experiment summaries.

use crate::dpd::IntervalCounts;
use crate::error::{Error, Result};
use crate::influence::InfluenceProfile;
use crate::model::StressPlan;
use crate::sim::{ExperimentConfig, MseSummary, RateSummary};
use std::fs;
use std::path::Path;

/// Read a stress plan from a JSON document with arrays `stress_levels`,
/// `change_times` and `inspection_times`. Invariants are enforced on
/// deserialization.
pub fn read_plan(path: &Path) -> Result<StressPlan> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Read observed counts from a `cell,count` CSV. Cells must run
/// contiguously from 1 and counts must be nonnegative integers.
pub fn read_counts(path: &Path) -> Result<IntervalCounts> {
    let text = fs::read_to_string(path)?;
    parse_counts(&text, &path.display().to_string())
}

pub fn parse_counts(text: &str, path: &str) -> Result<IntervalCounts> {
    let mut rows: Vec<(usize, u64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            if line != "cell,count" {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: 1,
                    message: format!("expected header 'cell,count', got '{line}'"),
                });
            }
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_string(),
            line: lineno + 1,
            message,
        };
        let (cell_s, count_s) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected two comma-separated fields".into()))?;
        let cell: usize = cell_s
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("invalid cell index '{cell_s}'")))?;
        let count: u64 = count_s.trim().parse().map_err(|_| {
            parse_err(format!(
                "invalid count '{count_s}': must be a nonnegative integer"
            ))
        })?;
        rows.push((cell, count));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 1,
            message: "no data rows".into(),
        });
    }
    rows.sort_by_key(|&(cell, _)| cell);
    let mut counts = Vec::with_capacity(rows.len());
    for (expected, &(cell, count)) in rows.iter().enumerate() {
        let expected = expected + 1;
        if cell < expected {
            return Err(Error::InvalidInput(format!("duplicate cell {cell}")));
        }
        if cell > expected {
            return Err(Error::InvalidInput(format!("gap in cells: cell {expected} missing")));
        }
        counts.push(count);
    }
    IntervalCounts::new(counts)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn probabilities_csv(probs: &[f64]) -> String {
    let mut out = String::from("cell,probability\n");
    for (j, p) in probs.iter().enumerate() {
        out.push_str(&format!("{},{:.17e}\n", j + 1, p));
    }
    out
}

pub fn influence_csv(profile: &InfluenceProfile) -> String {
    let mut out = String::from("cell,if_theta0,if_theta1,norm\n");
    for row in &profile.rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            row.cell, row.value[0], row.value[1], row.norm
        ));
    }
    out
}

pub fn mse_summary_csv(summary: &MseSummary) -> String {
    let mut out = String::from("beta,N,metric,value,failures\n");
    for row in &summary.rows {
        for (metric, value) in [
            ("mse", row.mse),
            ("mse_theta0", row.mse_theta0),
            ("mse_theta1", row.mse_theta1),
        ] {
            out.push_str(&format!(
                "{},{},{metric},{:.17e},{}\n",
                row.beta, row.n, value, row.failures
            ));
        }
    }
    out
}

pub fn rate_summary_csv(summary: &RateSummary) -> String {
    let mut out = String::from("beta,N,metric,value,failures\n");
    for row in &summary.rows {
        out.push_str(&format!(
            "{},{},rejection_rate,{:.17e},{}\n",
            row.beta, row.n, row.rejection_rate, row.failures
        ));
    }
    out
}
