//! Plain CSV files: training metrics, Gram matrices and input vectors.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back parses to the identical `f64`.

use std::fmt::Write as _;
use std::path::Path;

use qklstm_core::{EpochMetrics, Matrix};

use crate::error::{CliError, Result};

pub const METRICS_HEADER: &str = "epoch,loss,accuracy";

pub fn format_metrics(history: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in history {
        let _ = writeln!(out, "{},{},{}", m.epoch, m.mean_loss, m.token_accuracy);
    }
    out
}

pub fn parse_metrics(text: &str, origin: &Path) -> Result<Vec<EpochMetrics>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => return Err(CliError::parse(origin, 1, format!("expected header {METRICS_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CliError::parse(origin, idx + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let bad = |what: &str| CliError::parse(origin, idx + 1, format!("invalid {what}"));
        out.push(EpochMetrics {
            epoch: fields[0].parse().map_err(|_| bad("epoch"))?,
            mean_loss: fields[1].parse().map_err(|_| bad("loss"))?,
            token_accuracy: fields[2].parse().map_err(|_| bad("accuracy"))?,
        });
    }
    Ok(out)
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Rows of comma-separated reals. Blank lines are skipped; every row must
/// have the same length as the first.
pub fn parse_vectors(text: &str, origin: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| CliError::parse(origin, idx + 1, format!("not a number: {e}")))?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(CliError::parse(origin, idx + 1, "non-finite value"));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::parse(
                    origin,
                    idx + 1,
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(origin, 0, "no vectors"));
    }
    Ok(rows)
}

/// Parses a CSV of reals into a matrix (the reverse of [`format_matrix`]).
pub fn parse_matrix(text: &str, origin: &Path) -> Result<Matrix> {
    let rows = parse_vectors(text, origin)?;
    let cols = rows[0].len();
    Ok(Matrix::from_vec(rows.len(), cols, rows.concat())?)
}
