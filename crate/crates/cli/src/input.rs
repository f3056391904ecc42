//! CSV ingestion.

use std::collections::HashSet;
use std::path::Path;

use robreg::Dataset;

use crate::error::{CliError, CliResult};

/// A dataset read from CSV, with the count of rows that could not be used.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub data: Dataset,
    pub dropped_rows: usize,
    pub warnings: Vec<String>,
}

/// Reads `outcome` and `covariates` from a comma-separated file with a header
/// row. Rows with a missing or non-numeric value in any selected column are
/// dropped with a warning. An intercept column is prepended.
pub fn load_csv(path: &Path, outcome: &str, covariates: &[String]) -> CliResult<Loaded> {
    if covariates.iter().any(|c| c == outcome) {
        return Err(CliError::Config(format!(
            "outcome column {outcome} is also listed as a covariate"
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = covariates.iter().find(|c| !seen.insert(c.as_str())) {
        return Err(CliError::Config(format!("covariate {dup} listed twice")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(CliError::Config(format!(
            "duplicated header {dup:?} in {}",
            path.display()
        )));
    }
    let position = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown column {name:?}; available: {}",
                headers.join(", ")
            ))
        })
    };
    let y_col = position(outcome)?;
    let x_cols = covariates
        .iter()
        .map(|c| position(c))
        .collect::<CliResult<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); x_cols.len()];
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let parse = |col: usize| -> Option<f64> {
            record
                .get(col)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let values: Option<Vec<f64>> = std::iter::once(y_col)
            .chain(x_cols.iter().copied())
            .map(parse)
            .collect();
        match values {
            Some(v) => {
                y.push(v[0]);
                for (j, col) in xs.iter_mut().enumerate() {
                    col.push(v[j + 1]);
                }
            }
            None => dropped += 1,
        }
    }
    if y.is_empty() {
        return Err(CliError::Data(format!(
            "{} has no usable rows",
            path.display()
        )));
    }
    let mut warnings = Vec::new();
    if dropped > 0 {
        warnings.push(format!(
            "dropped {dropped} row{} with missing or non-numeric values",
            if dropped == 1 { "" } else { "s" }
        ));
    }
    let named: Vec<(&str, &[f64])> = covariates
        .iter()
        .map(String::as_str)
        .zip(xs.iter().map(Vec::as_slice))
        .collect();
    let data = Dataset::with_intercept(&named, &y)?;
    Ok(Loaded {
        data,
        dropped_rows: dropped,
        warnings,
    })
}
