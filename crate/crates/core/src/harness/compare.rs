//! Concordance between two score columns measured on the same guides.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::dataio::{normalize_score, read_table, Scale};
use crate::encoding;
use crate::metrics::{mse, spearman};

pub const MIN_SHARED_ROWS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceReport {
    pub column_a: String,
    pub column_b: String,
    pub n: usize,
    pub spearman: f64,
    pub mse: f64,
}

impl ConcordanceReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "column_a\tcolumn_b\tn\tspearman\tmse\n{}\t{}\t{}\t{}\t{}\n",
            self.column_a, self.column_b, self.n, self.spearman, self.mse
        )
    }
}

/// Pairs the two columns by sequence (first occurrence wins; rows with an
/// empty cell in either column are skipped), normalizes each by its scale
/// and reports Spearman and MSE over the shared rows.
pub fn compare_studies(
    path: &Path,
    sequence_column: &str,
    column_a: (&str, Scale),
    column_b: (&str, Scale),
) -> Result<ConcordanceReport, HarnessError> {
    let table = read_table(path, None)?;
    let s = table.column(sequence_column)?;
    let a = table.column(column_a.0)?;
    let b = table.column(column_b.0)?;
    let mut pairs: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let cell = |c: usize| row.get(c).map(|v| v.trim()).unwrap_or("");
        let (ra, rb) = (cell(a), cell(b));
        if ra.is_empty() || rb.is_empty() {
            continue;
        }
        let seq = encoding::validate(cell(s))
            .map_err(|e| HarnessError::Compare(format!("row {}: {e}", i + 1)))?;
        let parse = |text: &str, scale: Scale| -> Result<f64, HarnessError> {
            let v: f64 = text
                .parse()
                .map_err(|_| HarnessError::Compare(format!("row {}: {text:?} is not a number", i + 1)))?;
            normalize_score(v, scale).map_err(|e| HarnessError::Compare(format!("row {}: {e}", i + 1)))
        };
        let va = parse(ra, column_a.1)?;
        let vb = parse(rb, column_b.1)?;
        pairs.entry(seq.to_string()).or_insert((i, va, vb));
    }
    if pairs.len() < MIN_SHARED_ROWS {
        return Err(HarnessError::Compare(format!(
            "{} shared rows; need at least {MIN_SHARED_ROWS}",
            pairs.len()
        )));
    }
    let mut rows: Vec<(usize, f64, f64)> = pairs.into_values().collect();
    rows.sort_by_key(|r| r.0);
    let va: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let vb: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(ConcordanceReport {
        column_a: column_a.0.to_string(),
        column_b: column_b.0.to_string(),
        n: rows.len(),
        spearman: spearman(&va, &vb)?,
        mse: mse(&va, &vb)?,
    })
}
