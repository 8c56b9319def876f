//! Dataset ingestion, normalization and seeded train/test splits.
//!
//! Files are delimiter-separated text with a header row. The schema names
//! the sequence column, the label column and any precomputed baseline score
//! columns, each with a declared scale (`unit` or `percent`). Scales are
//! never guessed from the data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{self, ValidatedSgRna};
use crate::seed::{self, Stream};
use crate::Matrix;

pub const SPACER_LEN: usize = 30;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("schema: column {0:?} not found in header")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("value {value} outside the {scale} range")]
    Range { value: f64, scale: Scale },
    #[error("split: {0}")]
    Split(String),
    #[error("{} invalid sequence row(s): {}", .0.len(), summarize(.0))]
    InvalidRows(Vec<RejectedRow>),
}

fn summarize(rows: &[RejectedRow]) -> String {
    rows.iter()
        .take(10)
        .map(|r| format!("row {} ({})", r.row, r.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Unit,
    Percent,
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scale::Unit => "unit [0, 1]",
            Scale::Percent => "percent [0, 100]",
        })
    }
}

/// Maps a raw score onto [0, 1].
pub fn normalize_score(raw: f64, scale: Scale) -> Result<f64, DataError> {
    let (hi, div) = match scale {
        Scale::Unit => (1.0, 1.0),
        Scale::Percent => (100.0, 100.0),
    };
    if !(0.0..=hi).contains(&raw) {
        return Err(DataError::Range { value: raw, scale });
    }
    Ok(raw / div)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineColumn {
    pub name: String,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub sequence_column: String,
    pub label_column: String,
    pub label_scale: Scale,
    #[serde(default)]
    pub baseline_columns: Vec<BaselineColumn>,
    #[serde(default, alias = "extended_spacer_column")]
    pub spacer_column: Option<String>,
}

impl DatasetSchema {
    pub fn new(sequence_column: &str, label_column: &str, label_scale: Scale) -> Self {
        Self {
            sequence_column: sequence_column.to_string(),
            label_column: label_column.to_string(),
            label_scale,
            baseline_columns: Vec::new(),
            spacer_column: None,
        }
    }

    pub fn with_baseline(mut self, name: &str, scale: Scale) -> Self {
        self.baseline_columns.push(BaselineColumn {
            name: name.to_string(),
            scale,
        });
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.sequence_column.is_empty() || self.label_column.is_empty() {
            return Err(DataError::Schema(
                "sequence_column and label_column must be nonempty".into(),
            ));
        }
        if self.sequence_column == self.label_column {
            return Err(DataError::Schema(
                "sequence_column and label_column must differ".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.baseline_columns {
            if !seen.insert(b.name.as_str()) {
                return Err(DataError::Schema(format!(
                    "baseline column {:?} listed twice",
                    b.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sequence: ValidatedSgRna,
    pub label: f64,
    pub baselines: BTreeMap<String, f64>,
    pub spacer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    pub schema: DatasetSchema,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sequences(&self) -> Vec<ValidatedSgRna> {
        self.records.iter().map(|r| r.sequence).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// One-hot feature matrix, `n x 92`.
    pub fn features(&self) -> Matrix {
        encoding::encode_all(&self.sequences())
    }

    /// Values of one baseline column, in record order.
    pub fn baseline(&self, name: &str) -> Option<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.baselines.get(name).copied())
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub delimiter: Option<u8>,
    /// Collect rows with invalid sequences instead of aborting.
    pub permissive: bool,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected: Vec<RejectedRow>,
}

/// Raw delimited table: header plus string cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize, DataError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub fn read_table_from(mut reader: impl Read, delimiter: Option<u8>) -> Result<Table, DataError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|source| DataError::Io {
            path: "<reader>".into(),
            source,
        })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    if text.trim().is_empty() {
        return Err(DataError::Dataset("file is empty".into()));
    }
    let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(text));
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { headers, rows })
}

pub fn read_table(path: &Path, delimiter: Option<u8>) -> Result<Table, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_table_from(file, delimiter)
}

pub fn load_dataset(
    path: &Path,
    schema: &DatasetSchema,
    opts: LoadOptions,
) -> Result<LoadReport, DataError> {
    let table = read_table(path, opts.delimiter)?;
    dataset_from_table(&table, path, schema, opts)
}

pub fn dataset_from_table(
    table: &Table,
    source: &Path,
    schema: &DatasetSchema,
    opts: LoadOptions,
) -> Result<LoadReport, DataError> {
    schema.validate()?;
    let seq_col = table.column(&schema.sequence_column)?;
    let label_col = table.column(&schema.label_column)?;
    let baseline_cols = schema
        .baseline_columns
        .iter()
        .map(|b| table.column(&b.name).map(|i| (i, b)))
        .collect::<Result<Vec<_>, _>>()?;
    let spacer_col = schema
        .spacer_column
        .as_deref()
        .map(|c| table.column(c))
        .transpose()?;

    let mut records = Vec::with_capacity(table.rows.len());
    let mut rejected = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let row_no = i + 1;
        let cell = |c: usize| row.get(c).map(String::as_str).unwrap_or("");
        let row_err = |message: String| DataError::Row {
            row: row_no,
            message,
        };

        let sequence = match encoding::validate(cell(seq_col)) {
            Ok(s) => s,
            Err(e) if opts.permissive => {
                rejected.push(RejectedRow {
                    row: row_no,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(row_err(format!("invalid sequence: {e}"))),
        };
        let label = parse_score(cell(label_col), schema.label_scale)
            .map_err(|m| row_err(format!("label column {:?}: {m}", schema.label_column)))?;
        let mut baselines = BTreeMap::new();
        for (c, b) in &baseline_cols {
            let v = parse_score(cell(*c), b.scale)
                .map_err(|m| row_err(format!("baseline column {:?}: {m}", b.name)))?;
            baselines.insert(b.name.clone(), v);
        }
        let spacer = match spacer_col {
            Some(c) => {
                let s = cell(c).to_ascii_uppercase();
                if s.len() != SPACER_LEN || !s.bytes().all(|b| b"ACGT".contains(&b)) {
                    return Err(row_err(format!(
                        "extended spacer {s:?} is not a {SPACER_LEN}-nt ACGT string"
                    )));
                }
                Some(s)
            }
            None => None,
        };
        records.push(Record {
            sequence,
            label,
            baselines,
            spacer,
        });
    }
    if records.is_empty() {
        return Err(DataError::Dataset(format!(
            "{} contains no usable data rows",
            source.display()
        )));
    }
    Ok(LoadReport {
        dataset: Dataset {
            records,
            provenance: Provenance {
                source: source.to_path_buf(),
                schema: schema.clone(),
            },
        },
        rejected,
    })
}

fn parse_score(text: &str, scale: Scale) -> Result<f64, String> {
    let raw: f64 = text
        .parse()
        .map_err(|_| format!("{text:?} is not a number"))?;
    if !raw.is_finite() {
        return Err(format!("{text:?} is not finite"));
    }
    normalize_score(raw, scale).map_err(|e| e.to_string())
}

/// Writes a dataset in unit scale; returns the schema that reloads it.
pub fn write_dataset(ds: &Dataset, mut out: impl Write) -> Result<DatasetSchema, DataError> {
    let src = &ds.provenance.schema;
    let mut schema = DatasetSchema::new(&src.sequence_column, &src.label_column, Scale::Unit);
    for b in &src.baseline_columns {
        schema = schema.with_baseline(&b.name, Scale::Unit);
    }
    schema.spacer_column = src.spacer_column.clone();

    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    let mut header = vec![schema.sequence_column.clone(), schema.label_column.clone()];
    header.extend(schema.baseline_columns.iter().map(|b| b.name.clone()));
    header.extend(schema.spacer_column.clone());
    w.write_record(&header)?;
    for r in &ds.records {
        let mut row = vec![r.sequence.to_string(), r.label.to_string()];
        for b in &schema.baseline_columns {
            row.push(r.baselines[&b.name].to_string());
        }
        if schema.spacer_column.is_some() {
            row.push(r.spacer.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| DataError::Io {
        path: "<writer>".into(),
        source: e.into_error(),
    })?;
    out.write_all(&bytes).map_err(|source| DataError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(schema)
}

/// Reads and validates a single sequence column (labels not required).
pub fn load_sequences(
    path: &Path,
    column: &str,
    delimiter: Option<u8>,
) -> Result<Vec<ValidatedSgRna>, DataError> {
    let table = read_table(path, delimiter)?;
    let c = table.column(column)?;
    let mut seqs = Vec::with_capacity(table.rows.len());
    let mut bad = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        match encoding::validate(row.get(c).map(String::as_str).unwrap_or("")) {
            Ok(s) => seqs.push(s),
            Err(e) => bad.push(RejectedRow {
                row: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    if !bad.is_empty() {
        return Err(DataError::InvalidRows(bad));
    }
    if seqs.is_empty() {
        return Err(DataError::Dataset(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    Ok(seqs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub repeats: usize,
    pub master_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            repeats: 100,
            master_seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn train_size(&self, n: usize) -> usize {
        // tolerate representation error such as 0.7 * 10 = 7.000000000000001
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }

    pub fn validate_for(&self, n: usize) -> Result<(), DataError> {
        if n < 2 {
            return Err(DataError::Dataset(format!(
                "cannot split {n} record(s); need at least 2"
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(DataError::Split(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.repeats == 0 {
            return Err(DataError::Split("repeats must be at least 1".into()));
        }
        let t = self.train_size(n);
        if t < 1 || t >= n {
            return Err(DataError::Split(format!(
                "train_fraction {} leaves an empty side for n = {n}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    pub fn repeat_seed(&self, repeat_index: usize) -> u64 {
        seed::derive(self.master_seed, Stream::SplitRepeat, repeat_index as u64)
    }
}

/// Row indices `(train, test)`, each in ascending order.
pub fn split_indices(
    n: usize,
    plan: &SplitPlan,
    repeat_index: usize,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    plan.validate_for(n)?;
    if repeat_index >= plan.repeats {
        return Err(DataError::Split(format!(
            "repeat index {repeat_index} out of range for {} repeats",
            plan.repeats
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(plan.repeat_seed(repeat_index)));
    let t = plan.train_size(n);
    let mut train = perm[..t].to_vec();
    let mut test = perm[t..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    ds: &Dataset,
    plan: &SplitPlan,
    repeat_index: usize,
) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(ds.len(), plan, repeat_index)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}
