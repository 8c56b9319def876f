//! Subcommand drivers shared by the binary and the integration tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::archive::{ModelArchive, FORMAT_VERSION};
use super::benchmark::{run_benchmark, BenchmarkReport};
use super::compare::{compare_studies, ConcordanceReport};
use super::config::{load_experiment, Experiment};
use super::pipeline::{train_pipeline, tune_lanes, tuning_table};
use super::{clip_score, HarnessError};
use crate::dataio::{load_dataset, load_sequences, LoadOptions, LoadReport, Scale};
use crate::encoding;
use crate::learners::Predictor;

#[derive(Debug, Clone, Default)]
pub struct CommonArgs {
    pub config: Option<PathBuf>,
    pub data: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub permissive: bool,
}

fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn out_dir(args: &CommonArgs, exp: Option<&Experiment>) -> Result<PathBuf, HarnessError> {
    let dir = args
        .out
        .clone()
        .or_else(|| exp.and_then(|e| e.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

fn experiment(args: &CommonArgs) -> Result<Experiment, HarnessError> {
    let path = args.config.as_ref().ok_or_else(|| HarnessError::Config {
        path: None,
        message: "--config is required".into(),
    })?;
    let mut exp = load_experiment(path)?;
    if let Some(s) = args.seed {
        exp.split.master_seed = s;
    }
    Ok(exp)
}

fn load(exp: &Experiment, args: &CommonArgs) -> Result<LoadReport, HarnessError> {
    Ok(load_dataset(
        &args.data,
        &exp.schema,
        LoadOptions {
            delimiter: None,
            permissive: args.permissive,
        },
    )?)
}

fn manifest(
    command: &str,
    exp: &Experiment,
    args: &CommonArgs,
    report: &LoadReport,
) -> Result<String, HarnessError> {
    let mut m = String::new();
    let _ = writeln!(m, "command: {command}");
    let _ = writeln!(m, "format_version: {FORMAT_VERSION}");
    let _ = writeln!(m, "config_digest: {}", exp.digest());
    let _ = writeln!(m, "seed: {}", exp.split.master_seed);
    let _ = writeln!(m, "dataset: {}", args.data.display());
    let _ = writeln!(m, "dataset_sha256: {}", sha256_file(&args.data)?);
    let _ = writeln!(m, "rows_loaded: {}", report.dataset.len());
    let _ = writeln!(m, "rows_rejected: {}", report.rejected.len());
    for r in &report.rejected {
        let _ = writeln!(m, "  rejected row {}: {}", r.row, r.reason);
    }
    let _ = writeln!(m, "sequence_column: {}", exp.schema.sequence_column);
    let _ = writeln!(m, "label_column: {} ({})", exp.schema.label_column, exp.schema.label_scale);
    let roster: Vec<String> = exp.pipeline.roster.iter().map(|e| e.key()).collect();
    let _ = writeln!(m, "roster: {}", roster.join(","));
    let losses: Vec<String> = exp.pipeline.loss_set.iter().map(|l| l.to_string()).collect();
    let _ = writeln!(m, "losses: {}", losses.join(","));
    Ok(m)
}

/// Trains on the whole file; writes `model.json`, `manifest.txt` and
/// `tuning_scores.tsv`. Returns the archive path.
pub fn train(args: &CommonArgs) -> Result<PathBuf, HarnessError> {
    let exp = experiment(args)?;
    let report = load(&exp, args)?;
    let ds = &report.dataset;
    let trained = train_pipeline(&exp.pipeline, &ds.features(), &ds.labels(), exp.split.master_seed)?;
    let dir = out_dir(args, Some(&exp))?;
    let archive = ModelArchive::new(
        exp.digest(),
        exp.split.master_seed,
        exp.schema.clone(),
        exp.pipeline.clone(),
        trained.ensemble,
    );
    let path = dir.join("model.json");
    archive.save(&path)?;
    write(&dir.join("tuning_scores.tsv"), &tuning_table(&trained.tuning))?;
    write(&dir.join("manifest.txt"), &manifest("train", &exp, args, &report)?)?;
    Ok(path)
}

/// Scores every sequence in `args.data`; writes `scores.tsv`
/// (`sequence`, `score`), clipped to `[0, 1]`.
pub fn predict(model: &Path, args: &CommonArgs) -> Result<PathBuf, HarnessError> {
    let archive = ModelArchive::load(model)?;
    let seqs = load_sequences(&args.data, &archive.schema.sequence_column, None)?;
    let x = encoding::encode_all(&seqs);
    let raw = archive.model.predict(&x)?;
    let mut s = String::from("sequence\tscore\n");
    for (seq, v) in seqs.iter().zip(raw) {
        let _ = writeln!(s, "{seq}\t{}", clip_score(v));
    }
    let dir = out_dir(args, None)?;
    let path = dir.join("scores.tsv");
    write(&path, &s)?;
    Ok(path)
}

/// Writes `per_repeat.tsv`, `mean_report.tsv` and `manifest.txt`.
pub fn benchmark(args: &CommonArgs) -> Result<BenchmarkReport, HarnessError> {
    let exp = experiment(args)?;
    let report = load(&exp, args)?;
    let bench = run_benchmark(&exp, &report.dataset)?;
    let dir = out_dir(args, Some(&exp))?;
    write(&dir.join("per_repeat.tsv"), &bench.per_repeat_tsv())?;
    write(&dir.join("mean_report.tsv"), &bench.mean_tsv())?;
    let mut m = manifest("benchmark", &exp, args, &report)?;
    let _ = writeln!(m, "repeats: {}", exp.split.repeats);
    let _ = writeln!(m, "train_fraction: {}", exp.split.train_fraction);
    write(&dir.join("manifest.txt"), &m)?;
    Ok(bench)
}

/// Runs only the grid searches; writes `tuning_scores.tsv`.
pub fn tune(args: &CommonArgs) -> Result<PathBuf, HarnessError> {
    let exp = experiment(args)?;
    let report = load(&exp, args)?;
    let ds = &report.dataset;
    let results = tune_lanes(&exp.pipeline, &ds.features(), &ds.labels(), exp.split.master_seed)?;
    let dir = out_dir(args, Some(&exp))?;
    let path = dir.join("tuning_scores.tsv");
    write(&path, &tuning_table(&results))?;
    write(&dir.join("manifest.txt"), &manifest("tune", &exp, args, &report)?)?;
    Ok(path)
}

pub struct CompareArgs {
    pub data: PathBuf,
    pub sequence_column: String,
    pub column_a: String,
    pub column_b: String,
    pub scale_a: Scale,
    pub scale_b: Scale,
    pub out: Option<PathBuf>,
}

pub fn compare(args: &CompareArgs) -> Result<ConcordanceReport, HarnessError> {
    let r = compare_studies(
        &args.data,
        &args.sequence_column,
        (&args.column_a, args.scale_a),
        (&args.column_b, args.scale_b),
    )?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write(&dir.join("concordance.tsv"), &r.to_tsv())?;
    }
    Ok(r)
}

/// Loads the dataset under the config's schema and summarizes it.
pub fn validate_data(args: &CommonArgs) -> Result<String, HarnessError> {
    let exp = experiment(args)?;
    let report = load(&exp, args)?;
    let labels = report.dataset.labels();
    let mut s = String::new();
    let _ = writeln!(s, "rows_valid: {}", report.dataset.len());
    let _ = writeln!(s, "rows_rejected: {}", report.rejected.len());
    for r in &report.rejected {
        let _ = writeln!(s, "  row {}: {}", r.row, r.reason);
    }
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    let lo = labels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(s, "label_mean: {mean}");
    let _ = writeln!(s, "label_range: [{lo}, {hi}]");
    for b in &exp.schema.baseline_columns {
        let _ = writeln!(s, "baseline: {} ({})", b.name, b.scale);
    }
    Ok(s)
}
