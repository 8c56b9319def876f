use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sgrna_ensemble::dataio::Scale;
use sgrna_ensemble::harness::commands::{self, CommonArgs, CompareArgs};
use sgrna_ensemble::harness::HarnessError;

#[derive(Parser)]
#[command(name = "sgrna-ensemble", version, about = "Multi-loss stacked ensembles for sgRNA efficacy")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides [split] master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip rows with invalid sequences instead of failing.
    #[arg(long)]
    permissive: bool,
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        CommonArgs {
            config: Some(c.config),
            data: c.data,
            out: c.out,
            seed: c.seed,
            permissive: c.permissive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Unit,
    Percent,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Unit => Scale::Unit,
            ScaleArg::Percent => Scale::Percent,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tune, refine and stack on the whole data file; write a model archive.
    Train(Common),
    /// Score sequences with a trained archive.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated train/test splits; per-repeat and mean report tables.
    Benchmark(Common),
    /// Grid searches only; write the score table.
    Tune(Common),
    /// Spearman and MSE between two score columns keyed by sequence.
    CompareStudies {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "sequence")]
        sequence_column: String,
        #[arg(long)]
        column_a: String,
        #[arg(long)]
        column_b: String,
        #[arg(long, value_enum, default_value = "percent")]
        scale_a: ScaleArg,
        #[arg(long, value_enum, default_value = "percent")]
        scale_b: ScaleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a data file under the config schema and report what was accepted.
    ValidateData(Common),
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Train(c) => {
            let path = commands::train(&c.into())?;
            println!("wrote {}", path.display());
        }
        Command::Predict { model, data, out } => {
            let args = CommonArgs {
                data,
                out,
                ..Default::default()
            };
            let path = commands::predict(&model, &args)?;
            println!("wrote {}", path.display());
        }
        Command::Benchmark(c) => {
            let report = commands::benchmark(&c.into())?;
            print!("{}", report.mean_tsv());
        }
        Command::Tune(c) => {
            let path = commands::tune(&c.into())?;
            println!("wrote {}", path.display());
        }
        Command::CompareStudies {
            data,
            sequence_column,
            column_a,
            column_b,
            scale_a,
            scale_b,
            out,
        } => {
            let r = commands::compare(&CompareArgs {
                data,
                sequence_column,
                column_a,
                column_b,
                scale_a: scale_a.into(),
                scale_b: scale_b.into(),
                out,
            })?;
            print!("{}", r.to_tsv());
        }
        Command::ValidateData(c) => print!("{}", commands::validate_data(&c.into())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
