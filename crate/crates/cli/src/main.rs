use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use udmetric_cli::{parse_value, run, CliError, ExperimentKind, Overrides, RunOptions, DEFAULT_OUT, OUT_ENV};

#[derive(Parser)]
#[command(
    name = "udmetric",
    version,
    about = "Discrepancy, ubiquity and limsup-set experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a sequence prefix as text.
    Gen(Common),
    /// Exact star and extreme discrepancy at checkpoints.
    Disc(Common),
    /// Check a sequence against a rate along a schedule.
    DssCheck(Common),
    /// Block-coverage fractions of balls.
    Ubiquity(Common),
    /// Monte Carlo measure of a limsup set on a window.
    Measure(Common),
    /// Partial sums of a divergence series.
    Series(Common),
    /// Closed-form Hausdorff dimension and its bounds.
    Dimension(Common),
    /// Box-counting estimate of a limsup set's dimension.
    BoxDim(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $UDMETRIC_OUT, else ./udmetric-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Replace every `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace every `samples` in the config.
    #[arg(long)]
    samples: Option<u64>,
    /// Generator prefix length.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated weight vector, e.g. `2,1.5`.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Gen(a) => (ExperimentKind::Gen, a),
        Command::Disc(a) => (ExperimentKind::Disc, a),
        Command::DssCheck(a) => (ExperimentKind::DssCheck, a),
        Command::Ubiquity(a) => (ExperimentKind::Ubiquity, a),
        Command::Measure(a) => (ExperimentKind::Measure, a),
        Command::Series(a) => (ExperimentKind::Series, a),
        Command::Dimension(a) => (ExperimentKind::Dimension, a),
        Command::BoxDim(a) => (ExperimentKind::BoxDim, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> Result<(), CliError> {
    let value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?
        }
        None => Value::Object(Default::default()),
    };
    let overrides = Overrides {
        seed: args.seed,
        samples: args.samples,
        count: args.count,
        horizon: args.horizon,
        tau: args.tau,
    };
    let config = parse_value(value, Some(kind), &overrides)?;
    let out = args
        .out
        .or_else(|| config.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let manifest = run(
        &config,
        &RunOptions {
            out: out.clone(),
            threads: args.threads,
        },
    )?;
    for f in &manifest.outputs {
        println!("{}", out.join(&f.file).display());
    }
    Ok(())
}
