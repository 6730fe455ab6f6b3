use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pea_core::harness::{run_to_dir, ExperimentConfig, ExperimentKind};
use pea_core::PeaError;

#[derive(Parser)]
#[command(name = "pea", version, about = "Partial probabilistic error amplification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error versus shot budget for the Clifford ZZ chain.
    Scaling(RunArgs),
    /// Extrapolated transverse-field Ising dynamics against the exact reference.
    Tfim(RunArgs),
    /// Closed-form noisy expectations, fidelity products and channel cases.
    Predict(RunArgs),
    /// Optimal gains, shot split and error bounds per budget.
    Design(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `output_dir` from the config, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Override any config key, e.g. `--set circuit.steps=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<String, PeaError> {
    let mut overrides = vec![format!("experiment = \"{}\"", kind.name())];
    if let Some(seed) = args.seed {
        overrides.push(format!("seed = {seed}"));
    }
    if let Some(t) = args.threads {
        overrides.push(format!("threads = {t}"));
    }
    overrides.extend(args.overrides);
    let cfg = ExperimentConfig::load(&args.config, &overrides)?;
    let out = args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    run_to_dir(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Scaling(a) => (ExperimentKind::Scaling, a),
        Command::Tfim(a) => (ExperimentKind::Tfim, a),
        Command::Predict(a) => (ExperimentKind::Predict, a),
        Command::Design(a) => (ExperimentKind::Design, a),
    };
    match run(kind, args) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
