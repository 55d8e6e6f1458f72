use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rdlab_core::experiments::{self, OutputFormat, RunOutput};
use rdlab_core::Error;

#[derive(Parser)]
#[command(name = "rdlab", version, about = "Run numerical experiments on the competitive absorption system")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,

    /// Override the seed from the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base point of a config
    Run { config: PathBuf },
    /// Run every point of the config's [sweep] grid
    Sweep { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(path: &Path, seed: Option<u64>) -> Result<experiments::ExperimentSpec, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut spec = experiments::parse_config(&text)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn exit_code(outputs: &[RunOutput]) -> ExitCode {
    if outputs.iter().any(|o| o.numerical_failure) {
        ExitCode::from(2)
    } else if outputs.iter().any(|o| o.record.error.is_some()) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, is_sweep) = match &cli.command {
        Command::Run { config } => (config, false),
        Command::Sweep { config } => (config, true),
    };
    let spec = match load(path, cli.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("rdlab: {e}");
            return ExitCode::from(1);
        }
    };
    let outputs = if is_sweep {
        experiments::sweep(&spec)
    } else {
        vec![experiments::run_experiment(&spec)]
    };
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    if let Err(e) = experiments::write_outputs(&outputs, &cli.out, format) {
        eprintln!("rdlab: cannot write outputs: {e}");
        return ExitCode::from(1);
    }
    for o in &outputs {
        let r = &o.record;
        match &r.error {
            None => println!("{}: ok ({:.2}s)", r.run_id, r.wall_time_s),
            Some(e) => eprintln!("{}: failed: {e}", r.run_id),
        }
    }
    exit_code(&outputs)
}
