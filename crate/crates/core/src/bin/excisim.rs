use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use excisim::runner::{run_path, RunOptions, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    FitSd,
    Compile,
    Enaqt,
    Pathways,
    Chain,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Subcommand::Simulate,
            Command::FitSd => Subcommand::FitSd,
            Command::Compile => Subcommand::Compile,
            Command::Enaqt => Subcommand::Enaqt,
            Command::Pathways => Subcommand::Pathways,
            Command::Chain => Subcommand::Chain,
        }
    }
}

/// Exciton energy-transfer simulator and circuit parameter compiler.
#[derive(Debug, Parser)]
#[command(name = "excisim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "EXCISIM_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        excisim::set_threads(n);
    }
    let opts = RunOptions { out: cli.out, seed: cli.seed };
    match run_path(cli.command.into(), &cli.config, &opts) {
        Ok(summary) => {
            for note in &summary.notes {
                eprintln!("{note}");
            }
            println!("wrote {} files to {}", summary.outputs.len(), summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
