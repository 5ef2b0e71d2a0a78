use std::path::PathBuf;
use std::process::ExitCode;

use aggmin::runner::{run, Command, RunOptions};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Energy,
    Classify,
    Probe,
    Minimize,
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Energy => Command::Energy,
            Cmd::Classify => Command::Classify,
            Cmd::Probe => Command::Probe,
            Cmd::Minimize => Command::Minimize,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

/// Free-energy experiments on radial profiles.
#[derive(Debug, Parser)]
#[command(name = "aggmin", version)]
struct Cli {
    command: Cmd,
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are config errors; --help and --version succeed
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let opts = RunOptions {
        out: cli.out,
        jobs: cli.jobs,
        seed: cli.seed,
    };
    match run(cli.command.into(), &cli.config, &opts) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("aggmin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
