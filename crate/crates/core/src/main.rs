use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qgan::cli;
use qgan::Error;

#[derive(Parser)]
#[command(name = "qgan", version, about = "Adversarial quantum circuit Born machine")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a circuit from a key=value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print measured bitstrings from a checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inpaint an image given as a row-major string over {0,1,.}.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        evidence: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// KL divergence and probability table of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// List every valid Bars-and-Stripes pattern of a grid.
    Patterns {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match args.command {
        Command::Train { config, out: dir } => cli::cmd_train(&config, &dir, &mut io::stderr()),
        Command::Sample { checkpoint, count, seed } => {
            cli::cmd_sample(&checkpoint, count, seed, &mut out)
        }
        Command::Infer {
            checkpoint,
            evidence,
            count,
            seed,
            max_steps,
        } => cli::cmd_infer(&checkpoint, &evidence, count, seed, max_steps, &mut out),
        Command::Eval { checkpoint } => cli::cmd_eval(&checkpoint, &mut out),
        Command::Patterns { rows, cols } => cli::cmd_patterns(rows, cols, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
