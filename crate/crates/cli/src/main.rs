//! `qshadow theory|simulate|classical|sweep --config <file> --out <dir>`
//!
//! Exit status: 0 on success, 2 for configuration errors (including values
//! that parse but describe an impossible experiment), 3 for I/O errors, 1 for
//! anything else. `QSHADOW_LOG` sets the log filter (default `info`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qshadow::config::ExperimentConfig;
use qshadow::runner::{apply_overrides, run, Command};
use qshadow::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Theory,
    Simulate,
    Classical,
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Theory => Command::Theory,
            Cmd::Simulate => Command::Simulate,
            Cmd::Classical => Command::Classical,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qshadow", version, about = "Quantum-noise shadow imaging simulator")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Experiment configuration (flat JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for cluster synthesis.
    #[arg(long)]
    workers: Option<usize>,
    /// Merge partial results in a fixed order for byte-identical output.
    #[arg(long)]
    bit_exact: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parameter { .. } | Error::Physicality(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QSHADOW_LOG", "info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_CONFIG } else { 0 });
        }
    };
    let result = ExperimentConfig::load(&args.config)
        .and_then(|cfg| apply_overrides(cfg, args.seed, args.workers, args.bit_exact))
        .and_then(|cfg| run(args.command.into(), &cfg, &args.out));
    match result {
        Ok(m) => {
            log::info!(
                "{} finished in {:.2} s: {} files in {}",
                m.command,
                m.wall_clock_s,
                m.files.len() + 1,
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
