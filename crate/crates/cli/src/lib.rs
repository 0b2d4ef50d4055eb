//! Command-line workflows around the `qbvine` estimator: fitting, scoring,
//! sampling, conditional prediction and the synthetic mixture benchmark.
//!
//! Every command writes its outputs and a `manifest.json` into `--out`.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod manifest;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, CliResult, ErrorKind};

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return report(&CliError::usage("--threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return report(&CliError::usage(format!("thread pool: {e}")));
        }
    }
    match commands::run(&cli.command, &cli.global) {
        Ok(_) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("{}", e.record());
    e.exit_code()
}
