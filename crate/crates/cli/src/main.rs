use clap::Parser;
use cornergrowth_cli::args::Cli;
use cornergrowth_cli::{run, CliError};
use std::process::ExitCode;

const THREADS_VAR: &str = "CORNERGROWTH_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| cli.resolve()).and_then(|cfg| run(&cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cornergrowth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
