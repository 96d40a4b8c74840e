mod apps;
mod args;
mod error;
mod fit;
mod io;
mod manifest;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SPLCM_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::usage(format!("SPLCM_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(CliError::usage("SPLCM_THREADS must be positive"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match &cli.command {
        Command::Estimate(a) => fit::estimate(a),
        Command::Tune(a) => fit::tune(a),
        Command::Simulate(a) => simulate::simulate(a),
        Command::Qda(a) => apps::qda(a),
        Command::Cluster(a) => apps::cluster(a),
        Command::BootstrapV(a) => apps::bootstrap(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splcm: {e}");
            e.exit_code()
        }
    }
}
