use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bosonic_bench::cli::Cli::parse();
    match bosonic_bench::cli::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(bosonic_bench::cli::exit_code(&e))
        }
    }
}
