use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mitplan::cli::{diagnostic, run, threads_from_env, Cli, Outcome, RunConfig};

fn emit(outcome: Outcome) -> ExitCode {
    if let Some(report) = outcome.report {
        let mut stdout = std::io::stdout().lock();
        let _ = stdout.write_all(report.as_bytes());
        let _ = stdout.flush();
    }
    if let Some(d) = outcome.diagnostic {
        eprintln!("{d}");
    }
    ExitCode::from(outcome.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default();
            eprintln!("{}", diagnostic(1, "usage", first.trim_start_matches("error: ")));
            return ExitCode::from(1);
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => return emit(Outcome::from_error(&e)),
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => return emit(Outcome::from_error(&e)),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => return emit(Outcome::from_error(&mitplan::Error::InvalidParams {
            name: "threads",
            message: e.to_string(),
        })),
    };
    emit(pool.install(|| run(&config)))
}
