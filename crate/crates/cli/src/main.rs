//! `immse-lab` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failures present, 2 usage error,
//! 3 numeric-domain error.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use error::CliError;

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("immse-lab: {e}");
            e.exit_code()
        }
    }
}

fn real_main() -> Result<ExitCode, CliError> {
    let merged = args::merge_config(std::env::args_os().collect())?;
    let cli = match args::parse_from(merged) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    }

    let outcome = commands::run(&cli.command)?;
    let text = outcome.table.render(outcome.output.format);
    output::emit(&text, outcome.output.out.as_deref())?;
    if outcome.failures > 0 {
        eprintln!("immse-lab: {} check(s) failed", outcome.failures);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
