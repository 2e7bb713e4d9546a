use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use levelkit_cli::{execute, workers_from_env, write_atomic, Cli, CliError, EXIT_CONFIG};

fn run(cli: &Cli) -> Result<i32, CliError> {
    let outcome = match workers_from_env()? {
        Some(n) => levelkit::suite::with_workers(n, || execute(&cli.command)),
        None => execute(&cli.command),
    }?;
    match &cli.command.common().out {
        Some(path) => write_atomic(path, &outcome.body)?,
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(outcome.body.as_bytes());
            let _ = out.flush();
        }
    }
    let code = outcome.exit_code();
    if code != 0 {
        eprintln!("{}", outcome.failure_report(cli.command.name()));
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code = e.exit_code();
            if code == EXIT_CONFIG {
                eprintln!("error: {e}");
            } else {
                let doc = serde_json::json!({
                    "status": "assertion_failure",
                    "command": cli.command.name(),
                    "failures": [{ "check": "computation", "error": e.to_string() }],
                });
                eprintln!("{}", serde_json::to_string_pretty(&doc).expect("plain data"));
            }
            ExitCode::from(code as u8)
        }
    }
}
