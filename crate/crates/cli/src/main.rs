mod args;
mod commands;
mod error;
mod output;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{merge, Cli, Command};
use error::{CliError, Result};

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let file: Option<Value> = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let file = file.as_ref();
    match cli.command {
        Command::Profile(a) => commands::profile(merge(a, file)?, started),
        Command::ValidateInit(a) => commands::validate_init(merge(a, file)?, started),
        Command::Datum(a) => commands::datum(merge(a, file)?, started),
        Command::Solve(a) => commands::solve(merge(a, file)?, started),
        Command::Chars(a) => commands::chars(merge(a, file)?, started),
        Command::Longtime(a) => commands::longtime(merge(a, file)?, started),
        Command::Noncvg(a) => commands::noncvg(merge(a, file)?, started),
        Command::Selftest(a) => commands::selftest(merge(a, file)?),
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let record = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{}", e.render());
            let message = e.kind().to_string();
            return report("usage", &message, 1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string(), e.exit_code()),
    }
}
