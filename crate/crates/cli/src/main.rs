mod args;
mod commands;
mod error;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use cpcert_core::ToleranceConfig;
use serde_json::Value;

use crate::args::Cli;
use crate::error::{CliError, ErrorReport, EXIT_INVALID};

fn emit(value: &Value, cli: &Cli) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match &cli.global.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = ErrorReport {
                error: e.kind().to_string(),
                kind: "usage",
                exit_code: EXIT_INVALID,
            };
            eprint!("{}", e.render());
            println!(
                "{}",
                serde_json::to_string_pretty(&report).unwrap_or_default()
            );
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let tol = ToleranceConfig::default()
        .with_rank_tol(cli.global.tol_rank)
        .with_residual_tol(cli.global.tol_residual);
    let result = tol
        .validate()
        .map_err(|e| CliError::Core(e.into()))
        .and_then(|()| commands::run(&cli.command, &tol));
    let (value, code) = match result {
        Ok(outcome) => (outcome.report, outcome.exit_code),
        Err(e) => {
            let mut value = serde_json::to_value(ErrorReport::from(&e)).unwrap_or(Value::Null);
            if let (Value::Object(map), Ok(t)) = (&mut value, serde_json::to_value(tol)) {
                map.insert("tolerance".into(), t);
            }
            (value, e.exit_code())
        }
    };
    if let Err(e) = emit(&value, &cli) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_INVALID as u8);
    }
    ExitCode::from(code as u8)
}
