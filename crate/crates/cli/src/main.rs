//! `citetrend` binary: citation-trend pipeline over arXiv metadata.

mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use citetrend_core::error::{Error, ErrorKind};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = cli::Cli::parse();
    match commands::run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_report(&err));
            ExitCode::from(exit_code(err.kind()))
        }
    }
}

/// One JSON line on stderr so callers can parse failures mechanically.
fn error_report(err: &Error) -> String {
    let kind = match err.kind() {
        ErrorKind::Validation => "validation",
        ErrorKind::Network => "network",
        ErrorKind::Integrity => "data-integrity",
    };
    serde_json::json!({
        "error": { "kind": kind, "message": err.to_string() }
    })
    .to_string()
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Network => 3,
        ErrorKind::Integrity => 4,
    }
}
