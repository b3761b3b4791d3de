mod args;
mod commands;
mod output;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{Cli, Command, Format, Options};

const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// A malformed or incomplete command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Reads a config file: either a bare options object or a report carrying one under `config`.
fn load_config(path: &Path) -> anyhow::Result<Options> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("bad config {}", path.display()))
}

fn execute(command: &Command) -> anyhow::Result<()> {
    let cli = command.options().clone();
    let options = match &cli.config {
        Some(path) => cli.clone().merged_with(load_config(path)?),
        None => cli.clone(),
    };
    let format = cli.format.unwrap_or(match command {
        Command::Analyze(_) => Format::Text,
        _ => Format::Json,
    });
    let outcome = commands::run(command, &options)?;
    let bytes = output::render(command.name(), options.embedded(), &outcome, format)?;
    output::emit(&bytes, cli.out.as_deref())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<reclab::Error>() {
        Some(reclab::Error::HypothesisFailed { .. }) => EXIT_HYPOTHESIS,
        Some(e) if e.is_cap_error() => EXIT_CAP,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
