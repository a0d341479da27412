//! The `argwin` command line.
//!
//! Every command writes its outputs plus `run_manifest.json` into `--out`.
//! Failures print one JSON object `{"error": kind, "message": text}` on
//! stderr and exit with 2 (bad input) or 3 (nothing to report).

mod args;
mod commands;
mod output;

use std::{ffi::OsString, fs, io, path::PathBuf, time::Instant};

use clap::{error::ErrorKind, Parser};
use serde_json::Value;

pub use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] argwin_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Empty(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use argwin_core::Error as E;
        match self {
            CliError::Empty(_) => 3,
            CliError::Core(
                E::EmptyEnsemble | E::InsufficientSamples { .. } | E::InsufficientTail { .. } | E::InsufficientLevels(_),
            ) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "Usage",
            CliError::Empty(_) => "EmptyResult",
            CliError::Read { .. } => "UnreadablePath",
            CliError::Write { .. } => "Write",
            CliError::Json(_) => "Json",
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Turns a JSON config object into flags. `params` of a run manifest is
/// accepted in place of a bare object.
fn config_tokens(path: &PathBuf) -> CliResult<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let value: Value = serde_json::from_str(&text)?;
    let obj = match value.get("params").unwrap_or(&value) {
        Value::Object(m) => m.clone(),
        _ => return Err(CliError::Usage(format!("{} is not a JSON object", path.display()))),
    };
    let mut tokens = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if matches!(key.as_str(), "config" | "command") {
            continue;
        }
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => tokens.push(flag.into()),
            Value::String(s) => tokens.extend([flag.into(), s.into()]),
            Value::Number(n) => tokens.extend([flag.into(), n.to_string().into()]),
            other => return Err(CliError::Usage(format!("config key `{key}` has unsupported value {other}"))),
        }
    }
    Ok(tokens)
}

const SUBCOMMANDS: [&str; 6] = ["solve", "simulate", "recurrence", "analyze", "fit-powerlaw", "recommend"];

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Parses with config flags inserted right after the subcommand so that
/// explicit flags, which come later, take precedence.
fn parse(argv: Vec<OsString>) -> Result<Cli, ParseFailure> {
    let sub = argv.iter().skip(1).position(|a| SUBCOMMANDS.iter().any(|s| a == *s)).map(|p| p + 1);
    let (Some(config), Some(pos)) = (config_path(&argv), sub) else {
        return Cli::try_parse_from(&argv).map_err(ParseFailure::Clap);
    };
    let tokens = config_tokens(&config).map_err(ParseFailure::Cli)?;
    let mut merged = argv[..=pos].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[pos + 1..]);
    Cli::try_parse_from(merged).map_err(ParseFailure::Clap)
}

enum ParseFailure {
    Clap(clap::Error),
    Cli(CliError),
}

fn fail(e: &CliError) -> i32 {
    eprintln!("{}", e.to_json());
    e.exit_code()
}

/// Runs the command line and returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = impl Into<OsString>>) -> i32 {
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(ParseFailure::Clap(e)) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(ParseFailure::Clap(e)) => {
            let msg = e.render().to_string();
            return fail(&CliError::Usage(msg.trim().to_string()));
        }
        Err(ParseFailure::Cli(e)) => return fail(&e),
    };
    let started = Instant::now();
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| commands::execute(&cli, started)),
            Err(e) => Err(CliError::Usage(format!("cannot start {j} worker threads: {e}"))),
        },
        None => commands::execute(&cli, started),
    };
    match result {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}
