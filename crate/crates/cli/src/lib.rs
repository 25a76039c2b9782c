//! `lqshrink` command-line front end.
//!
//! Every subcommand takes its parameters as flags or from a flat JSON object
//! given with `--config`; keys are the long flag names with `_` for `-`.
//! Flags typed on the command line override the file.
//!
//! Exit codes: 0 success, 1 analysis failure (e.g. no curvature maximum),
//! 2 invalid configuration or input, 3 solver divergence, 4 I/O.

mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use args::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Lib(#[from] lqshrink::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Lib(e) if e.is_divergence() => 3,
            CliError::Lib(e) if e.is_io() => 4,
            CliError::Lib(lqshrink::Error::NoCurvature(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Library errors from reading `path`, with I/O failures tagged by the path.
pub(crate) fn at_path<T>(path: &Path, r: lqshrink::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        lqshrink::Error::Io(source) => CliError::Io { path: path.to_path_buf(), source },
        other => CliError::Lib(other),
    })
}

/// Files and stdout text of one run, written together at the end.
#[derive(Debug)]
pub(crate) struct Output {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: String,
    started: Instant,
    timing: bool,
}

impl Output {
    fn new(timing: bool) -> Self {
        Output { files: Vec::new(), stdout: String::new(), started: Instant::now(), timing }
    }

    pub(crate) fn file(&mut self, path: &Path, contents: impl Into<Vec<u8>>) {
        self.files.push((path.to_path_buf(), contents.into()));
    }

    pub(crate) fn print(&mut self, text: &str) {
        self.stdout.push_str(text);
    }

    /// `Some(seconds)` only under `--timing`, so default outputs stay byte-stable.
    pub(crate) fn wall_time(&self) -> Option<f64> {
        self.timing.then(|| self.started.elapsed().as_secs_f64())
    }

    fn commit(self) -> CliResult<()> {
        for (path, bytes) in &self.files {
            std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
        }
        let mut stdout = std::io::stdout().lock();
        match stdout.write_all(self.stdout.as_bytes()).and_then(|()| stdout.flush()) {
            // a closed pipe (`| head`) is the reader's choice, not a failure
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                return Err(CliError::Io { path: PathBuf::from("<stdout>"), source: e });
            }
            _ => {}
        }
        if self.timing {
            eprintln!("wall time: {:.3} s", self.started.elapsed().as_secs_f64());
        }
        Ok(())
    }
}

/// Parse a subcommand's arguments, filling everything not typed on the command line from `config`.
fn resolve<T>(m: &ArgMatches, config: Option<&Value>) -> CliResult<T>
where
    T: FromArgMatches + Serialize + DeserializeOwned,
{
    let cli = T::from_arg_matches(m).map_err(|e| config_err(e.to_string()))?;
    let Some(config) = config else { return Ok(cli) };
    let Value::Object(mut merged) = serde_json::to_value(&cli).map_err(|e| config_err(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    let Value::Object(entries) = config else { return Err(config_err("config file must hold a JSON object")) };
    for (key, value) in entries {
        if !merged.contains_key(key) {
            return Err(config_err(format!("unknown config key `{key}`")));
        }
        if m.value_source(key) != Some(ValueSource::CommandLine) {
            merged.insert(key.clone(), value.clone());
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| config_err(format!("config: {e}")))
}

fn dispatch(m: &ArgMatches) -> CliResult<()> {
    let config = match m.get_one::<PathBuf>("config") {
        Some(path) => Some(serde_json::from_str::<Value>(&read_text(path)?).map_err(|e| config_err(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let mut out = Output::new(m.get_flag("timing"));
    let cfg = config.as_ref();
    let (name, sub) = m.subcommand().expect("clap requires a subcommand");
    match name {
        "solve" => commands::solve(resolve(sub, cfg)?, &mut out)?,
        "maxent" => commands::maxent(resolve(sub, cfg)?, &mut out)?,
        "varmin" => commands::varmin(resolve(sub, cfg)?, &mut out)?,
        "prox-audit" => commands::prox_audit(resolve(sub, cfg)?, &mut out)?,
        "lcurve" => commands::lcurve(resolve(sub, cfg)?, &mut out)?,
        "qsweep" => commands::qsweep(resolve(sub, cfg)?, &mut out)?,
        "gen-problem" => commands::gen_problem(resolve(sub, cfg)?, &mut out)?,
        "compare" => commands::compare(resolve(sub, cfg)?, &mut out)?,
        other => unreachable!("unhandled subcommand {other}"),
    }
    out.commit()
}

/// Run with the given argument list (program name first); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lqshrink: error: {e}");
            e.exit_code()
        }
    }
}
