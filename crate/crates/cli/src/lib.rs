//! Command-line front end for `virtlev-core`.
//!
//! `virtlev <command> [--key value ...]`. Every key has a default; a config
//! file given with `--config` overrides the defaults and flags override both.

pub mod commands;
pub mod config;
pub mod error;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;

use clap::{Arg, ArgMatches, Command};

use crate::config::{keys_for, ExperimentConfig, COMMANDS};
use crate::error::CliError;

pub fn cli() -> Command {
    let mut app = Command::new("virtlev")
        .about("Threshold virtual levels and weighted resolvent estimates")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("PATH")
                .help("file of `key = value` lines"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .help("worker threads (default: VIRTLEV_THREADS, else all cores)"),
        );
    for (name, about) in COMMANDS {
        let mut sub = Command::new(*name).about(*about);
        for (_, key, default, help) in keys_for(name) {
            let shown = if default.is_empty() { "none" } else { default };
            sub = sub.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help(format!("{help} [default: {shown}]")),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn resolve_config(command: &str, m: &ArgMatches) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            ExperimentConfig::from_text(command, &text)?
        }
        None => ExperimentConfig::defaults(command)?,
    };
    for (_, key, _, _) in keys_for(command) {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn thread_count(m: &ArgMatches) -> Result<usize, CliError> {
    let (text, source) = match m.get_one::<String>("threads") {
        Some(t) => (t.clone(), "--threads"),
        None => match std::env::var("VIRTLEV_THREADS") {
            Ok(t) if !t.trim().is_empty() => (t, "VIRTLEV_THREADS"),
            _ => return Ok(0),
        },
    };
    match text.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(CliError::Usage(format!("{source}: expected a positive integer, got `{text}`"))),
    }
}

fn write_to(path: &str, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_string(), source };
    if path == "-" {
        out.write_all(text.as_bytes()).map_err(io)
    } else {
        std::fs::write(path, text).map_err(io)
    }
}

/// A parsed command line: the resolved configuration and the thread count
/// (0 for the rayon default).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub config: ExperimentConfig,
    pub threads: usize,
}

/// Resolves parsed arguments into a configuration. Reads the config file
/// named by `--config`, if any.
pub fn invocation(matches: &ArgMatches) -> Result<Invocation, CliError> {
    let (command, m) = matches.subcommand().ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
    Ok(Invocation { config: resolve_config(command, m)?, threads: thread_count(m)? })
}

fn execute(inv: &Invocation, out: &mut dyn Write) -> Result<bool, CliError> {
    let cfg = &inv.config;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| commands::execute(cfg))?;
    write_to(cfg.str("output"), &outcome.table, out)?;
    if let (Some(report), Some(path)) = (&outcome.report, cfg.values().get("report")) {
        if !path.is_empty() {
            let mut doc = serde_json::Map::new();
            let echo = cfg.preamble().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
            doc.insert("config".into(), serde_json::Value::Object(echo));
            doc.extend(report.as_object().cloned().unwrap_or_default());
            let text = serde_json::to_string_pretty(&doc).expect("report is valid JSON") + "\n";
            write_to(path, &text, out)?;
        }
    }
    writeln!(out, "{}", outcome.verdict).map_err(|source| CliError::Io { path: "-".into(), source })?;
    Ok(outcome.ok)
}

/// Runs the command line `argv` (program name first). Returns the exit code:
/// 0 on success, 1 for failed checks and computation errors, 2 for usage and
/// configuration errors. Errors go to `err` as one line of JSON.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
                _ => {
                    let e = CliError::Usage(e.render().to_string().trim().to_string());
                    let _ = writeln!(err, "{}", e.to_json());
                    e.exit_code()
                }
            };
        }
    };
    match invocation(&matches).and_then(|inv| execute(&inv, out)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
