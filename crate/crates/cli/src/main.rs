mod args;
mod commands;
mod config;
mod report;
mod rundir;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use commands::Env;
use rundir::RunDir;

const THREADS_VAR: &str = "LYRICVEC_THREADS";

fn clap_command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |s| s.args_override_self(true));
    }
    cmd
}

/// Path given to `--config`, if any, among the arguments after the
/// subcommand name.
fn config_path(rest: &[OsString]) -> Option<PathBuf> {
    let mut it = rest.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

enum Failure {
    Usage(clap::Error),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn env() -> Result<Env> {
    let max_workers = match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{v}`"))?;
            Some(n)
        }
        Err(_) => None,
    };
    if let Some(n) = max_workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(Env { max_workers })
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let cmd = clap_command();
    let mut argv = argv;
    if let Some(sub) = argv.get(1).and_then(|s| s.to_str()).and_then(|s| cmd.find_subcommand(s)) {
        if let Some(path) = config_path(&argv[2..]) {
            let extra = config::file_args(&path, sub).map_err(|e| match e {
                config::ConfigError::Io(e) => Failure::Run(e),
                config::ConfigError::Syntax(msg) => Failure::Usage(
                    clap_command().error(clap::error::ErrorKind::UnknownArgument, msg),
                ),
            })?;
            argv.splice(2..2, extra);
        }
    }
    let matches = cmd.clone().try_get_matches_from(argv).map_err(Failure::Usage)?;
    let cli = Cli::from_arg_matches(&matches).map_err(Failure::Usage)?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = cmd.find_subcommand(name).expect("parsed subcommand exists");
    let config_text = config::render(sub, sub_matches);

    let env = env()?;
    let out = cli.command.run_args().out.clone();
    let dir = RunDir::open(
        &out,
        name,
        &config_text,
        commands::seed(&cli.command),
        &commands::inputs(&cli.command),
    )?;
    commands::execute(&cli.command, dir, env)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => e.exit(),
        Err(Failure::Run(e)) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
