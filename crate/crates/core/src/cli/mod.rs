//! Command-line front end.
//!
//! Every command writes its CSV/JSON artifacts plus `manifest.toml` into
//! `--out`. Exit codes: 0 success, 1 numerical failure, 2 invalid input.

mod args;
mod commands;
mod config;

use std::ffi::OsString;

use clap::{CommandFactory, FromArgMatches};

pub use args::Cli;
pub use commands::{parse_arch, parse_list};
pub use config::{expand_config, manifest_toml, SCHEMA_VERSION};

use crate::error::Result;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let command = Cli::command().args_override_self(true);
    let matches = match command.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_INVALID;
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let sub_cmd = command.find_subcommand(name).expect("known subcommand");
    let mut flags = config::resolved_flags(&command, &matches);
    flags.extend(config::resolved_flags(sub_cmd, sub));
    match execute(&cli, &flags) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cli: &Cli, flags: &std::collections::BTreeMap<String, toml::Value>) -> Result<()> {
    let out = commands::Output::new(&cli.out)?;
    use args::Command::*;
    match &cli.command {
        Gen(a) => commands::gen(a, cli.seed, &out),
        Train(a) => commands::train(a, cli.seed, &out),
        Tune(a) => commands::tune(a, cli.seed, &out),
        Interpret(a) => commands::interpret(a, &out),
        Backtest(a) => commands::backtest(a, cli.seed, &out),
        Bounds(a) => commands::bounds(a, cli.seed, &out),
    }?;
    let manifest = manifest_toml(cli.command.name(), flags)?;
    out.write_str("manifest.toml", &manifest)
}
