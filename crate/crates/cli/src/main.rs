//! `clvkit` command-line front end.
//!
//! Exit status: 0 success, 1 checks ran but failed, 2 configuration error,
//! 3 numerical failure, 4 I/O failure.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod settings;

use std::process::ExitCode;

use clap::{ArgMatches, Command};

use error::CliError;
use settings::{Key, Settings};

type Handler = fn(&Settings) -> Result<(), CliError>;

fn subcommands() -> Vec<(Command, Vec<&'static Key>, Handler)> {
    vec![
        (
            Command::new("run").about("Compute covariant Lyapunov vectors at one base point"),
            settings::run_keys(),
            commands::cmd_run as Handler,
        ),
        (
            Command::new("converge").about("Measure convergence to the exact splitting against run length"),
            settings::converge_keys(),
            commands::cmd_converge,
        ),
        (
            Command::new("lemma-check").about("Check the one-step subspace estimates on random instances"),
            settings::lemma_keys(),
            commands::cmd_lemma_check,
        ),
        (
            Command::new("ulam").about("Leading vectors of Ulam transfer-operator cocycles across resolutions"),
            settings::ulam_keys(),
            commands::cmd_ulam,
        ),
        (
            Command::new("export-orbit").about("Write a synthetic orbit as CLVMAT1 matrices"),
            settings::export_keys(),
            commands::cmd_export_orbit,
        ),
    ]
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("CLV_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("CLV_THREADS must be a non-negative integer, got {text:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("CLV_THREADS: {e}")))?;
    }
    Ok(())
}

fn dispatch(matches: &ArgMatches, table: &[(Command, Vec<&'static Key>, Handler)]) -> Result<(), CliError> {
    configure_threads()?;
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let (_, keys, handler) = table
        .iter()
        .find(|(cmd, _, _)| cmd.get_name() == name)
        .expect("matched subcommand is registered");
    handler(&Settings::resolve(sub, keys)?)
}

fn main() -> ExitCode {
    let table = subcommands();
    let mut cli = Command::new("clvkit")
        .version(clvkit::TOOL_VERSION)
        .about("Covariant Lyapunov vectors of linear cocycles")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (cmd, keys, _) in &table {
        cli = cli.subcommand(settings::with_keys(cmd.clone(), keys));
    }
    cli.build();
    let matches = cli.clone().get_matches();
    match dispatch(&matches, &table) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Config(_) = e {
                if let Some((name, _)) = matches.subcommand() {
                    if let Some(sub) = cli.find_subcommand_mut(name) {
                        eprintln!("\n{}", sub.render_usage());
                        eprintln!("Run `clvkit {name} --help` for all settings.");
                    }
                }
            }
            e.exit_code()
        }
    }
}
