//! `thz-gbsm` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod args;
mod capacity;
mod output;
mod plot;
mod roundtrip;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::ConfigError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate::run(a).map(|_| true),
        Command::Analyze(a) => analyze::run(a).map(|_| true),
        Command::Roundtrip(a) => roundtrip::run(a),
        Command::Capacity(a) => capacity::run(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
