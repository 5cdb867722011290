//! The `sarcalab` command-line tool and HTTP service.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod server;

use std::ffi::OsString;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::CliResult;

/// Parses `argv`, runs the subcommand, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    let file = cli.config.as_ref();
    match &cli.command {
        Command::Train(a) => commands::train(a.to_config(file)?),
        Command::Eval(a) => commands::eval(a.to_config(file)?),
        Command::Kfold(a) => commands::kfold(a.to_config(file)?),
        Command::Explain(a) => commands::explain_cmd(a.to_config(file)?),
        Command::Report(a) => commands::report(&a.inputs, &a.out),
        Command::Synth(a) => {
            let d = sarcalab::corpus::synthetic_marker_corpus(a.n, a.seed);
            sarcalab::corpus::write_csv(&d, &a.out)?;
            let c = d.summary();
            Ok(format!(
                "wrote {} records ({} sarcastic) to {}\n",
                c.total,
                c.per_class[1],
                a.out.display()
            ))
        }
        Command::Serve(a) => {
            let cfg = match file {
                Some(p) => config::RunConfig::load(p)?,
                None => Default::default(),
            };
            server::serve(a, cfg).map(|()| String::new())
        }
    }
}
