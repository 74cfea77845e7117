mod cli;
mod commands;
mod verify;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};

/// 2 for failures to read or write files, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.is::<std::io::Error>() || cause.downcast_ref::<mtails::Error>().is_some_and(mtails::Error::is_io)
    });
    if io {
        2
    } else {
        1
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Bound(a) => commands::bound(a)?,
        Command::Invert(a) => commands::invert(a)?,
        Command::Sup(a) => commands::sup(a)?,
        Command::Cov(a) => commands::cov(a)?,
        Command::Split(a) => commands::split(a)?,
        Command::Gauss(a) => commands::gauss(a)?,
        Command::Rayleigh(a) => commands::rayleigh(a)?,
        Command::Eigbound(a) => commands::eigbound(a)?,
        Command::RmmPlan(a) => commands::rmm_plan(a)?,
        Command::RmmMul(a) => commands::rmm_mul(a, cli.seed)?,
        Command::RmmSize(a) => commands::rmm_size(a)?,
        Command::Verify(a) => {
            let all_pass = verify::verify(a, cli.seed)?;
            return Ok(all_pass || !a.strict);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
