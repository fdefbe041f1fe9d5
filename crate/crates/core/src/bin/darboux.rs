use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use darboux_core::cli::{run, Cli, Command};

fn main() -> ExitCode {
    env_logger::init();
    let cfg = match Cli::parse().into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut data = Vec::new();
    let outcome = match run(&cfg, &mut data) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    // The verify report is the primary output; its CSV only goes to a file.
    let write = match (&cfg.out, cfg.command) {
        (Some(path), _) => std::fs::write(path, &data),
        (None, Command::Verify) => Ok(()),
        (None, _) => std::io::stdout().write_all(&data),
    };
    if let Err(e) = write {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    if cfg.command == Command::Verify {
        print!("{}", outcome.report);
    } else {
        eprint!("{}", outcome.report);
    }
    if outcome.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
