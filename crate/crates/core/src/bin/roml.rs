use std::process::ExitCode;

use clap::Parser;
use roml::harness::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|out| emit(&cli, &out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roml {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
