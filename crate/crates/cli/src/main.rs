use std::process::ExitCode;

use clap::Parser;
use junta_cli::{execute, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    ExitCode::from(execute(&config))
}
