use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    cplan::cli::main(cplan::cli::Cli::parse())
}
