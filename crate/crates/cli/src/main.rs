use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    radial_dirac_cli::main_with(radial_dirac_cli::Cli::parse())
}
