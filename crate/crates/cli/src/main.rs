//! `polylens` — experiment runner exposing the library computations as
//! subcommands with reproducible configs and CSV/JSON outputs.

mod commands;
mod config;
mod report;

use clap::error::ErrorKind;
use clap::Parser;

use config::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) =>
        {
            print!("{err}");
            std::process::exit(0);
        }
        Err(err) => {
            // Unparseable invocations are config errors in this tool's exit
            // discipline, not clap's default usage code.
            eprintln!("{err}");
            std::process::exit(1);
        }
    };
    if let Err(err) = commands::run(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.code());
    }
}
