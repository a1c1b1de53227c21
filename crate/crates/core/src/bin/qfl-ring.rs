use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;
use qfl_ring::experiment::{self, CliArgs};

fn main() -> ExitCode {
    let args = CliArgs::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose { LevelFilter::Info } else { LevelFilter::Warn })
        .init();
    match experiment::load_and_resolve(args).and_then(|inv| experiment::execute(&inv)) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
