use std::process::ExitCode;

use clap::Parser;
use sato_tate::cli::{exit_code, run, Args, RunConfig};

fn main() -> ExitCode {
    let args = Args::parse();
    match RunConfig::from_args(&args).and_then(|cfg| run(&cfg)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
