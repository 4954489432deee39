use std::process::ExitCode;

use clap::Parser;
use jpdlab_cli::{run, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(out) => {
            print!("{}", out.stdout);
            for note in &out.failures {
                eprintln!("verification failed: {note}");
            }
            ExitCode::from(out.exit_code())
        }
        Err(e) => {
            eprintln!("jpdlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
