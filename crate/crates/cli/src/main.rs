use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use flightnft::commands::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            eprint!("{}", out.stderr);
            print!("{}", out.stdout);
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
