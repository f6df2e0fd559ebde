use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tnf::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((outcome, format)) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(outcome.render(format).as_bytes());
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
