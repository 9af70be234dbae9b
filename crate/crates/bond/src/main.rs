use std::io::Write;
use std::process::ExitCode;

use bond::cli::{self, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli::execute(parsed.command) {
        Ok(out) => {
            if out.written_to.is_none() {
                let _ = std::io::stdout().write_all(out.report.as_bytes());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
