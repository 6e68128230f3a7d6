use std::process::ExitCode;

use clap::Parser;

mod cli;

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match cli::run(args) {
        Ok(cli::Outcome::NoAlarm) => ExitCode::from(0),
        Ok(cli::Outcome::Alarm) => ExitCode::from(2),
        // downstream closed the pipe, e.g. `| head`
        Err(entmatch::Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
