use std::process::ExitCode;

use clap::Parser;

use naimark_cli::commands::{common, run};
use naimark_cli::format::write_json;
use naimark_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli.command) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", outcome.report);
    if let Some(path) = &common(&cli.command).out {
        if let Err(e) = write_json(path, &outcome.report_file().to_value()) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if outcome.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
