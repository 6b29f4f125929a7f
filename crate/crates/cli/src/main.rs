use std::process::ExitCode;

use clap::Parser;
use translike_cli::{emit, execute, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the configuration-error code.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let run = execute(&config);
    if let Err(e) = emit(&config, &run) {
        eprintln!("translike: writing report: {e}");
        return ExitCode::from(1);
    }
    if let Some(reason) = run.report.reasons.first() {
        eprintln!("translike: {reason}");
    }
    ExitCode::from(run.exit_code() as u8)
}
