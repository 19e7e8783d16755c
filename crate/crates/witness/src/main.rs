use std::process::ExitCode;

use clap::Parser;

use qee_witness::cli::{run, RunConfig};
use qee_witness::output::VerdictStatus;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = RunConfig::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(VerdictStatus::Fault.code())
        }
    }
}
