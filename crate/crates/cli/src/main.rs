mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use hsrecon::ErrorClass;

use args::{Cli, Command};

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fail(kind: &str, code: u8, msg: &str) -> ExitCode {
    eprintln!("error kind={kind} code={code} message={}", one_line(msg));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let body = text.split("\n\nUsage:").next().unwrap_or("");
            return fail("usage", 2, body.trim_start_matches("error: "));
        }
    };

    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::SvtBench(a) => commands::svt_bench(a),
        Command::Metrics(a) => commands::metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.class() {
            ErrorClass::Usage => fail("usage", 2, &e.to_string()),
            ErrorClass::Io => fail("io", 3, &e.to_string()),
            ErrorClass::Numeric => fail("numeric", 4, &e.to_string()),
        },
    }
}
