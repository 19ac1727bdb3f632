mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;

const EXIT_ERROR: u8 = 2;

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {}", one_line(msg));
    ExitCode::from(EXIT_ERROR)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PQHARM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("PQHARM_THREADS must be a positive integer, got '{raw}'"))?;
    if n == 0 {
        return Err("PQHARM_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
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
            let head = text.split("\n\n").next().unwrap_or("invalid arguments");
            return fail(head.trim_start_matches("error: "));
        }
    };
    if let Err(msg) = configure_threads() {
        return fail(&msg);
    }
    let result = match &cli.command {
        Command::Catalog(a) => commands::catalog(a),
        Command::VerifyHypersurface(a) => commands::verify_hypersurface(a),
        Command::VerifyCurve(a) => commands::verify_curve(a),
        Command::Solve(a) => commands::solve(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::VariationCheck(a) => commands::variation_check(a),
    };
    match result {
        Ok(Outcome::Match) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(1),
        Err(e) => fail(&format!("{e:#}")),
    }
}
