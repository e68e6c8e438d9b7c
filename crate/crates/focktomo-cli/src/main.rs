//! Command-line front end: simulate homodyne records of conditionally
//! prepared photon states, reconstruct them by Radon / MaxLik / moment
//! methods, and report the critical Wigner-function values.

mod commands;
mod config;
mod formats;

use std::process::ExitCode;

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("FOCKTOMO_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: FOCKTOMO_THREADS must be a positive integer");
                return ExitCode::FAILURE;
            }
        }
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (command, cfg) = match config::parse_args(&args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = match command.as_str() {
        "simulate" => commands::cmd_simulate(&cfg),
        "reconstruct" => commands::cmd_reconstruct(&cfg),
        "report" => commands::cmd_report(&cfg),
        "selftest" => {
            return match commands::cmd_selftest() {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::FAILURE,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            };
        }
        other => Err(format!(
            "unknown command '{other}' (expected simulate|reconstruct|report|selftest)"
        )),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
