use std::process::ExitCode;

use salsa::app::execute;
use salsa::cli::{parse_args, CliError};

fn main() -> ExitCode {
    let cmd = match parse_args(std::env::args_os()) {
        Ok(cmd) => cmd,
        Err(CliError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cmd) {
        Ok(outcome) => {
            if let Some(report) = &outcome.report {
                for run in &report.runs {
                    match &run.outcome {
                        Ok(o) => eprintln!(
                            "{:>5}: {} iterations, objective {:.6e}, {:.3} s{}",
                            run.solver.name(),
                            o.iterations,
                            o.objective,
                            o.elapsed_seconds,
                            run.isnr_db.map(|v| format!(", ISNR {v:.2} dB")).unwrap_or_default()
                        ),
                        Err(e) => eprintln!("{:>5}: {e}", run.solver.name()),
                    }
                }
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
