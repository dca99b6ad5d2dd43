//! `hgap`: runs a named verification recipe and writes its report.
//!
//! Exit status is 0 when every assertion passes, 1 when one fails or a
//! computation breaks down, and 2 for invalid flags, config or hypotheses.

mod config;
mod recipes;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hadamard_gap::report::{write_atomic, Format, Report};
use hadamard_gap::GapError;

use config::Params;

#[derive(Debug, Parser)]
#[command(name = "hgap", version, about = "Numerical checks of sharp spectral gaps and Rellich inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify a Riccati-type parameter family on [1e-3, 1e3].
    OdiCheck(Params),
    /// Sweep the quotient of the truncated test functions u_δ towards the sharp constant.
    Sharpness(Params),
    /// Radial membrane, clamped or buckling eigenvalues; several radii run a gap study.
    Eigen(Params),
    /// Rellich and Hardy quotients of radial test functions.
    Rellich(Params),
    /// Run the acceptance suite.
    Validate(Params),
    /// One default run of every recipe, merged into a single report.
    Report(Params),
}

impl Command {
    fn split(self) -> (&'static str, Params) {
        match self {
            Command::OdiCheck(p) => ("odi-check", p),
            Command::Sharpness(p) => ("sharpness", p),
            Command::Eigen(p) => ("eigen", p),
            Command::Rellich(p) => ("rellich", p),
            Command::Validate(p) => ("validate", p),
            Command::Report(p) => ("report", p),
        }
    }
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn is_config_error(e: &GapError) -> bool {
    matches!(
        e,
        GapError::InvalidParameter { .. } | GapError::NonPositiveRadius(_) | GapError::Hypothesis(_) | GapError::Mode(_)
    )
}

/// The document written for `report` in `format`: a single sweep table for
/// sweep commands, assertion rows otherwise.
fn render(command: &str, report: &Report, format: Format) -> hadamard_gap::Result<String> {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => match report.sweeps.as_slice() {
            [sweep] if matches!(command, "sharpness" | "eigen") => sweep.to_csv(),
            _ => report.to_csv(),
        },
    }
}

fn run(command: &'static str, params: Params) -> ExitCode {
    let params = match params.resolve(command) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("hgap: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let start = Instant::now();
    let result = match command {
        "odi-check" => recipes::odi_check(&params),
        "sharpness" => recipes::sharpness(&params),
        "eigen" => recipes::eigen(&params),
        "rellich" => recipes::rellich(&params),
        "validate" => recipes::validate(&params, &mut |line| eprintln!("{line}")),
        _ => recipes::full_report(&params),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => {
            eprintln!("hgap: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("hgap {command}: {e}");
            if let GapError::Solver { log, .. } = &e {
                for line in log {
                    eprintln!("    {line}");
                }
            }
            return ExitCode::from(EXIT_FAIL);
        }
    };
    if !params.no_timestamp {
        report.stamp_now();
        report.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    }
    let format = params.format.unwrap_or_else(|| match &params.out {
        Some(path) if path.extension().is_some_and(|e| e == "csv") => Format::Csv,
        _ => Format::Json,
    });
    let text = match render(command, &report, format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("hgap: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    match &params.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("hgap: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_FAIL);
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(EXIT_FAIL);
            }
        }
    }
    for row in report.failing_rows() {
        eprintln!(
            "FAIL {} [{}]: computed {:e}, reference {:e}",
            row.theorem, row.parameters, row.computed, row.reference
        );
    }
    for sweep in report.sweeps.iter().filter(|s| !s.pass) {
        eprintln!("FAIL {} [{}]: {}", sweep.theorem, sweep.title, sweep.notes.join("; "));
    }
    eprintln!(
        "{command} [{}]: {}",
        report.theorems.join(", "),
        if report.pass { "PASS" } else { "FAIL" }
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let (command, params) = Cli::parse().command.split();
    run(command, params)
}
