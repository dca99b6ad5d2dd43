//! Runs the ten acceptance criteria and prints one PASS/FAIL line each.
//! Positional arguments select criteria by number.

use std::process::ExitCode;

use hadamard_gap::acceptance::{run, CRITERIA};

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let outcome = run(c.id).expect("criterion ids come from CRITERIA");
        println!("{}", outcome.line());
        for f in outcome.failures() {
            println!("    {f}");
        }
        if !outcome.pass() {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
