//! Acceptance battery: one PASS/FAIL line per criterion.

use std::process::ExitCode;

use meanfield::suite::{battery, Tolerances};

fn main() -> ExitCode {
    let outcomes = battery(20260101, &Tolerances::default());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
