//! One line per acceptance criterion; non-zero exit if any fails.

use hardedge::verify::{acceptance_suite, MonteCarloPlan};
use std::process::ExitCode;

fn main() -> ExitCode {
    let checks = acceptance_suite(&MonteCarloPlan::default());
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    println!();
    for (i, c) in checks.iter().enumerate() {
        println!("[{:>2}] {}", i + 1, c.line());
        if verbose || !c.passed {
            for d in &c.details {
                println!("       {d}");
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("\nacceptance: {} passed, {failed} failed\n", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
