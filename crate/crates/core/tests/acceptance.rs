//! One line per acceptance criterion; exits non-zero if any gating check fails.

use std::process::ExitCode;

use superliouville::verify::{all_ids, Suite};
use superliouville::BandLimit;

fn main() -> ExitCode {
    let suite = Suite::new(BandLimit::new(16).expect("16 is a valid band"));
    let report = suite.run_all(&all_ids());
    for c in &report.checks {
        println!("{}", c.line());
        if let Some(e) = &c.error {
            println!("    error: {e}");
        }
    }
    if report.passed {
        println!("acceptance: all gating criteria pass");
        ExitCode::SUCCESS
    } else {
        let failed: Vec<_> = report.failures().iter().map(|c| c.id).collect();
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
