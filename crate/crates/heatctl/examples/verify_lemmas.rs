//! Run the verification suite on the shipped reference configuration and
//! print every check with its margin.
//!
//!     cargo run --release --example verify_lemmas

use heatctl::verify::CheckStatus;
use heatctl::{run_verification, ProblemConfig};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.cfg");
    let cfg = ProblemConfig::load(path.as_ref()).expect("reference config parses");
    let report = run_verification(&cfg).expect("suite runs");

    for check in &report.checks {
        let tag = match check.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Warn => "WARN",
            CheckStatus::Fail => "FAIL",
        };
        println!(
            "[{tag}] {:<24} margin {:>12.3e}  tol {:>9.3e}  {}",
            check.id, check.margin, check.tolerance, check.property
        );
    }
    println!(
        "\n{} passed, {} warned, {} failed",
        report.passed, report.warned, report.failed
    );
    if !report.all_passed() {
        std::process::exit(1);
    }
}
