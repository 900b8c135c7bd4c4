//! Runs every acceptance criterion at full size and prints one line each.
//!
//! Run with `--nocapture` to see the table while it is produced.

use sublinear_core::acceptance::{run_all, Scale};

#[test]
fn acceptance_criteria() {
    let results = run_all(Scale::Full, |r| println!("{}", r.line()));
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.line())
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    assert!(
        failed.is_empty(),
        "failing criteria:\n{}",
        failed.join("\n")
    );
}
