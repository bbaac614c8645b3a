//! Runs every acceptance suite at its stated tolerance and prints one line per
//! criterion, followed by the individual checks.

use std::io::Write;

use magvirial::verify::{run_suite, SUITES};

fn emit(line: &str) {
    // bypass the test harness capture so the table shows up in plain `cargo test`
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    let mut lines = Vec::new();
    for suite in SUITES {
        let report = run_suite(suite).unwrap_or_else(|e| panic!("suite {suite} errored: {e}"));
        let criterion = report.checks.first().map_or(0, |c| c.criterion);
        let ok = report.passed();
        lines.push(format!(
            "criterion {criterion:>2} [{suite}]: {}",
            if ok { "PASS" } else { "FAIL" }
        ));
        for c in &report.checks {
            emit(&format!("    {}", c.line()));
        }
        for row in &report.resolution_table {
            emit(&format!(
                "    N={} dt={} window_end={} max_residual={:e}",
                row.points, row.dt, row.window_end, row.max_residual
            ));
        }
        if !ok {
            failed.push(suite);
        }
    }
    emit("acceptance summary:");
    for l in &lines {
        emit(l);
    }
    assert!(failed.is_empty(), "failing suites: {failed:?}");
}
