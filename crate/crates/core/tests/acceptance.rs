//! The acceptance gate: runs every criterion at full size with the shipped
//! default configuration and prints one verdict line per criterion.  Any
//! failure carries its measured details and the offending CSV rows.

use nullwave::accept::run_all;
use nullwave::config::RunConfig;

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let report = run_all(&cfg, false).expect("acceptance suite must run to completion");
    for r in &report.results {
        println!(
            "criterion {:2} [{}] {:<22} ({:6.1}s)  {}",
            r.id,
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.seconds,
            r.details
        );
    }
    let failed: Vec<_> = report.results.iter().filter(|r| !r.passed).collect();
    if !failed.is_empty() {
        for r in &failed {
            let prefix = format!("c{:02}", r.id);
            for a in report.artifacts.iter().filter(|a| a.name.starts_with(&prefix)) {
                eprintln!("--- {}\n{}", a.name, a.content);
            }
        }
        panic!(
            "{} criterion(s) failed: {:?}",
            failed.len(),
            failed.iter().map(|r| r.id).collect::<Vec<_>>()
        );
    }
}
