//! Minimal runner for the acceptance suite: each criterion yields a verdict
//! and one line of output, and the process fails if any criterion fails.

use std::time::Instant;

/// Outcome of one criterion with a one-line explanation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict { passed, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub run: fn() -> Verdict,
}

/// Runs every criterion in order, prints one line each plus a tally, and
/// returns the number of failures.
pub fn run_all(criteria: &[Criterion]) -> usize {
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let v = (c.run)();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {} ({:.1}s): {}", c.id, c.title, start.elapsed().as_secs_f64(), v.detail);
        if !v.passed {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    failed
}
