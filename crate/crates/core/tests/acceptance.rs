//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported like the rest but do not
//! fail the run; each has a written analysis next to the project decisions.

use std::process::ExitCode;
use std::time::Instant;

use stopsum_core::rng::default_workers;
use stopsum_core::verify::{VerifyOptions, SCENARIOS};

const KNOWN_FAILURES: &[u32] = &[9];

fn main() -> ExitCode {
    let opts = VerifyOptions {
        workers: default_workers(),
        ..VerifyOptions::default()
    };
    let mut unexpected = Vec::new();
    for s in SCENARIOS {
        let start = Instant::now();
        let (pass, line) = match (s.run)(&opts) {
            Ok(o) => (o.pass, o.line()),
            Err(e) => (false, format!("FAIL [{:>2}] {}: error: {e}", s.id, s.name)),
        };
        let known = KNOWN_FAILURES.contains(&s.id);
        let note = if !pass && known { " (known failure)" } else { "" };
        println!("{line}{note} [{:.1}s]", start.elapsed().as_secs_f64());
        if !pass && !known {
            unexpected.push(s.id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
