//! Runs the full battery against the shipped fixtures and prints one line per
//! criterion. Select a subset with `QLAT_CRITERIA=1,4,7`.
//!
//! Criteria listed in `KNOWN_FAILURES` still print FAIL but do not fail the
//! test binary; any other failure, or a listed criterion that starts passing,
//! does.

use qlat::criteria::{self, SuiteInputs, CRITERIA};
use qlat::ExperimentConfig;
use std::path::Path;
use std::process::ExitCode;

/// Criteria that do not hold on the shipped fixtures at desk scale.
const KNOWN_FAILURES: &[u32] = &[10];

fn main() -> ExitCode {
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/default.cfg");
    let cfg = match ExperimentConfig::load(&cfg_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cannot load {}: {e}", cfg_path.display());
            return ExitCode::FAILURE;
        }
    };
    let inputs = match SuiteInputs::load(&cfg) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("cannot load fixtures: {e}");
            return ExitCode::FAILURE;
        }
    };
    let only: Option<Vec<u32>> = std::env::var("QLAT_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut unexpected = 0;
    println!("acceptance: config sha256={}", cfg.hash());
    for &(id, _, _) in CRITERIA.iter() {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let out = criteria::run(&inputs, id).expect("known criterion");
        println!("{}", out.line());
        failed += !out.pass as u32;
        unexpected += (out.pass == KNOWN_FAILURES.contains(&id)) as u32;
    }
    println!("acceptance: {failed} failed, known failures {KNOWN_FAILURES:?}, {unexpected} unexpected");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
