//! The runtime verification suites must be green: brute-force equivalences,
//! finite-difference gradients, mask boundaries and merge identities. These
//! are the same suites the `check` subcommand runs.

use svehdr_core::checks;

fn assert_green(results: &[checks::CheckResult]) {
    for r in results {
        println!("{} {} - {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    assert!(checks::all_passed(results));
}

#[test]
fn equivalence_suite() {
    assert_green(&checks::suite_equiv().unwrap());
}

#[test]
fn gradient_suite() {
    assert_green(&checks::suite_grad().unwrap());
}

#[test]
fn mask_suite() {
    assert_green(&checks::suite_mask());
}

#[test]
fn merge_suite() {
    assert_green(&checks::suite_merge().unwrap());
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(checks::run_suite("nonsense").is_err());
}
