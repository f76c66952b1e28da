//! Acceptance gate: one test per criterion, printing the pass/fail line.
//!
//! Criterion 2 requires the fitted decay rate of d(θ_t) to sit within 5%
//! of n. For n ≥ 3 the flow's actual asymptotic rate is 2(n−1) — the
//! linearization of the drift at the equally spaced configuration has
//! spectrum {−2m(n−m)} — so that criterion is expected red for n ∈ {3, 5};
//! the test reports the measured rates rather than hiding them.

use mrlab::acceptance::*;

const SEED: u64 = 0;

fn assert_criterion(out: CriterionOutcome) {
    println!("{}", out.line());
    assert!(out.passed, "{}", out.line());
}

#[test]
fn criterion_01_zero_energy_closed_form() {
    assert_criterion(criterion_1());
}

#[test]
fn criterion_02_exponential_rate_n() {
    assert_criterion(criterion_2(SEED));
}

#[test]
fn criterion_03_gap_monotonicity() {
    assert_criterion(criterion_3(SEED));
}

#[test]
fn criterion_04_counterexample_bound() {
    assert_criterion(criterion_4());
}

#[test]
fn criterion_05_algebraic_identities() {
    assert_criterion(criterion_5(SEED));
}

#[test]
fn criterion_06_energy_decomposition() {
    assert_criterion(criterion_6(SEED));
}

#[test]
fn criterion_07_phi_identity() {
    assert_criterion(criterion_7(SEED));
}

#[test]
fn criterion_08_girsanov_consistency() {
    assert_criterion(criterion_8(SEED));
}

#[test]
fn criterion_09_tail_bound() {
    assert_criterion(criterion_9(SEED));
}

#[test]
fn criterion_10_loewner_slit_oracles() {
    assert_criterion(criterion_10());
}

#[test]
fn criterion_11_derivative_bound() {
    assert_criterion(criterion_11(SEED));
}

#[test]
fn criterion_12_ldp_trend() {
    assert_criterion(criterion_12(SEED));
}

#[test]
fn criterion_13_rate_optimizer_oracle() {
    assert_criterion(criterion_13(SEED));
}

#[test]
fn criterion_14_reproducibility() {
    assert_criterion(criterion_14(SEED));
}
