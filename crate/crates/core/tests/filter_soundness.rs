//! Randomized miniature rounds: every verified pair must honour the critic
//! and distance contracts, whatever the configuration.

#[path = "common/filter_fuzz.rs"]
mod fuzz;

#[test]
fn verified_pairs_always_satisfy_filters() {
    let out = fuzz::fuzz_rounds(1000, 2024);
    assert!(out.violations.is_empty(), "{}", out.violations.join("\n"));
    assert!(out.pairs > 1000, "only {} pairs checked", out.pairs);
}
