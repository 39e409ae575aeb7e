//! Seeded fuzzing of the expression rewrites, and the Nishida reduction in
//! the instability context of the loop-space argument.

mod support;

#[test]
fn ten_thousand_rewrites_conserve_degree_and_weight() {
    let counts = support::rewrites::fuzz(10_000, 0x5eed);
    assert!(counts.iter().all(|&c| c > 1000), "{counts:?}");
}

#[test]
fn delta_reduction_in_the_instability_context() {
    let expr = support::rewrites::delta_reduction_in_the_instability_context();
    assert_eq!(expr, "2 (a * b * b)");
}
