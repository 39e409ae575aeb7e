//! Adem reduction against an independent action oracle.

mod support;

use nishida::steenrod::{gens_degree, AdmissibleMonomial, Gen, SteenrodAlgebra, SteenrodElement};
use nishida::Prime;
use proptest::prelude::*;

#[test]
fn adem_agrees_with_the_action_oracle() {
    assert!(support::adem::adem_agrees_with_the_action_oracle() > 200);
}

#[test]
fn products_are_associative_and_match_concatenation() {
    support::adem::products_are_associative_and_match_concatenation();
}

fn gen_strategy() -> impl Strategy<Value = Gen> {
    prop_oneof![Just(Gen::Beta), (1u32..12).prop_map(Gen::P)]
}

proptest! {
    #[test]
    fn reduction_is_admissible_homogeneous_and_idempotent(
        w in proptest::collection::vec(gen_strategy(), 0..5),
        pi in 0usize..2,
    ) {
        let p = Prime::new([3u64, 5][pi]).unwrap();
        let alg = SteenrodAlgebra::new(p);
        let red = alg.adem_reduce(&w);
        let d = gens_degree(p, &w);
        for (m, c) in red.terms() {
            prop_assert!(!c.is_zero());
            prop_assert_eq!(m.degree(), d);
            prop_assert!(AdmissibleMonomial::new(p, m.word().to_vec()).is_ok());
            let again = alg.adem_reduce(&m.gens());
            prop_assert_eq!(again, SteenrodElement::monomial(&m));
        }
    }

    #[test]
    fn beta_squares_to_zero(w in proptest::collection::vec(gen_strategy(), 0..3)) {
        let p = Prime::new(3).unwrap();
        let alg = SteenrodAlgebra::new(p);
        let mut ww = w.clone();
        ww.extend([Gen::Beta, Gen::Beta]);
        prop_assert!(alg.adem_reduce(&ww).is_zero());
    }
}
