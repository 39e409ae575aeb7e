//! Φ(k, ℓ) against the closure-quotient construction, and structural
//! properties of unstable modules.

mod support;

use std::collections::BTreeMap;

use nishida::phi::tensor_with_phi;
use nishida::steenrod::Gen;
use nishida::unstable::{BasisElement, Coords, GradedFpModule};
use nishida::Prime;
use proptest::prelude::*;

#[test]
fn phi_three_levels_match_the_closure_quotient() {
    support::phi::phi_three_levels_match_the_closure_quotient();
}

#[test]
fn tensor_with_phi_keeps_instability_and_windows() {
    let p = Prime::new(3).unwrap();
    let basis = vec![BasisElement { name: "x".into(), deg: 2 }, BasisElement { name: "y".into(), deg: 6 }];
    let m = GradedFpModule::new(p, basis, vec![], BTreeMap::from([(1, vec![(1, 0, 1)])]), None, true).unwrap();
    for k in 1..=3 {
        let (t, s) = tensor_with_phi(&m, k, None).unwrap();
        assert!(t.check_unstable().is_ok());
        assert_eq!(t.dim(), 6);
        for b in t.basis() {
            assert!([s.n0, s.n1, s.n2].iter().any(|w| w.contains(b.deg)), "{} at {}", b.name, b.deg);
        }
        // the Cartan formula moves x ⊗ t^{p^k} to y ⊗ t^{p^k} under P^1
        let a = t.index_of(&format!("x⊗t^{}", 3u64.pow(k))).unwrap();
        let ya = t.index_of(&format!("y⊗t^{}", 3u64.pow(k))).unwrap();
        assert_eq!(t.apply_gen(Gen::P(1), &Coords::from([(a, 1)])).value().unwrap(), Coords::from([(ya, 1)]));
        assert_eq!(t.desuspension_index().unwrap(), 0);
    }
}

fn module_strategy() -> impl Strategy<Value = GradedFpModule> {
    // classes x_0 .. x_{n-1} in even degrees with random P^1 and β-free
    // structure constants between classes four apart
    (1usize..6, proptest::collection::vec(0u32..3, 0..8), 0i64..4).prop_map(|(n, coeffs, base)| {
        let p = Prime::new(3).unwrap();
        let basis: Vec<BasisElement> =
            (0..n).map(|j| BasisElement { name: format!("x{j}"), deg: 2 * base + 4 * j as i64 }).collect();
        let entries: Vec<(usize, usize, u32)> =
            (0..n.saturating_sub(1)).zip(coeffs.iter().copied()).map(|(j, c)| (j + 1, j, c)).collect();
        GradedFpModule::new(p, basis, vec![], BTreeMap::from([(1, entries)]), None, true).unwrap()
    })
}

proptest! {
    #[test]
    fn module_json_round_trips(m in module_strategy()) {
        let text = m.to_json().to_string();
        prop_assert_eq!(GradedFpModule::from_json(&text).unwrap(), m);
    }

    #[test]
    fn shifting_up_preserves_instability(m in module_strategy(), n in 0i64..6) {
        prop_assume!(m.check_unstable().is_ok());
        prop_assert!(m.shift(n).check_unstable().is_ok());
        let d = m.desuspension_index().unwrap();
        prop_assert_eq!(m.shift(n).desuspension_index().unwrap(), d + n);
        prop_assert!(m.shift(-d).check_unstable().is_ok());
        if d < m.degree_range().unwrap().0 + 1 {
            prop_assert!(m.shift(-d - 1).check_unstable().is_err());
        }
    }
}
