//! Φ(k, k+2) against the closure-quotient construction.

use nishida::phi::{closure_quotient_oracle, make_phi_range};
use nishida::steenrod::{Gen, SteenrodAlgebra};
use nishida::unstable::Coords;
use nishida::Prime;

pub fn phi_three_levels_match_the_closure_quotient() {
    for p in [3u64, 5] {
        let prime = Prime::new(p).unwrap();
        for k in 0..=3u32 {
            let m = make_phi_range(k, k + 2, prime).unwrap();
            let oracle = closure_quotient_oracle(k, k + 2, prime).unwrap();
            assert_eq!(m, oracle, "p={p} k={k}");
            assert_eq!(m.dim(), 3);
            let keys: Vec<u32> = m.power_entries().keys().copied().collect();
            assert_eq!(keys, [p.pow(k) as u32, p.pow(k + 1) as u32]);
            for (j, i) in keys.iter().enumerate() {
                let v = m.apply_gen(Gen::P(*i), &Coords::from([(j, 1)])).value().unwrap();
                assert_eq!(v, Coords::from([(j + 1, 1)]));
            }
            assert!(m.beta_entries().is_empty());
            assert!(m.check_unstable().is_ok());
            if k <= 1 {
                assert!(m.check_adem(&SteenrodAlgebra::new(prime)).is_ok());
            }
        }
    }
}
