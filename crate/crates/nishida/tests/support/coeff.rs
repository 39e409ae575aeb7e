//! Coefficient arithmetic against brute-force oracles.

use nishida::opcalc::ascending_tuples;
use nishida::{binom_mod_p, CoeffTables, Prime};

fn pascal(p: u32, rows: usize) -> Vec<Vec<u32>> {
    let mut t: Vec<Vec<u32>> = Vec::with_capacity(rows + 1);
    for n in 0..=rows {
        let mut row = vec![1u32; n + 1];
        for k in 1..n {
            row[k] = (t[n - 1][k - 1] + t[n - 1][k]) % p;
        }
        t.push(row);
    }
    t
}

pub fn lucas_matches_pascal_up_to_1000() {
    for p in [3u32, 5, 7] {
        let prime = Prime::new(p as u64).unwrap();
        let table = pascal(p, 1000);
        for (n, row) in table.iter().enumerate() {
            for (k, &want) in row.iter().enumerate() {
                assert_eq!(binom_mod_p(n as u64, k as u64, prime).value(), want, "C({n},{k}) mod {p}");
            }
        }
        assert_eq!(binom_mod_p(3, 7, prime).value(), 0);
    }
}

pub fn subalg_binomial_vanishes_by_digits() {
    for p in [3u64, 5, 7] {
        let prime = Prime::new(p).unwrap();
        for k in 1..=3u32 {
            let top = (p - 1) * (p - 1) * p.pow(k) - 1;
            assert_eq!(binom_mod_p(top, p.pow(k), prime).value(), 0, "p={p} k={k}");
            let a = prime.digits(top);
            assert_eq!(a.len(), k as usize + 2);
            for (j, &d) in a.iter().enumerate() {
                let want = match (j as u32).cmp(&k) {
                    std::cmp::Ordering::Less => p - 1,
                    std::cmp::Ordering::Equal => 0,
                    std::cmp::Ordering::Greater => p - 2,
                };
                assert_eq!(d as u64, want, "digit {j} of (p-1)^2 p^k - 1 at p={p} k={k}");
            }
            let b = prime.digits(p.pow(k));
            assert_ne!(b[k as usize], 0);
        }
    }
}

pub fn isotropy_orders_are_units_and_wilson_holds() {
    for p in [3u64, 5] {
        let prime = Prime::new(p).unwrap();
        let tables = CoeffTables::new(prime);
        for s in 0..=12u64 {
            for t in ascending_tuples(prime, s) {
                assert_ne!(t.e, 0, "p={p} tuple {:?}", t.n);
            }
        }
        for k in 0..3u32 {
            let mut n = vec![p.pow(k); p as usize];
            n[0] = 0;
            assert_eq!(tables.isotropy_order(&n).value(), prime.neg(1));
        }
    }
}
