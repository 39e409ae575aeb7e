//! Adem reduction against the action on `H*(BZ/p)` and its tensor square,
//! computed here from the Cartan formula with an independent Pascal table.

use std::collections::BTreeMap;

use nishida::steenrod::{basis_in_degree, gens_degree, AdmissibleMonomial, Gen, SteenrodAlgebra, SteenrodElement};
use nishida::Prime;

/// `s^ε t^n`.
type Mono = (bool, u64);
type Elem = BTreeMap<(Mono, Mono), u32>;

struct Oracle {
    p: u32,
    binom: Vec<Vec<u32>>,
}

impl Oracle {
    fn new(p: u32, rows: usize) -> Oracle {
        let mut binom: Vec<Vec<u32>> = Vec::new();
        for n in 0..=rows {
            let mut row = vec![1u32; n + 1];
            for k in 1..n {
                row[k] = (binom[n - 1][k - 1] + binom[n - 1][k]) % p;
            }
            binom.push(row);
        }
        Oracle { p, binom }
    }

    fn c(&self, n: u64, k: u64) -> u32 {
        if k > n {
            0
        } else {
            self.binom[n as usize][k as usize]
        }
    }

    fn deg(m: Mono) -> u64 {
        m.0 as u64 + 2 * m.1
    }

    fn on_mono(&self, g: Gen, m: Mono) -> Option<(u32, Mono)> {
        match g {
            Gen::Beta => m.0.then_some((1, (false, m.1 + 1))),
            Gen::P(i) => {
                let c = self.c(m.1, i as u64);
                (c != 0).then_some((c, (m.0, m.1 + i as u64 * (self.p as u64 - 1))))
            }
        }
    }

    fn add(&self, e: &mut Elem, key: (Mono, Mono), c: u32) {
        let v = e.entry(key).or_insert(0);
        *v = (*v + c) % self.p;
        if *v == 0 {
            e.remove(&key);
        }
    }

    fn on_elem(&self, g: Gen, x: &Elem) -> Elem {
        let mut out = Elem::new();
        for (&(u, v), &c) in x {
            match g {
                Gen::Beta => {
                    if let Some((a, bu)) = self.on_mono(Gen::Beta, u) {
                        self.add(&mut out, (bu, v), c * a % self.p);
                    }
                    if let Some((a, bv)) = self.on_mono(Gen::Beta, v) {
                        let sign = if Self::deg(u) % 2 == 1 { self.p - 1 } else { 1 };
                        self.add(&mut out, (u, bv), c * a % self.p * sign % self.p);
                    }
                }
                Gen::P(i) => {
                    for j in 0..=i {
                        if let (Some((a, pu)), Some((b, pv))) =
                            (self.on_mono(Gen::P(j), u), self.on_mono(Gen::P(i - j), v))
                        {
                            self.add(&mut out, (pu, pv), c * a % self.p * b % self.p);
                        }
                    }
                }
            }
        }
        out
    }

    fn on_word(&self, word: &[Gen], x: &Elem) -> Elem {
        word.iter().rev().fold(x.clone(), |acc, &g| self.on_elem(g, &acc))
    }

    fn on_element(&self, e: &SteenrodElement, x: &Elem) -> Elem {
        let mut out = Elem::new();
        for (m, c) in e.terms() {
            for (k, v) in self.on_word(&m.gens(), x) {
                self.add(&mut out, k, v * c.value() % self.p);
            }
        }
        out
    }
}

fn words(p: Prime, max_len: usize, max_deg: u64) -> Vec<Vec<Gen>> {
    let q = 2 * (p.get() as u64 - 1);
    let mut gens = vec![Gen::Beta];
    gens.extend((1..=max_deg / q).map(|i| Gen::P(i as u32)));
    let mut out: Vec<Vec<Gen>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &g in &gens {
                let mut w2: Vec<Gen> = w.clone();
                w2.push(g);
                if gens_degree(p, &w2) <= max_deg {
                    next.push(w2);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Returns the number of words checked.
pub fn adem_agrees_with_the_action_oracle() -> usize {
    let p = Prime::new(3).unwrap();
    let alg = SteenrodAlgebra::new(p);
    let oracle = Oracle::new(3, 80);
    let unit: Mono = (false, 0);
    let mut tests: Vec<Elem> = Vec::new();
    for eps in [false, true] {
        for n in 0..=20u64 {
            tests.push(Elem::from([(((eps, n), unit), 1)]));
        }
    }
    for e1 in [false, true] {
        for e2 in [false, true] {
            for a in 0..=4u64 {
                for b in 0..=4u64 {
                    tests.push(Elem::from([(((e1, a), (e2, b)), 1)]));
                }
            }
        }
    }
    let all = words(p, 3, 40);
    assert!(all.len() > 200);
    for w in &all {
        let red = alg.adem_reduce(w);
        for x in &tests {
            assert_eq!(oracle.on_word(w, x), oracle.on_element(&red, x), "word {w:?} on {x:?} reduced to {red}");
        }
    }
    all.len()
}

pub fn products_are_associative_and_match_concatenation() {
    let p = Prime::new(3).unwrap();
    let alg = SteenrodAlgebra::new(p);
    let all = words(p, 3, 40);
    for u in all.iter().filter(|w| w.len() <= 2) {
        for v in all.iter().filter(|w| w.len() <= 1) {
            if gens_degree(p, u) + gens_degree(p, v) > 40 {
                continue;
            }
            let joined: Vec<Gen> = u.iter().chain(v).copied().collect();
            assert_eq!(alg.mul(&alg.adem_reduce(u), &alg.adem_reduce(v)), alg.adem_reduce(&joined));
        }
    }
    let basis: Vec<AdmissibleMonomial> = (0..=40).flat_map(|d| basis_in_degree(d, p, 40).unwrap()).collect();
    let el = |m: &AdmissibleMonomial| SteenrodElement::monomial(m);
    for a in &basis {
        for b in basis.iter().filter(|b| a.degree() + b.degree() <= 40) {
            let ab = alg.mul(&el(a), &el(b));
            for c in basis.iter().filter(|c| a.degree() + b.degree() + c.degree() <= 40) {
                let left = alg.mul(&ab, &el(c));
                let right = alg.mul(&el(a), &alg.mul(&el(b), &el(c)));
                assert_eq!(left, right, "({a})({b})({c})");
            }
        }
    }
}
