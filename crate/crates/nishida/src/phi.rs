//! `H*(K(F_p,1)) = E[s] ⊗ F_p[t]` with its explicit action, and the
//! subquotients Φ(k, ℓ) spanned by the classes t^{p^j}, k ≤ j ≤ ℓ.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::fp::{CoeffTables, Prime};
use crate::interval::DegreeInterval;
use crate::steenrod::Gen;
use crate::unstable::{BasisElement, Entry, GradedFpModule};

/// A monomial `t^n` or `t^n s` of H*(K(F_p,1)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BzpMonomial {
    pub t: u64,
    pub s: bool,
}

impl BzpMonomial {
    pub fn degree(self) -> u64 {
        2 * self.t + self.s as u64
    }

    pub fn name(self) -> String {
        match (self.t, self.s) {
            (0, false) => "1".into(),
            (0, true) => "s".into(),
            (t, false) => format!("t^{t}"),
            (t, true) => format!("t^{t} s"),
        }
    }
}

/// The cohomology of B(Z/p) below a degree cap, with the action given by
/// closed formulas rather than stored matrices.
#[derive(Clone, Debug)]
pub struct BZpCohomology {
    tables: CoeffTables,
    cap: u64,
}

impl BZpCohomology {
    pub fn new(p: Prime, cap: u64) -> BZpCohomology {
        BZpCohomology { tables: CoeffTables::new(p), cap }
    }

    pub fn prime(&self) -> Prime {
        self.tables.prime()
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// One generator applied to a monomial: `β(t^n s) = t^{n+1}`, `β t^n = 0`,
    /// `P^i(t^n) = C(n,i) t^{n+i(p-1)}`, and `P^i` ignores the factor `s`.
    /// `None` means the target lies above the cap.
    pub fn bzp_action(&self, g: Gen, x: BzpMonomial) -> Option<(u32, BzpMonomial)> {
        let p = self.prime();
        if x.degree() + g.degree(p) > self.cap {
            return None;
        }
        Some(match g {
            Gen::P(0) => (1, x),
            Gen::Beta if x.s => (1, BzpMonomial { t: x.t + 1, s: false }),
            Gen::Beta => (0, BzpMonomial { t: x.t, s: true }),
            Gen::P(i) => {
                let i = i as u64;
                (self.tables.binom(x.t, i), BzpMonomial { t: x.t + i * (p.get() as u64 - 1), s: x.s })
            }
        })
    }

    /// All monomials up to the cap, by degree.
    pub fn monomials(&self) -> Vec<BzpMonomial> {
        (0..=self.cap).map(|d| BzpMonomial { t: d / 2, s: d % 2 == 1 }).collect()
    }

    /// The truncation as a stored-matrix module (non-exact on `[0, cap]`).
    pub fn to_module(&self) -> Result<GradedFpModule> {
        let p = self.prime();
        let mons = self.monomials();
        let idx: BTreeMap<BzpMonomial, usize> = mons.iter().enumerate().map(|(j, m)| (*m, j)).collect();
        let basis = mons.iter().map(|m| BasisElement { name: m.name(), deg: m.degree() as i64 }).collect();
        let mut beta = Vec::new();
        let mut powers: BTreeMap<u32, Vec<Entry>> = BTreeMap::new();
        let q = 2 * (p.get() as u64 - 1);
        for (j, &m) in mons.iter().enumerate() {
            if let Some((c, y)) = self.bzp_action(Gen::Beta, m) {
                if c != 0 {
                    beta.push((idx[&y], j, c));
                }
            }
            let mut i = 1;
            while m.degree() + q * i <= self.cap {
                if let Some((c, y)) = self.bzp_action(Gen::P(i as u32), m) {
                    if c != 0 {
                        powers.entry(i as u32).or_default().push((idx[&y], j, c));
                    }
                }
                i += 1;
            }
        }
        GradedFpModule::new(p, basis, beta, powers, Some((0, self.cap as i64)), false)
    }

    /// Monomials reachable from `x` under β and the `P^{p^j}` inside the
    /// cap, i.e. a basis of the submodule generated by `x`. Every operation
    /// sends a monomial to a multiple of a monomial, and these generators
    /// generate the algebra, so their closure is the whole submodule.
    pub fn closure(&self, x: BzpMonomial) -> BTreeSet<BzpMonomial> {
        let q = 2 * (self.prime().get() as u64 - 1);
        let mut seen = BTreeSet::from([x]);
        let mut queue = VecDeque::from([x]);
        while let Some(m) = queue.pop_front() {
            let mut gens = vec![Gen::Beta];
            let mut i = 1;
            while m.degree() + q * i <= self.cap {
                gens.push(Gen::P(i as u32));
                i *= self.prime().get() as u64;
            }
            for g in gens {
                if let Some((c, y)) = self.bzp_action(g, m) {
                    if c != 0 && seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        seen
    }
}

fn phi_name(p: Prime, j: u32) -> String {
    format!("t^{}", (p.get() as u64).pow(j))
}

/// Φ(k, ℓ): basis t^{p^j} for k ≤ j ≤ ℓ, with `P^{p^j} t^{p^j} = t^{p^{j+1}}`
/// and every other operation zero.
pub fn make_phi_range(k: u32, l: u32, p: Prime) -> Result<GradedFpModule> {
    if k >= l {
        return Err(Error::OutOfRange(format!("need k < l, got k = {k}, l = {l}")));
    }
    let q = p.get() as u64;
    if q.checked_pow(l + 1).is_none_or(|v| v > i64::MAX as u64 / 4) {
        return Err(Error::OutOfRange(format!("p^{} overflows the degree range", l + 1)));
    }
    let basis: Vec<BasisElement> =
        (k..=l).map(|j| BasisElement { name: phi_name(p, j), deg: 2 * q.pow(j) as i64 }).collect();
    let mut powers = BTreeMap::new();
    for j in k..l {
        let r = (j - k) as usize;
        powers.insert(q.pow(j) as u32, vec![(r + 1, r, 1)]);
    }
    GradedFpModule::new(p, basis, vec![], powers, Some((2 * q.pow(k) as i64, 2 * q.pow(l) as i64)), true)
}

/// The same module built the long way: close t^{p^k} under the action in
/// H*(K(F_p,1)) up to degree 2p^{ℓ+1}, then divide out the closure of
/// t^{p^{ℓ+1}} and restrict to the window of Φ(k, ℓ).
pub fn closure_quotient_oracle(k: u32, l: u32, p: Prime) -> Result<GradedFpModule> {
    let q = p.get() as u64;
    let cap = 2 * q.pow(l + 1);
    let h = BZpCohomology::new(p, cap);
    let sub = h.closure(BzpMonomial { t: q.pow(k), s: false });
    let top = h.closure(BzpMonomial { t: q.pow(l + 1), s: false });
    let quotient: Vec<BzpMonomial> = sub.difference(&top).copied().collect();
    let idx: BTreeMap<BzpMonomial, usize> = quotient.iter().enumerate().map(|(j, m)| (*m, j)).collect();
    let basis = quotient.iter().map(|m| BasisElement { name: m.name(), deg: m.degree() as i64 }).collect();
    let mut beta = Vec::new();
    let mut powers: BTreeMap<u32, Vec<Entry>> = BTreeMap::new();
    let step = 2 * (q - 1);
    for (j, &m) in quotient.iter().enumerate() {
        if let Some((c, y)) = h.bzp_action(Gen::Beta, m) {
            if let (true, Some(&r)) = (c != 0, idx.get(&y)) {
                beta.push((r, j, c));
            }
        }
        let mut i = 1;
        while m.degree() + step * i <= cap {
            if let Some((c, y)) = h.bzp_action(Gen::P(i as u32), m) {
                if let (true, Some(&r)) = (c != 0, idx.get(&y)) {
                    powers.entry(i as u32).or_default().push((r, j, c));
                }
            }
            i += 1;
        }
    }
    GradedFpModule::new(p, basis, beta, powers, Some((2 * q.pow(k) as i64, 2 * q.pow(l) as i64)), true)
}

/// Degree windows of the three summands `M ⊗ t^{p^{k+j}}`, `j = 0, 1, 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhiSummands {
    pub n0: DegreeInterval,
    pub n1: DegreeInterval,
    pub n2: DegreeInterval,
}

/// `M ⊗ Φ(k, k+2)` with the summand windows `[ℓ + 2p^{k+j}, m + 2p^{k+j}]`,
/// where `[ℓ, m]` is the occupied degree range of `M`. `n0_lower` replaces
/// the lower end of the first window (the effect of collapsing a skeleton).
pub fn tensor_with_phi(m: &GradedFpModule, k: u32, n0_lower: Option<i64>) -> Result<(GradedFpModule, PhiSummands)> {
    let p = m.prime();
    let phi = make_phi_range(k, k + 2, p)?;
    let t = m.tensor(&phi)?;
    let (l, hi) = m.degree_range().ok_or_else(|| Error::InvalidModule("zero module".into()))?;
    let q = p.get() as i64;
    let window = |j: u32| DegreeInterval::new(l + 2 * q.pow(k + j), hi + 2 * q.pow(k + j));
    let mut n0 = window(0);
    if let (Some(lo), Some(h)) = (n0_lower, n0.hi()) {
        n0 = DegreeInterval::new(lo, h);
    }
    Ok((t, PhiSummands { n0, n1: window(1), n2: window(2) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn bzp_formulas() {
        let h = BZpCohomology::new(p3(), 40);
        assert_eq!(h.bzp_action(Gen::Beta, BzpMonomial { t: 2, s: true }), Some((1, BzpMonomial { t: 3, s: false })));
        assert_eq!(h.bzp_action(Gen::P(1), BzpMonomial { t: 2, s: false }), Some((2, BzpMonomial { t: 4, s: false })));
        let x = BzpMonomial { t: 5, s: true };
        assert_eq!(h.bzp_action(Gen::P(0), x), Some((1, x)));
        assert_eq!(h.bzp_action(Gen::P(10), x), None);
    }

    #[test]
    fn phi_one_three() {
        let m = make_phi_range(1, 3, p3()).unwrap();
        let degs: Vec<i64> = m.basis().iter().map(|b| b.deg).collect();
        assert_eq!(degs, [6, 18, 54]);
        assert_eq!(m.power_entries().keys().copied().collect::<Vec<_>>(), [3, 9]);
        assert!(m.check_unstable().is_ok());
        assert_eq!(make_phi_range(0, 1, p3()).unwrap().dim(), 2);
        assert_eq!(closure_quotient_oracle(0, 1, p3()).unwrap(), make_phi_range(0, 1, p3()).unwrap());
    }

    #[test]
    fn truncated_bzp_is_unstable() {
        let m = BZpCohomology::new(p3(), 30).to_module().unwrap();
        assert!(m.check_unstable().is_ok());
        let alg = crate::steenrod::SteenrodAlgebra::new(p3());
        assert!(m.check_adem(&alg).is_ok());
    }

    #[test]
    fn shifted_phi_zero_fails_instability() {
        let m = make_phi_range(0, 1, p3()).unwrap().shift(-1);
        let v = m.check_unstable().unwrap_err();
        assert_eq!((v.name.as_str(), v.i, v.eps), ("t^1", 1, 0));
    }

    #[test]
    fn summand_windows() {
        let x = GradedFpModule::new(
            p3(),
            vec![BasisElement { name: "x".into(), deg: 2 }],
            vec![],
            BTreeMap::new(),
            None,
            true,
        )
        .unwrap();
        let (_, w) = tensor_with_phi(&x, 1, None).unwrap();
        assert_eq!(
            (w.n0, w.n1, w.n2),
            (DegreeInterval::point(8), DegreeInterval::point(20), DegreeInterval::point(56))
        );
        let (t, _) = tensor_with_phi(&GradedFpModule::ground(p3()), 1, None).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.power_entries(), make_phi_range(1, 3, p3()).unwrap().power_entries());
    }
}
