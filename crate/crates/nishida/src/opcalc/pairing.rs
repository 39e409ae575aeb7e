//! The Kronecker pairing between cohomology and homology trees. Leaf
//! pairings stay symbolic: `<θ·x, y>` for an admissible `θ` is a variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::canon::{add_to, Terms};
use super::expr::{Ambient, CohExpr, HomExpr};
use super::Calculus;
use crate::error::{Error, Result};
use crate::fp::Prime;
use crate::steenrod::{format_word, Gen};

/// The unknown `<op·coh, hom>` with `op` an admissible word ("" for 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairingVar {
    pub coh: String,
    pub op: String,
    pub hom: String,
}

impl fmt::Display for PairingVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.op.is_empty() {
            write!(f, "<{}, {}>", self.coh, self.hom)
        } else {
            write!(f, "<{} {}, {}>", self.op, self.coh, self.hom)
        }
    }
}

/// Polynomial over F_p in pairing variables. Monomials are sorted variable
/// lists, repeated for powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    p: Prime,
    terms: Terms<Vec<PairingVar>>,
}

impl Poly {
    pub fn zero(p: Prime) -> Poly {
        Poly { p, terms: Terms::new() }
    }

    pub fn constant(p: Prime, c: u32) -> Poly {
        let mut terms = Terms::new();
        add_to(p, &mut terms, Vec::new(), c % p.get());
        Poly { p, terms }
    }

    pub fn var(p: Prime, v: PairingVar) -> Poly {
        Poly { p, terms: Terms::from([(vec![v], 1)]) }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<PairingVar>, u32> {
        &self.terms
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            add_to(self.p, &mut out.terms, m.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: u32) -> Poly {
        let mut out = Poly::zero(self.p);
        for (m, &d) in &self.terms {
            add_to(self.p, &mut out.terms, m.clone(), self.p.mul(c % self.p.get(), d));
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.p);
        for (a, &c) in &self.terms {
            for (b, &d) in &other.terms {
                let mut m: Vec<PairingVar> = a.iter().chain(b).cloned().collect();
                m.sort();
                add_to(self.p, &mut out.terms, m, self.p.mul(c, d));
            }
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<PairingVar> {
        self.terms.keys().flatten().cloned().collect()
    }

    /// Value under an assignment of residues to the variables.
    pub fn eval(&self, assign: impl Fn(&PairingVar) -> u32) -> u32 {
        let p = self.p;
        self.terms
            .iter()
            .map(|(m, &c)| m.iter().fold(c, |acc, v| p.mul(acc, assign(v) % p.get())))
            .fold(0, |a, b| p.add(a, b))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (m, c)) in self.terms.iter().enumerate() {
            if j > 0 {
                write!(f, " + ")?;
            }
            if *c != 1 || m.is_empty() {
                write!(f, "{c}")?;
            }
            for v in m {
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}

/// Result of a top-level pairing. `mismatch` is set when the two sides
/// differ in degree or column weight; the value is then zero for that
/// reason rather than by a vanishing rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingOutcome {
    pub value: Poly,
    pub mismatch: Option<String>,
}

impl Calculus<'_> {
    pub fn pair(&self, c: &CohExpr, h: &HomExpr) -> Result<PairingOutcome> {
        let p = self.prime();
        let c = self.canonical(c)?;
        let h = self.canonical_hom(h)?;
        if c.summands().is_empty() || h.summands().is_empty() {
            return Ok(PairingOutcome { value: Poly::zero(p), mismatch: None });
        }
        let (dc, dh) = (self.coh_degree(&c)?, self.hom_degree(&h)?);
        let (wc, wh) = (self.coh_weight(&c)?, self.hom_weight(&h)?);
        if dc != dh || wc != wh {
            let why = format!("degree {dc} vs {dh}, weight {wc} vs {wh}");
            return Ok(PairingOutcome { value: Poly::zero(p), mismatch: Some(why) });
        }
        Ok(PairingOutcome { value: self.pair_inner(&c, &h)?, mismatch: None })
    }

    /// Pairing of canonical-form expressions.
    pub(crate) fn pair_inner(&self, c: &CohExpr, h: &HomExpr) -> Result<Poly> {
        let p = self.prime();
        let zero = Poly::zero(p);
        if let CohExpr::Sum { terms } = c {
            let mut acc = zero;
            for t in terms {
                acc = acc.add(&self.pair_inner(&t.expr, h)?.scale(t.coeff));
            }
            return Ok(acc);
        }
        if let HomExpr::Sum { terms } = h {
            let mut acc = zero;
            for t in terms {
                acc = acc.add(&self.pair_inner(c, &t.expr)?.scale(t.coeff));
            }
            return Ok(acc);
        }
        match (c, h) {
            (CohExpr::DualBrowder { args }, _) if args.len() == 1 => return self.pair_inner(&args[0], h),
            (CohExpr::Star { args }, _) if args.len() == 1 => return self.pair_inner(&args[0], h),
            (_, HomExpr::Pontryagin { args }) if args.len() == 1 => return self.pair_inner(c, &args[0]),
            (CohExpr::DualBrowder { .. }, _) if self.n == Ambient::Infinite => return Ok(zero),
            (_, HomExpr::Browder { .. }) if self.n == Ambient::Infinite => return Ok(zero),
            _ => {}
        }
        if self.coh_degree(c)? != self.hom_degree(h)? || self.coh_weight(c)? != self.hom_weight(h)? {
            return Ok(zero);
        }
        let tables = self.alg.tables();
        match (c, h) {
            (CohExpr::Leaf { class: x, ops }, HomExpr::Leaf { class: y, theta }) => {
                // <φx, θ_* y> = <(θφ)x, y>
                let word: Vec<Gen> = theta.iter().chain(ops).copied().collect();
                let mut out = zero;
                for (m, k) in self.alg.adem_reduce(&word).terms() {
                    let v = PairingVar { coh: x.to_string(), op: format_word(&m.gens()), hom: y.to_string() };
                    out = out.add(&Poly::var(p, v).scale(k.value()));
                }
                Ok(out)
            }
            (_, HomExpr::Beta { .. }) => {
                Err(Error::Unsupported(format!("pairing with the Bockstein of a composite {h}")))
            }
            (CohExpr::DualQ { r, arg: w }, HomExpr::Q { r: s, arg: z }) => {
                let dw = self.coh_degree(w)?;
                if r != s || !self.q_feasible(*r, dw) || !self.hom_q_nonzero(*s as i64, self.hom_degree(z)?) {
                    return Ok(zero);
                }
                let g = tables.gamma(dw.rem_euclid(2) as u64, *r as u64).value();
                Ok(self.pair_inner(w, z)?.scale(g))
            }
            (CohExpr::DualQ { .. }, HomExpr::Browder { .. }) => Ok(zero),
            (CohExpr::DualQ { r, arg: w }, HomExpr::Pontryagin { args }) => {
                if *r != 0 || args.len() != p.get() as usize || !self.q_feasible(0, self.coh_degree(w)?) {
                    return Ok(zero);
                }
                let mut acc = Poly::constant(p, 1);
                for y in args {
                    acc = acc.mul(&self.pair_inner(w, y)?);
                }
                Ok(acc)
            }
            (CohExpr::DualBrowder { args }, HomExpr::Q { r: s, arg: y }) => {
                let dy = self.hom_degree(y)?;
                if args.len() != p.get() as usize
                    || Some(*s as u64) != self.n.top_index(p)
                    || !self.hom_q_nonzero(*s as i64, dy)
                {
                    return Ok(zero);
                }
                let Ambient::Finite(n) = self.n else { return Ok(zero) };
                let mut acc = Poly::constant(p, tables.lambda(dy.rem_euclid(2) as u64, n as u64)?.value());
                for x in args {
                    acc = acc.mul(&self.pair_inner(x, y)?);
                }
                Ok(acc)
            }
            (CohExpr::DualBrowder { args }, HomExpr::Browder { .. }) => {
                let mut acc = zero;
                for (coeff, ys) in self.l0_expand(h)? {
                    if ys.len() != args.len() {
                        return Err(Error::Unsupported(format!(
                            "L with {} inputs against a bracket of {}",
                            args.len(),
                            ys.len()
                        )));
                    }
                    // Koszul sign of <x_1 ⊗ ... ⊗ x_k, y_1 ⊗ ... ⊗ y_k>
                    let mut sign = 0i64;
                    for (i, x) in args.iter().enumerate() {
                        let dx = self.coh_degree(x)?;
                        for y in &ys[..i] {
                            sign += dx * self.hom_degree(y)?;
                        }
                    }
                    let mut term = Poly::constant(p, p.mul(coeff, p.sign(sign.rem_euclid(2) as u64)));
                    for (x, y) in args.iter().zip(&ys) {
                        term = term.mul(&self.pair_inner(x, y)?);
                        if term.is_zero() {
                            break;
                        }
                    }
                    acc = acc.add(&term);
                }
                Ok(acc)
            }
            (CohExpr::DualBrowder { .. }, HomExpr::Pontryagin { .. })
            | (CohExpr::Star { .. }, HomExpr::Q { .. })
            | (CohExpr::Star { .. }, HomExpr::Browder { .. }) => Ok(zero),
            (CohExpr::Star { args: xs }, HomExpr::Pontryagin { args: ys }) => {
                if xs.len() != ys.len() {
                    return Err(Error::Unsupported(format!(
                        "star of {} factors against a product of {}",
                        xs.len(),
                        ys.len()
                    )));
                }
                let k = xs.len();
                let mut table = Vec::with_capacity(k);
                for x in xs {
                    table.push(ys.iter().map(|y| self.pair_inner(x, y)).collect::<Result<Vec<_>>>()?);
                }
                let mut acc = zero;
                for perm in (0..k).permutations(k) {
                    let mut term = Poly::constant(p, 1);
                    for (i, &j) in perm.iter().enumerate() {
                        term = term.mul(&table[i][j]);
                        if term.is_zero() {
                            break;
                        }
                    }
                    acc = acc.add(&term);
                }
                Ok(acc)
            }
            _ => Err(Error::Unsupported(format!("no pairing rule for {c} against {h}"))),
        }
    }

    /// `L_0` expansion of an iterated bracket into signed ordered tensors:
    /// `L_0(A, B) = A ⊗ B - (-1)^{|A||B|} B ⊗ A`.
    fn l0_expand(&self, h: &HomExpr) -> Result<Vec<(u32, Vec<HomExpr>)>> {
        Ok(self.l0_rec(h)?.into_iter().map(|(c, v, _)| (c, v)).collect())
    }

    fn l0_rec(&self, h: &HomExpr) -> Result<Vec<(u32, Vec<HomExpr>, i64)>> {
        let p = self.prime();
        match h {
            HomExpr::Browder { left, right } => {
                let (a, b) = (self.l0_rec(left)?, self.l0_rec(right)?);
                let mut out = Vec::new();
                for (ca, wa, da) in &a {
                    for (cb, wb, db) in &b {
                        let c = p.mul(*ca, *cb);
                        out.push((c, wa.iter().chain(wb).cloned().collect(), da + db));
                        let s = p.neg(p.mul(c, p.sign((da * db).rem_euclid(2) as u64)));
                        out.push((s, wb.iter().chain(wa).cloned().collect(), da + db));
                    }
                }
                Ok(out)
            }
            other => Ok(vec![(1, vec![other.clone()], self.hom_degree(other)?)]),
        }
    }
}
