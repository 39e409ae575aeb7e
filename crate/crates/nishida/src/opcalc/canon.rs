//! Canonical forms: sums flattened and merged, Steenrod words reduced to the
//! admissible basis, multilinear operations distributed over sums, and
//! structurally zero terms dropped.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::expr::{Ambient, CohExpr, HomExpr, Term};
use super::Calculus;
use crate::error::{Error, Result};
use crate::fp::Prime;

pub(crate) type Terms<E> = BTreeMap<E, u32>;

pub(crate) fn add_to<E: Ord>(p: Prime, acc: &mut Terms<E>, e: E, c: u32) {
    if c == 0 {
        return;
    }
    match acc.entry(e) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            let s = p.add(*o.get(), c);
            if s == 0 {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

/// Cartesian product of expansions, multiplying coefficients.
fn product<E: Clone + Ord>(p: Prime, factors: &[Terms<E>]) -> Vec<(Vec<E>, u32)> {
    let mut acc: Vec<(Vec<E>, u32)> = vec![(Vec::new(), 1)];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for (prefix, c) in &acc {
            for (e, d) in f {
                let mut v = prefix.clone();
                v.push(e.clone());
                next.push((v, p.mul(*c, *d)));
            }
        }
        acc = next;
    }
    acc
}

fn coh_sum(terms: Terms<CohExpr>) -> CohExpr {
    CohExpr::Sum { terms: terms.into_iter().map(|(expr, coeff)| Term { coeff, expr }).collect() }
}

fn hom_sum(terms: Terms<HomExpr>) -> HomExpr {
    HomExpr::Sum { terms: terms.into_iter().map(|(expr, coeff)| Term { coeff, expr }).collect() }
}

fn flatten_star(args: Vec<CohExpr>) -> CohExpr {
    let mut out = Vec::new();
    for a in args {
        match a {
            CohExpr::Star { args } => out.extend(args),
            a => out.push(a),
        }
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        CohExpr::Star { args: out }
    }
}

fn flatten_product(args: Vec<HomExpr>) -> Option<HomExpr> {
    let mut out = Vec::new();
    for a in args {
        match a {
            HomExpr::Pontryagin { args } => out.extend(args),
            HomExpr::Unit => {}
            a => out.push(a),
        }
    }
    match out.len() {
        0 => Some(HomExpr::Unit),
        1 => out.pop(),
        _ => Some(HomExpr::Pontryagin { args: out }),
    }
}

impl Calculus<'_> {
    /// Canonical form of a cohomology expression, always returned as a sum
    /// (possibly empty) of sum-free terms in a fixed order.
    pub fn canonical(&self, e: &CohExpr) -> Result<CohExpr> {
        Ok(coh_sum(self.expand_coh(e)?))
    }

    /// Expands `Q^r(Σ c_i x_i)`. For `r > 0` this is termwise; for `r = 0`
    /// the star-product correction terms carry the coefficient
    /// `∏ c_i^{m_i} / ∏ m_i!` for each multiset `m` of size `p` with at
    /// least two distinct summands. Two summands give `1/((p-j)! j!)`.
    pub fn q_linearity_expand(&self, r: u32, terms: &[(u32, CohExpr)]) -> Result<CohExpr> {
        self.canonical(&CohExpr::q(r, CohExpr::sum(terms.iter().cloned())))
    }

    pub(crate) fn expand_coh(&self, e: &CohExpr) -> Result<Terms<CohExpr>> {
        let p = self.prime();
        let mut out = Terms::new();
        match e {
            CohExpr::Leaf { class, ops } => {
                if ops.is_empty() {
                    out.insert(e.clone(), 1);
                } else {
                    for (m, c) in self.alg.adem_reduce(ops).terms() {
                        add_to(p, &mut out, CohExpr::leaf_with(class.clone(), m.gens()), c.value());
                    }
                }
            }
            CohExpr::DualQ { r, arg } => {
                let inner = self.expand_coh(arg)?;
                let Some(first) = inner.keys().next() else { return Ok(out) };
                if !self.q_feasible(*r, self.coh_degree(first)?) {
                    return Ok(out);
                }
                out = self.expand_q(*r, inner);
            }
            CohExpr::DualBrowder { args } => {
                if args.len() == 1 {
                    return self.expand_coh(&args[0]);
                }
                if args.is_empty() {
                    return Err(Error::MalformedExpression("L with no arguments".into()));
                }
                if self.n == Ambient::Infinite {
                    return Ok(out);
                }
                let factors = args.iter().map(|a| self.expand_coh(a)).collect::<Result<Vec<_>>>()?;
                for (args, c) in product(p, &factors) {
                    add_to(p, &mut out, CohExpr::DualBrowder { args }, c);
                }
            }
            CohExpr::Star { args } => {
                if args.is_empty() {
                    return Err(Error::MalformedExpression("star product with no factors".into()));
                }
                let factors = args.iter().map(|a| self.expand_coh(a)).collect::<Result<Vec<_>>>()?;
                for (args, c) in product(p, &factors) {
                    add_to(p, &mut out, flatten_star(args), c);
                }
            }
            CohExpr::Sum { terms } => {
                for t in terms {
                    for (e, c) in self.expand_coh(&t.expr)? {
                        add_to(p, &mut out, e, p.mul(c, t.coeff));
                    }
                }
            }
        }
        Ok(out)
    }

    fn expand_q(&self, r: u32, inner: Terms<CohExpr>) -> Terms<CohExpr> {
        let p = self.prime();
        let mut out = Terms::new();
        let items: Vec<(CohExpr, u32)> = inner.into_iter().collect();
        if r > 0 {
            for (e, c) in items {
                add_to(p, &mut out, CohExpr::q(r, e), c);
            }
            return out;
        }
        let tables = self.alg.tables();
        let size = p.get() as usize;
        for mult in multisets(items.len(), size) {
            if let Some(i) = mult.iter().position(|&m| m == size) {
                // u^p = u in F_p
                add_to(p, &mut out, CohExpr::q(0, items[i].0.clone()), items[i].1);
                continue;
            }
            let mut coeff = 1u32;
            let mut args = Vec::with_capacity(size);
            for (i, &m) in mult.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                coeff = p.mul(coeff, p.pow(items[i].1, m as u64));
                coeff = p.mul(coeff, p.inv(tables.factorial(m as u32)).expect("m < p"));
                args.extend(std::iter::repeat_n(items[i].0.clone(), m));
            }
            add_to(p, &mut out, flatten_star(args), coeff);
        }
        out
    }

    /// Canonical form of a homology expression. `Q_r` is distributed over
    /// sums below the top operation only; the top operation is not additive.
    pub fn canonical_hom(&self, e: &HomExpr) -> Result<HomExpr> {
        Ok(hom_sum(self.expand_hom(e)?))
    }

    pub(crate) fn expand_hom(&self, e: &HomExpr) -> Result<Terms<HomExpr>> {
        let p = self.prime();
        let mut out = Terms::new();
        match e {
            HomExpr::Unit => {
                out.insert(HomExpr::Unit, 1);
            }
            HomExpr::Leaf { class, theta } => {
                if theta.is_empty() {
                    out.insert(e.clone(), 1);
                } else {
                    for (m, c) in self.alg.adem_reduce(theta).terms() {
                        add_to(p, &mut out, HomExpr::Leaf { class: class.clone(), theta: m.gens() }, c.value());
                    }
                }
            }
            HomExpr::Q { r, arg } => {
                let inner = self.expand_hom(arg)?;
                let Some(first) = inner.keys().next() else { return Ok(out) };
                if *first == HomExpr::Unit {
                    // Q_0(1) = 1 and Q_r(1) = 0 otherwise.
                    if *r == 0 {
                        out = inner;
                    }
                    return Ok(out);
                }
                if !self.hom_q_nonzero(*r as i64, self.hom_degree(first)?) {
                    return Ok(out);
                }
                if inner.len() > 1 && Some(*r as u64) == self.n.top_index(p) {
                    return Err(Error::Unsupported("the top operation is not additive".into()));
                }
                for (a, c) in inner {
                    add_to(p, &mut out, HomExpr::q(*r, a), c);
                }
            }
            HomExpr::Browder { left, right } => {
                if self.n == Ambient::Infinite {
                    return Ok(out);
                }
                let factors = [self.expand_hom(left)?, self.expand_hom(right)?];
                for (mut pair, c) in product(p, &factors) {
                    if pair.contains(&HomExpr::Unit) {
                        continue;
                    }
                    let b = pair.pop().unwrap();
                    let a = pair.pop().unwrap();
                    add_to(p, &mut out, HomExpr::browder(a, b), c);
                }
            }
            HomExpr::Pontryagin { args } => {
                if args.is_empty() {
                    return Err(Error::MalformedExpression("product with no factors".into()));
                }
                let factors = args.iter().map(|a| self.expand_hom(a)).collect::<Result<Vec<_>>>()?;
                for (args, c) in product(p, &factors) {
                    if let Some(e) = flatten_product(args) {
                        add_to(p, &mut out, e, c);
                    }
                }
            }
            HomExpr::Beta { arg } => {
                for (a, c) in self.expand_hom(arg)? {
                    match a {
                        HomExpr::Unit => {}
                        HomExpr::Leaf { class, mut theta } => {
                            theta.push(crate::steenrod::Gen::Beta);
                            for (m, d) in self.alg.adem_reduce(&theta).terms() {
                                add_to(
                                    p,
                                    &mut out,
                                    HomExpr::Leaf { class: class.clone(), theta: m.gens() },
                                    p.mul(c, d.value()),
                                );
                            }
                        }
                        a => add_to(p, &mut out, HomExpr::Beta { arg: Box::new(a) }, c),
                    }
                }
            }
            HomExpr::Sum { terms } => {
                for t in terms {
                    for (e, c) in self.expand_hom(&t.expr)? {
                        add_to(p, &mut out, e, p.mul(c, t.coeff));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// All multiplicity vectors of length `k` summing to `total`.
fn multisets(k: usize, total: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for m in (0..=left).rev() {
            cur.push(m);
            go(k, left - m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        go(k, total, &mut Vec::new(), &mut out);
    }
    out
}
