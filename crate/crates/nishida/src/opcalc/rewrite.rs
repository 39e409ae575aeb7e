//! Structural rewrites: suspension in cohomology and homology, the push
//! forward to tensor powers, the diagonal Cartan formulas, and the `ζ`
//! rewrite for the second top operation.

use std::collections::BTreeMap;
use std::fmt;

use super::canon::{add_to, Terms};
use super::expr::{CohExpr, FormalClass, HomExpr, HomologyExpression, OpExpression};
use super::Calculus;
use crate::error::{Error, Result};
use crate::fp::Prime;

/// `Q^s` (upper index) on a class of degree `d` as a lower index:
/// `Q^s = Q_{(p-1)(2s-d)}`.
pub fn lower_index(p: Prime, s: u32, d: i64) -> i64 {
    (p.get() as i64 - 1) * (2 * s as i64 - d)
}

/// Inverse of [`lower_index`] including Bocksteins: `(ε, s)` with
/// `Q_r = β^ε Q^s`, or `None` when `Q_r` is not of that form.
pub fn upper_index(p: Prime, r: i64, d: i64) -> Option<(u32, u32)> {
    let q = p.get() as i64 - 1;
    (0..=1).find_map(|eps| {
        let v = r + eps;
        if v.rem_euclid(q) != 0 || (v / q + d).rem_euclid(2) != 0 {
            return None;
        }
        let s = (v / q + d) / 2;
        (s >= 0).then_some((eps as u32, s as u32))
    })
}

/// An ordered tensor of homology classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tensor {
    pub factors: Vec<HomExpr>,
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.factors.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(" (x) "))
    }
}

/// `left ⊗ right`, the value type of the diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorPair {
    pub left: HomExpr,
    pub right: HomExpr,
}

impl fmt::Display for TensorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (x) {}", self.left, self.right)
    }
}

/// Assigned diagonals `ψ(y) = Σ c y' ⊗ y''`, keyed by class. Unlisted
/// leaves are primitive.
pub type Coproducts = BTreeMap<FormalClass, Vec<(u32, HomExpr, HomExpr)>>;

fn parity(d: i64) -> u64 {
    d.rem_euclid(2) as u64
}

impl Calculus<'_> {
    /// `ε^*`: `Q^r(σx) ↦ Q^{r+p-1}(x)` and `L^{n-1}(⊗σx_i) ↦ L^n(⊗x_i)`,
    /// lowering the degree by one and raising the cube dimension.
    pub fn suspend_coh(&self, e: &OpExpression) -> Result<OpExpression> {
        let up = self.with_ambient(e.n.raise());
        let root = up.canonical(&self.desuspend_coh(&e.root)?)?;
        Ok(OpExpression { p: e.p, n: e.n.raise(), root })
    }

    fn desuspend_coh(&self, e: &CohExpr) -> Result<CohExpr> {
        let q = self.prime().get() - 1;
        Ok(match e {
            CohExpr::Leaf { class, ops } => {
                let x = class
                    .desuspend()
                    .ok_or_else(|| Error::MalformedExpression(format!("{class} is not a suspension")))?;
                CohExpr::leaf_with(x, ops.clone())
            }
            CohExpr::DualQ { r, arg } => CohExpr::q(r + q, self.desuspend_coh(arg)?),
            CohExpr::DualBrowder { args } => {
                CohExpr::browder(args.iter().map(|a| self.desuspend_coh(a)).collect::<Result<_>>()?)
            }
            CohExpr::Star { .. } => return Err(Error::Unsupported(format!("suspension of a star product {e}"))),
            CohExpr::Sum { terms } => CohExpr::sum(
                terms.iter().map(|t| Ok((t.coeff, self.desuspend_coh(&t.expr)?))).collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// `ε_*(σ y)`: `σQ_r(y) ↦ ν(|y|) Q_{r-(p-1)}(σy)`, `σL_n(x, y) ↦
    /// L_{n-1}(σx, σy)`, products of positive-degree classes to zero.
    /// Lowers the cube dimension.
    pub fn suspend_hom(&self, e: &HomologyExpression) -> Result<HomologyExpression> {
        let n = e.n.lower()?;
        let down = self.with_ambient(n);
        let root = down.canonical_hom(&self.suspend_hom_expr(&e.root)?)?;
        Ok(HomologyExpression { p: e.p, n, root })
    }

    fn suspend_hom_expr(&self, e: &HomExpr) -> Result<HomExpr> {
        let p = self.prime();
        Ok(match e {
            HomExpr::Unit => return Err(Error::Unsupported("suspension of the unit".into())),
            HomExpr::Leaf { class, theta } => HomExpr::Leaf { class: class.suspend(), theta: theta.clone() },
            HomExpr::Q { r, arg } => {
                let shifted = *r as i64 - (p.get() as i64 - 1);
                if shifted < 0 {
                    return Ok(HomExpr::zero());
                }
                let nu = self.alg.tables().nu(parity(self.hom_degree(arg)?)).value();
                HomExpr::sum([(nu, HomExpr::q(shifted as u32, self.suspend_hom_expr(arg)?))])
            }
            HomExpr::Browder { left, right } => {
                HomExpr::browder(self.suspend_hom_expr(left)?, self.suspend_hom_expr(right)?)
            }
            HomExpr::Pontryagin { args } => {
                for a in args {
                    if self.hom_degree(a)? <= 0 {
                        return Err(Error::Unsupported(format!(
                            "suspension of a product with a factor {a} in degree <= 0"
                        )));
                    }
                }
                HomExpr::zero()
            }
            HomExpr::Beta { .. } => {
                return Err(Error::Unsupported(format!("suspension of the Bockstein of a composite {e}")))
            }
            HomExpr::Sum { terms } => HomExpr::sum(
                terms.iter().map(|t| Ok((t.coeff, self.suspend_hom_expr(&t.expr)?))).collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// `τ_*` to the `k`-th tensor power: Dyer-Lashof operations and
    /// brackets die, a product of `k` weight-one classes symmetrises with
    /// Koszul signs.
    pub fn tau_push(&self, e: &HomExpr, k: u32) -> Result<Vec<(u32, Tensor)>> {
        let p = self.prime();
        let e = self.canonical_hom(e)?;
        if !e.is_zero() && self.hom_weight(&e)? != k {
            return Err(Error::MalformedExpression(format!(
                "weight {} pushed to the {k}-th tensor power",
                self.hom_weight(&e)?
            )));
        }
        let mut out: Terms<Tensor> = Terms::new();
        for (c, t) in e.summands() {
            let args: Vec<HomExpr> = match t {
                HomExpr::Q { .. } | HomExpr::Browder { .. } => continue,
                HomExpr::Unit => Vec::new(),
                HomExpr::Leaf { .. } => vec![t.clone()],
                HomExpr::Pontryagin { args } => args.clone(),
                _ => return Err(Error::Unsupported(format!("push forward of {t}"))),
            };
            if args.iter().any(|a| !matches!(a, HomExpr::Leaf { class, .. } if class.weight == 1)) {
                return Err(Error::Unsupported(format!("push forward of a product with composite factors {t}")));
            }
            let degs = args.iter().map(|a| self.hom_degree(a)).collect::<Result<Vec<_>>>()?;
            let k = args.len();
            for perm in itertools::Itertools::permutations(0..k, k) {
                let mut sign = 0u64;
                for a in 0..k {
                    for b in a + 1..k {
                        if perm[a] > perm[b] {
                            sign += parity(degs[perm[a]] * degs[perm[b]]);
                        }
                    }
                }
                let factors = perm.iter().map(|&j| args[j].clone()).collect();
                add_to(p, &mut out, Tensor { factors }, p.mul(c, p.sign(sign % 2)));
            }
        }
        Ok(out.into_iter().map(|(t, c)| (c, t)).collect())
    }

    /// The homology diagonal by the Cartan formulas, in lower indices:
    /// `ψ Q_r(x) = Σ_{r'+r''=r} Q_{r'}(x') ⊗ Q_{r''}(x'')` over the
    /// Bockstein-free indices, the Hopf rule on products, and the bracket
    /// formula with signs `(-1)^{(n-1)|x''| + |x''||y'|}` on
    /// `L(x', y') ⊗ x''y''` and `(-1)^{(n-1)|y'| + |x''||y'|}` on
    /// `x'y' ⊗ L(x'', y'')`. These are the signs of moving the bracket
    /// class, sitting between the two inputs, across the tensor factors;
    /// with `(n-1)|x'|` in the first exponent the diagonal is not counital.
    pub fn diagonal_cartan(&self, e: &HomExpr, coproducts: &Coproducts) -> Result<Vec<(u32, TensorPair)>> {
        let terms = self.psi(&self.canonical_hom(e)?, coproducts)?;
        Ok(terms.into_iter().map(|(t, c)| (c, t)).collect())
    }

    fn pair_terms(&self, left: &HomExpr, right: &HomExpr, c: u32, out: &mut Terms<TensorPair>) -> Result<()> {
        let p = self.prime();
        let (l, r) = (self.canonical_hom(left)?, self.canonical_hom(right)?);
        for (a, x) in l.summands() {
            for (b, y) in r.summands() {
                let k = p.mul(c, p.mul(a, b));
                add_to(p, out, TensorPair { left: x.clone(), right: y.clone() }, k);
            }
        }
        Ok(())
    }

    fn psi(&self, e: &HomExpr, coproducts: &Coproducts) -> Result<Terms<TensorPair>> {
        let p = self.prime();
        let mut out = Terms::new();
        for (c, t) in e.summands() {
            match t {
                HomExpr::Unit => add_to(p, &mut out, TensorPair { left: HomExpr::Unit, right: HomExpr::Unit }, c),
                HomExpr::Leaf { class, theta } => match coproducts.get(class) {
                    None => {
                        add_to(p, &mut out, TensorPair { left: t.clone(), right: HomExpr::Unit }, c);
                        add_to(p, &mut out, TensorPair { left: HomExpr::Unit, right: t.clone() }, c);
                    }
                    Some(_) if !theta.is_empty() => {
                        return Err(Error::Unsupported(format!("diagonal of {t} with an assigned coproduct")))
                    }
                    Some(list) => {
                        for (d, l, r) in list {
                            self.pair_terms(l, r, p.mul(c, *d), &mut out)?;
                        }
                    }
                },
                HomExpr::Q { r, arg } => {
                    let d = self.hom_degree(arg)?;
                    if self.n.top_index(p) == Some(*r as u64) {
                        return Err(Error::Unsupported("diagonal of the top operation".into()));
                    }
                    if upper_index(p, *r as i64, d).is_some_and(|(eps, _)| eps == 1) {
                        return Err(Error::Unsupported(format!("diagonal of the Bockstein form Q_{r}")));
                    }
                    let inner = self.psi(&self.canonical_hom(arg)?, coproducts)?;
                    for (pair, k) in inner {
                        let (dl, dr) = (self.hom_degree(&pair.left)?, self.hom_degree(&pair.right)?);
                        for r1 in 0..=*r as i64 {
                            let r2 = *r as i64 - r1;
                            if !matches!(upper_index(p, r1, dl), Some((0, _)))
                                || !matches!(upper_index(p, r2, dr), Some((0, _)))
                            {
                                continue;
                            }
                            let l = HomExpr::q(r1 as u32, pair.left.clone());
                            let rr = HomExpr::q(r2 as u32, pair.right.clone());
                            self.pair_terms(&l, &rr, p.mul(c, k), &mut out)?;
                        }
                    }
                }
                HomExpr::Browder { left, right } => {
                    let shift = self.n.browder_shift().ok_or_else(|| Error::Unsupported("L_inf".into()))?;
                    let (px, py) = (self.psi(left, coproducts)?, self.psi(right, coproducts)?);
                    for (x, a) in &px {
                        for (y, b) in &py {
                            let x2 = self.hom_degree(&x.right)?;
                            let y1 = self.hom_degree(&y.left)?;
                            let k = p.mul(c, p.mul(*a, *b));
                            let s1 = parity(shift * x2 + x2 * y1);
                            let l = HomExpr::browder(x.left.clone(), y.left.clone());
                            let r = HomExpr::product(vec![x.right.clone(), y.right.clone()]);
                            self.pair_terms(&l, &r, p.mul(k, p.sign(s1)), &mut out)?;
                            let s2 = parity(shift * y1 + x2 * y1);
                            let l = HomExpr::product(vec![x.left.clone(), y.left.clone()]);
                            let r = HomExpr::browder(x.right.clone(), y.right.clone());
                            self.pair_terms(&l, &r, p.mul(k, p.sign(s2)), &mut out)?;
                        }
                    }
                }
                HomExpr::Pontryagin { args } => {
                    let mut acc: Terms<TensorPair> =
                        Terms::from([(TensorPair { left: HomExpr::Unit, right: HomExpr::Unit }, c)]);
                    for a in args {
                        let pa = self.psi(&self.canonical_hom(a)?, coproducts)?;
                        let mut next = Terms::new();
                        for (u, k1) in &acc {
                            for (v, k2) in &pa {
                                let sign = parity(self.hom_degree(&u.right)? * self.hom_degree(&v.left)?);
                                let l = HomExpr::product(vec![u.left.clone(), v.left.clone()]);
                                let r = HomExpr::product(vec![u.right.clone(), v.right.clone()]);
                                self.pair_terms(&l, &r, p.mul(p.mul(*k1, *k2), p.sign(sign)), &mut next)?;
                            }
                        }
                        acc = next;
                    }
                    for (t, k) in acc {
                        add_to(p, &mut out, t, k);
                    }
                }
                HomExpr::Beta { arg } => {
                    for (pair, k) in self.psi(&self.canonical_hom(arg)?, coproducts)? {
                        let sign = parity(self.hom_degree(&pair.left)?);
                        let bl = HomExpr::Beta { arg: Box::new(pair.left.clone()) };
                        self.pair_terms(&bl, &pair.right, p.mul(c, k), &mut out)?;
                        let br = HomExpr::Beta { arg: Box::new(pair.right.clone()) };
                        self.pair_terms(&pair.left, &br, p.mul(p.mul(c, k), p.sign(sign)), &mut out)?;
                    }
                }
                HomExpr::Sum { .. } => unreachable!("canonical summands are sum-free"),
            }
        }
        Ok(out)
    }

    /// `ζ(x) = βξ(x) - ad^{p-1}(x)(βx)`.
    pub fn zeta(&self, x: &HomExpr) -> Result<HomExpr> {
        let p = self.prime();
        let top = self.n.top_index(p).ok_or_else(|| Error::Unsupported("ζ needs a finite cube dimension".into()))?;
        let xi = HomExpr::Beta { arg: Box::new(HomExpr::q(top as u32, x.clone())) };
        let mut ad = HomExpr::Beta { arg: Box::new(x.clone()) };
        for _ in 1..p.get() {
            ad = HomExpr::browder(x.clone(), ad);
        }
        self.canonical_hom(&HomExpr::sum([(1, xi), (p.neg(1), ad)]))
    }

    /// Replaces every `Q_{top-1}` in `e` by [`Calculus::zeta`]. Never applied
    /// implicitly.
    pub fn zeta_rewrite(&self, e: &HomExpr) -> Result<HomExpr> {
        let p = self.prime();
        let Some(top) = self.n.top_index(p) else { return self.canonical_hom(e) };
        let walk = |a: &HomExpr| self.zeta_rewrite(a);
        let out = match e {
            HomExpr::Unit | HomExpr::Leaf { .. } => e.clone(),
            HomExpr::Q { r, arg } if *r as u64 + 1 == top => self.zeta(&walk(arg)?)?,
            HomExpr::Q { r, arg } => HomExpr::q(*r, walk(arg)?),
            HomExpr::Browder { left, right } => HomExpr::browder(walk(left)?, walk(right)?),
            HomExpr::Pontryagin { args } => HomExpr::product(args.iter().map(walk).collect::<Result<_>>()?),
            HomExpr::Beta { arg } => HomExpr::Beta { arg: Box::new(walk(arg)?) },
            HomExpr::Sum { terms } => {
                HomExpr::sum(terms.iter().map(|t| Ok((t.coeff, walk(&t.expr)?))).collect::<Result<Vec<_>>>()?)
            }
        };
        self.canonical_hom(&out)
    }
}
