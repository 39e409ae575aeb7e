//! Nishida relations: the coefficient tables, the cohomological expansion
//! of `P^s Q^r(x)`, the homological expansion of `P_s Q_r(y)`, and the
//! dual Steenrod action on homology trees.

use serde::Serialize;

use super::expr::{CohExpr, FormalClass, HomExpr};
use super::Calculus;
use crate::error::{Error, Result};
use crate::fp::{CoeffTables, Prime};
use crate::steenrod::Gen;
use crate::unstable::{Action, Coords, GradedFpModule};

/// An ascending non-constant `p`-tuple with the residue of its isotropy
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsotropyTuple {
    pub n: Vec<u64>,
    pub e: u32,
}

/// Ascending `p`-tuples summing to `s` with at least one strict increase.
pub fn ascending_tuples(p: Prime, s: u64) -> Vec<IsotropyTuple> {
    fn go(len: usize, min: u64, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if len == 1 {
            if left >= min {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let mut v = min;
        while v * len as u64 <= left {
            cur.push(v);
            go(len - 1, v, left - v, cur, out);
            cur.pop();
            v += 1;
        }
    }
    let mut raw = Vec::new();
    go(p.get() as usize, 0, s, &mut Vec::new(), &mut raw);
    let tables = CoeffTables::new(p);
    raw.into_iter()
        .filter(|n| n.first() != n.last())
        .map(|n| {
            let e = tables.isotropy_order(&n).value();
            IsotropyTuple { n, e }
        })
        .collect()
}

/// All `k`-tuples of naturals summing to `s`.
pub fn compositions(k: usize, s: u64) -> Vec<Vec<u64>> {
    fn go(k: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            go(k, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        go(k, s, &mut Vec::new(), &mut out);
    }
    out
}

/// Coefficients of both Nishida relations at `(p, r, s, d)`. The `a`, `c`
/// and `a_hom` vectors are indexed by `i <= s/p`, the `b`, `d_ratio` and
/// `b_hom` vectors by `i <= (s-1)/p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NishidaCoefficients {
    pub p: u32,
    pub r: u32,
    pub s: u32,
    pub d: i64,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub c: Vec<u32>,
    pub d_ratio: Vec<u32>,
    pub delta_coh: u32,
    pub xi: u32,
    pub a_hom: Vec<u32>,
    pub b_hom: Vec<u32>,
    pub delta_hom: u32,
    pub tuples: Vec<IsotropyTuple>,
}

/// Named classes of a module, used to evaluate `P^i x` inside a
/// Nishida expansion and to read the results back as formal classes.
#[derive(Clone, Debug)]
pub struct ModuleContext {
    pub module: GradedFpModule,
    pub classes: Vec<(String, Coords)>,
}

impl ModuleContext {
    pub fn new(module: GradedFpModule, classes: Vec<(String, Coords)>) -> ModuleContext {
        ModuleContext { module, classes }
    }

    fn class(&self, name: &str) -> Result<&Coords> {
        self.classes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::MalformedExpression(format!("class {name} is not named in the module context")))
    }

    /// `θ·x` in the module.
    pub fn evaluate(&self, name: &str, word: &[Gen]) -> Result<Coords> {
        match self.module.apply_word(word, self.class(name)?) {
            Action::Value(c) => Ok(c),
            Action::OutOfRange => {
                Err(Error::OutOfRange(format!("{word:?} applied to {name} leaves the stored window")))
            }
        }
    }

    /// A vector as a multiple of a named class when possible, otherwise as
    /// a combination of basis leaves in column `weight`.
    pub fn express(&self, v: &Coords, weight: u32) -> CohExpr {
        let p = self.module.prime();
        let Some((&k, &vk)) = v.iter().next() else { return CohExpr::zero() };
        let basis = self.module.basis();
        for (name, c) in &self.classes {
            let Some(&ck) = c.get(&k) else { continue };
            if c.len() != v.len() {
                continue;
            }
            let lambda = p.mul(vk, p.inv(ck).expect("stored coordinates are nonzero"));
            if c.iter().all(|(j, &x)| v.get(j) == Some(&p.mul(lambda, x))) {
                let class = FormalClass::cohomology(name.clone(), basis[k].deg, weight);
                return CohExpr::sum([(lambda, CohExpr::leaf(class))]);
            }
        }
        CohExpr::sum(
            v.iter().map(|(&j, &x)| {
                (x, CohExpr::leaf(FormalClass::cohomology(basis[j].name.clone(), basis[j].deg, weight)))
            }),
        )
    }
}

/// A Nishida right-hand side in canonical form, with diagnostics.
#[derive(Clone, Debug)]
pub struct NishidaExpansion {
    pub expr: CohExpr,
    pub coefficients: NishidaCoefficients,
    pub notes: Vec<String>,
}

impl Calculus<'_> {
    pub fn nishida_coeffs(&self, r: u32, s: u32, d: i64) -> Result<NishidaCoefficients> {
        let p = self.prime();
        let t = self.alg.tables();
        let (pu, h) = (p.get() as i64, p.half() as i64);
        let (ri, si) = (r as i64, s as i64);
        let hf = t.half_factorial();
        let gamma = |q: i64, idx: i64| t.gamma(q.rem_euclid(2) as u64, idx as u64).value();
        let ratio = |num: u32, den: u32| -> Result<u32> { Ok(p.mul(num, p.inv(den)?)) };
        let g0 = gamma(d, ri);
        let (mut a, mut c, mut a_hom) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..=si / pu {
            a.push(t.binom_signed(ri / 2 + h * (d - 2 * i), si - pu * i));
            c.push(ratio(g0, gamma(d + 2 * (pu - 1) * i, ri + 2 * (si - pu * i) * (pu - 1)))?);
            a_hom.push(t.binom_signed(si - pu * si + ri / 2 + h * d, si - pu * i));
        }
        let (mut b, mut d_ratio, mut b_hom) = (Vec::new(), Vec::new(), Vec::new());
        if s > 0 {
            let sign_coh = p.sign((h * (d + 1) + 1).rem_euclid(2) as u64);
            let sign_hom = p.sign((h * d + 1).rem_euclid(2) as u64);
            for i in 0..=(si - 1) / pu {
                let bin = t.binom_signed(ri / 2 + h * (d - 2 * i) - 1, si - pu * i - 1);
                b.push(p.mul(p.mul(sign_coh, hf), bin));
                let idx = ri - pu + 2 * (si - pu * i) * (pu - 1);
                d_ratio.push(ratio(g0, gamma(d + 1 + 2 * (pu - 1) * i, idx))?);
                let bin = t.binom_signed(si - pu * si - 1 + (ri + 1) / 2 + h * d, si - pu * i - 1);
                b_hom.push(p.mul(p.mul(sign_hom, hf), bin));
            }
        }
        let tuples = ascending_tuples(p, s as u64);
        if tuples.iter().any(|t| t.e == 0) {
            return Err(Error::DivisionByZero(p.get()));
        }
        Ok(NishidaCoefficients {
            p: p.get(),
            r,
            s,
            d,
            a,
            b,
            c,
            d_ratio,
            delta_coh: u32::from(r.is_multiple_of(2)),
            xi: u32::from(r == 0),
            a_hom,
            b_hom,
            delta_hom: u32::from(r % 2 == 1),
            tuples,
        })
    }

    fn power_leaf(&self, x: &FormalClass, word: Vec<Gen>, ctx: Option<&ModuleContext>) -> Result<CohExpr> {
        let word: Vec<Gen> = word.into_iter().filter(|g| *g != Gen::P(0)).collect();
        match ctx {
            None => Ok(CohExpr::leaf_with(x.clone(), word)),
            Some(ctx) => Ok(ctx.express(&ctx.evaluate(&x.name, &word)?, x.weight)),
        }
    }

    /// Right-hand side of the cohomological Nishida relation for
    /// `P^s Q^r(x)`. With a module context the classes `P^i x`, `P^i βx`
    /// are evaluated in the module, so instability and gaps remove terms.
    pub fn nishida_expand_coh(
        &self,
        s: u32,
        r: u32,
        x: &FormalClass,
        ctx: Option<&ModuleContext>,
    ) -> Result<NishidaExpansion> {
        let p = self.prime();
        let d = x.degree;
        let coefficients = self.nishida_coeffs(r, s, d)?;
        let mut notes = Vec::new();
        if let Some(top) = self.n.top_index(p) {
            if r == 0 || r as u64 >= top {
                notes.push(format!("r = {r} lies outside 0 < r < (p-1)(n-1); expanded as in the r = 0 proofs"));
            }
        }
        if !self.q_feasible(r, d) {
            notes.push(format!("Q^{r} vanishes in degree {d}"));
            return Ok(NishidaExpansion { expr: CohExpr::zero(), coefficients, notes });
        }
        let q1 = p.get() - 1;
        let mut terms = Vec::new();
        for (i, (&a, &c)) in coefficients.a.iter().zip(&coefficients.c).enumerate() {
            let k = p.mul(a, c);
            if k != 0 {
                let idx = r + 2 * (s - p.get() * i as u32) * q1;
                terms.push((k, CohExpr::q(idx, self.power_leaf(x, vec![Gen::P(i as u32)], ctx)?)));
            }
        }
        if r.is_multiple_of(2) {
            for (i, (&b, &dr)) in coefficients.b.iter().zip(&coefficients.d_ratio).enumerate() {
                let k = p.mul(b, dr);
                if k != 0 {
                    let idx = r + 2 * (s - p.get() * i as u32) * q1 - p.get();
                    let leaf = self.power_leaf(x, vec![Gen::P(i as u32), Gen::Beta], ctx)?;
                    terms.push((k, CohExpr::q(idx, leaf)));
                }
            }
        }
        if r == 0 {
            for t in &coefficients.tuples {
                let args =
                    t.n.iter()
                        .map(|&ni| self.power_leaf(x, vec![Gen::P(ni as u32)], ctx))
                        .collect::<Result<Vec<_>>>()?;
                terms.push((p.inv(t.e)?, CohExpr::star(args)));
            }
        }
        let expr = self.canonical(&CohExpr::sum(terms))?;
        Ok(NishidaExpansion { expr, coefficients, notes })
    }

    /// Right-hand side of the homological Nishida relation for
    /// `P_s Q_r(y)`, below the top operation.
    pub fn nishida_expand_hom(&self, s: u32, r: u32, y: &FormalClass) -> Result<HomExpr> {
        self.hnis(s, r, &HomExpr::leaf(y.clone()))
    }

    fn hnis(&self, s: u32, r: u32, z: &HomExpr) -> Result<HomExpr> {
        let p = self.prime();
        if self.n.top_index(p).is_some_and(|top| r as u64 >= top) {
            return Err(Error::Unsupported(format!("P_s on the top operation Q_{r}")));
        }
        let co = self.nishida_coeffs(r, s, self.hom_degree(z)?)?;
        let (pu, q1, (ri, si)) = (p.get() as i64, p.get() as i64 - 1, (r as i64, s as i64));
        let mut terms = Vec::new();
        for (i, &a) in co.a_hom.iter().enumerate() {
            let idx = ri + 2 * (pu * i as i64 - si) * q1;
            if a != 0 && idx >= 0 {
                terms.push((a, HomExpr::q(idx as u32, self.apply_dual_power(i as u32, z)?)));
            }
        }
        if r % 2 == 1 {
            for (i, &b) in co.b_hom.iter().enumerate() {
                let idx = ri + pu + 2 * (pu * i as i64 - si) * q1;
                if b != 0 && idx >= 0 {
                    let inner = HomExpr::Beta { arg: Box::new(self.apply_dual_power(i as u32, z)?) };
                    terms.push((b, HomExpr::q(idx as u32, inner)));
                }
            }
        }
        self.canonical_hom(&HomExpr::sum(terms))
    }

    /// The dual Steenrod operation `P_s` on a homology expression: appended
    /// to leaves, Nishida below `Q_r`, Cartan on brackets and products.
    pub fn apply_dual_power(&self, s: u32, h: &HomExpr) -> Result<HomExpr> {
        let h = self.canonical_hom(h)?;
        if s == 0 {
            return Ok(h);
        }
        let mut terms = Vec::new();
        for (c, e) in h.summands() {
            let v = match e {
                HomExpr::Unit => HomExpr::zero(),
                HomExpr::Leaf { class, theta } => {
                    let mut theta = theta.clone();
                    theta.push(Gen::P(s));
                    HomExpr::Leaf { class: class.clone(), theta }
                }
                HomExpr::Q { r, arg } => self.hnis(s, *r, arg)?,
                HomExpr::Browder { left, right } => {
                    let mut parts = Vec::new();
                    for i in 0..=s {
                        let l = self.apply_dual_power(i, left)?;
                        let r = self.apply_dual_power(s - i, right)?;
                        parts.push((1, HomExpr::browder(l, r)));
                    }
                    HomExpr::sum(parts)
                }
                HomExpr::Pontryagin { args } => {
                    let mut parts = Vec::new();
                    for comp in compositions(args.len(), s as u64) {
                        let factors = args
                            .iter()
                            .zip(&comp)
                            .map(|(a, &k)| self.apply_dual_power(k as u32, a))
                            .collect::<Result<Vec<_>>>()?;
                        parts.push((1, HomExpr::product(factors)));
                    }
                    HomExpr::sum(parts)
                }
                HomExpr::Beta { .. } => {
                    return Err(Error::Unsupported(format!("P_{s} on the Bockstein of a composite {e}")))
                }
                HomExpr::Sum { .. } => unreachable!("canonical summands are sum-free"),
            };
            terms.push((c, v));
        }
        self.canonical_hom(&HomExpr::sum(terms))
    }
}
