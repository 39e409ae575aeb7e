//! Formal calculus of the operations on (co)homology of extended powers:
//! degrees and column weights, which dual Dyer-Lashof operations can be
//! nonzero, the Kronecker pairing between cohomology and homology trees,
//! linearity and Nishida expansions, suspension, the diagonal, and a
//! mechanised check of the Nishida relation by pairing against generators.
//!
//! Homology uses lower indices `Q_r` throughout; [`lower_index`] and
//! [`upper_index`] convert from and to the `Q^s` convention.

mod canon;
mod expr;
mod nishida;
mod pairing;
mod rewrite;
mod verify;

pub use expr::{Ambient, CohExpr, FormalClass, HomExpr, HomologyExpression, OpExpression, Side, Term};
pub use nishida::{
    ascending_tuples, compositions, IsotropyTuple, ModuleContext, NishidaCoefficients, NishidaExpansion,
};
pub use pairing::{PairingOutcome, PairingVar, Poly};
pub use rewrite::{lower_index, upper_index, Coproducts, Tensor, TensorPair};
pub use verify::{default_ambient, NishidaVerification, ShapeFailure};

use crate::error::{Error, Result};
use crate::fp::Prime;
use crate::steenrod::{gens_degree, SteenrodAlgebra};

/// Whether `Q^r` can be nonzero on a class of degree `d` for cube
/// dimension `n`: `r = 0` needs `d` even, `r = p-2` needs `d` odd, and
/// `r = t(p-1) - ε` with `0 < t <= n-1` needs `d + t` even.
pub fn q_feasible(p: Prime, r: u32, d: i64, n: Ambient) -> bool {
    let q = p.get() - 1;
    if r == 0 {
        return d.rem_euclid(2) == 0;
    }
    if r == p.get() - 2 {
        return d.rem_euclid(2) == 1;
    }
    let t = if r.is_multiple_of(q) {
        r / q
    } else if r % q == q - 1 {
        (r + 1) / q
    } else {
        return false;
    };
    if let Ambient::Finite(n) = n {
        if t > n - 1 {
            return false;
        }
    }
    (d + t as i64).rem_euclid(2) == 0
}

/// Whether `Q_r y` can be nonzero for `|y| = d`: `r >= 0`, `(p-1)d + r`
/// congruent to 0 or -1 mod 2(p-1), and `r` at most the top index.
pub fn hom_q_nonzero(p: Prime, r: i64, d: i64, n: Ambient) -> bool {
    if r < 0 {
        return false;
    }
    if let Some(top) = n.top_index(p) {
        if r as u64 > top {
            return false;
        }
    }
    let m = 2 * (p.get() as i64 - 1);
    let v = ((p.get() as i64 - 1) * d + r).rem_euclid(m);
    v == 0 || v == m - 1
}

fn common<T: PartialEq + Copy>(vals: impl IntoIterator<Item = Result<T>>, what: &str) -> Result<T> {
    let mut out = None;
    for v in vals {
        let v = v?;
        match out {
            None => out = Some(v),
            Some(w) if w != v => return Err(Error::MalformedExpression(format!("sum with mixed {what}"))),
            _ => {}
        }
    }
    out.ok_or_else(|| Error::MalformedExpression(format!("the zero expression has no {what}")))
}

/// Degree of a cohomology expression: `|Q^r w| = p|w| + r`,
/// `|L^{n-1}(x_1 ⊗ ... ⊗ x_k)| = (k-1)(n-1) + Σ|x_i|`, and the star product
/// adds degrees.
pub fn coh_degree(p: Prime, n: Ambient, e: &CohExpr) -> Result<i64> {
    match e {
        CohExpr::Leaf { class, ops } => {
            if class.side != Side::Cohomology {
                return Err(Error::MalformedExpression(format!("homology class {class} in a cohomology tree")));
            }
            Ok(class.degree + gens_degree(p, ops) as i64)
        }
        CohExpr::DualQ { r, arg } => Ok(p.get() as i64 * coh_degree(p, n, arg)? + *r as i64),
        CohExpr::DualBrowder { args } => {
            let total = args.iter().map(|a| coh_degree(p, n, a)).sum::<Result<i64>>()?;
            match (args.len(), n.browder_shift()) {
                (0, _) => Err(Error::MalformedExpression("L with no arguments".into())),
                (1, _) => Ok(total),
                (_, None) => Err(Error::Unsupported("L^inf of two or more classes is zero".into())),
                (k, Some(s)) => Ok((k as i64 - 1) * s + total),
            }
        }
        CohExpr::Star { args } => {
            if args.is_empty() {
                return Err(Error::MalformedExpression("star product with no factors".into()));
            }
            args.iter().map(|a| coh_degree(p, n, a)).sum()
        }
        CohExpr::Sum { terms } => common(terms.iter().map(|t| coh_degree(p, n, &t.expr)), "degrees"),
    }
}

/// Column weight: `p` times the argument under `Q^r`, the sum of the
/// arguments under `L` and `⋆`.
pub fn coh_weight(p: Prime, e: &CohExpr) -> Result<u32> {
    match e {
        CohExpr::Leaf { class, .. } => Ok(class.weight),
        CohExpr::DualQ { arg, .. } => Ok(p.get() * coh_weight(p, arg)?),
        CohExpr::DualBrowder { args } | CohExpr::Star { args } => {
            if args.is_empty() {
                return Err(Error::MalformedExpression("operation with no arguments".into()));
            }
            args.iter().map(|a| coh_weight(p, a)).sum()
        }
        CohExpr::Sum { terms } => common(terms.iter().map(|t| coh_weight(p, &t.expr)), "weights"),
    }
}

/// Degree of a homology expression: `|Q_r y| = p|y| + r`,
/// `|L_{n-1}(y, z)| = |y| + |z| + n - 1`.
pub fn hom_degree(p: Prime, n: Ambient, e: &HomExpr) -> Result<i64> {
    match e {
        HomExpr::Unit => Ok(0),
        HomExpr::Leaf { class, theta } => {
            if class.side != Side::Homology {
                return Err(Error::MalformedExpression(format!("cohomology class {class} in a homology tree")));
            }
            Ok(class.degree - gens_degree(p, theta) as i64)
        }
        HomExpr::Q { r, arg } => Ok(p.get() as i64 * hom_degree(p, n, arg)? + *r as i64),
        HomExpr::Browder { left, right } => {
            let s = n.browder_shift().ok_or_else(|| Error::Unsupported("L_inf is zero".into()))?;
            Ok(hom_degree(p, n, left)? + hom_degree(p, n, right)? + s)
        }
        HomExpr::Pontryagin { args } => {
            if args.is_empty() {
                return Err(Error::MalformedExpression("product with no factors".into()));
            }
            args.iter().map(|a| hom_degree(p, n, a)).sum()
        }
        HomExpr::Beta { arg } => Ok(hom_degree(p, n, arg)? - 1),
        HomExpr::Sum { terms } => common(terms.iter().map(|t| hom_degree(p, n, &t.expr)), "degrees"),
    }
}

pub fn hom_weight(p: Prime, e: &HomExpr) -> Result<u32> {
    match e {
        HomExpr::Unit => Ok(0),
        HomExpr::Leaf { class, .. } => Ok(class.weight),
        HomExpr::Q { arg, .. } => Ok(p.get() * hom_weight(p, arg)?),
        HomExpr::Browder { left, right } => Ok(hom_weight(p, left)? + hom_weight(p, right)?),
        HomExpr::Pontryagin { args } => {
            if args.is_empty() {
                return Err(Error::MalformedExpression("product with no factors".into()));
            }
            args.iter().map(|a| hom_weight(p, a)).sum()
        }
        HomExpr::Beta { arg } => hom_weight(p, arg),
        HomExpr::Sum { terms } => common(terms.iter().map(|t| hom_weight(p, &t.expr)), "weights"),
    }
}

pub fn op_degree(e: &OpExpression) -> Result<i64> {
    coh_degree(e.p, e.n, &e.root)
}

/// The algebra-dependent operations, for one prime and cube dimension.
#[derive(Clone, Copy)]
pub struct Calculus<'a> {
    alg: &'a SteenrodAlgebra,
    n: Ambient,
}

impl<'a> Calculus<'a> {
    pub fn new(alg: &'a SteenrodAlgebra, n: Ambient) -> Calculus<'a> {
        Calculus { alg, n }
    }

    pub fn prime(&self) -> Prime {
        self.alg.prime()
    }

    pub fn ambient(&self) -> Ambient {
        self.n
    }

    pub fn algebra(&self) -> &'a SteenrodAlgebra {
        self.alg
    }

    pub fn with_ambient(&self, n: Ambient) -> Calculus<'a> {
        Calculus { alg: self.alg, n }
    }

    pub fn coh_degree(&self, e: &CohExpr) -> Result<i64> {
        coh_degree(self.prime(), self.n, e)
    }

    pub fn hom_degree(&self, e: &HomExpr) -> Result<i64> {
        hom_degree(self.prime(), self.n, e)
    }

    pub fn coh_weight(&self, e: &CohExpr) -> Result<u32> {
        coh_weight(self.prime(), e)
    }

    pub fn hom_weight(&self, e: &HomExpr) -> Result<u32> {
        hom_weight(self.prime(), e)
    }

    pub fn q_feasible(&self, r: u32, d: i64) -> bool {
        q_feasible(self.prime(), r, d, self.n)
    }

    pub fn hom_q_nonzero(&self, r: i64, d: i64) -> bool {
        hom_q_nonzero(self.prime(), r, d, self.n)
    }
}
