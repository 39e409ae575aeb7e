//! Mechanised check of the cohomological Nishida relation: both sides of
//! `P^s Q^r(x) = RHS` are paired with every homology generator shape of the
//! right degree and weight, and the pairing polynomials are compared.

use serde::Serialize;

use super::expr::{Ambient, CohExpr, FormalClass, HomExpr};
use super::nishida::compositions;
use super::pairing::{PairingVar, Poly};
use super::Calculus;
use crate::error::Result;

/// The first generator on which the two sides disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeFailure {
    pub shape: String,
    pub index: i64,
    pub lhs: String,
    pub rhs: String,
    /// Leaf values on which the two sides evaluate differently, if one was
    /// found among the sampled assignments.
    pub witness: Option<Vec<(String, u32)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NishidaVerification {
    pub p: u32,
    pub s: u32,
    pub r: u32,
    pub d: i64,
    pub n: Ambient,
    pub shapes_checked: usize,
    pub nonzero_shapes: usize,
    pub pass: bool,
    pub failure: Option<ShapeFailure>,
    pub notes: Vec<String>,
}

/// Cube dimension large enough that every index in the relation lies
/// below the top operation.
pub fn default_ambient(p: u32, s: u32, r: u32) -> Ambient {
    Ambient::Finite((r + 2 * s * (p - 1)) / (p - 1) + 2)
}

/// Searches assignments of `0..3` to the variables for one separating the
/// two polynomials: exhaustively up to 8 variables, otherwise along
/// arithmetic patterns.
fn find_witness(lhs: &Poly, rhs: &Poly) -> Option<Vec<(String, u32)>> {
    let vars: Vec<PairingVar> = lhs.vars().union(&rhs.vars()).cloned().collect();
    let m = vars.len();
    let try_assign = |vals: &[u32]| {
        let look = |v: &PairingVar| vals[vars.binary_search(v).expect("collected above")];
        (lhs.eval(look) != rhs.eval(look))
            .then(|| vars.iter().map(|v| v.to_string()).zip(vals.iter().copied()).collect())
    };
    if m <= 8 {
        for code in 0..3usize.pow(m as u32) {
            let vals: Vec<u32> = (0..m).map(|i| (code / 3usize.pow(i as u32) % 3) as u32).collect();
            if let Some(w) = try_assign(&vals) {
                return Some(w);
            }
        }
        return None;
    }
    for a in 0..3u32 {
        for b in 0..3u32 {
            for c in 0..3u32 {
                let vals: Vec<u32> = (0..m as u32).map(|i| (a + b * i + c * i * i) % 3).collect();
                if let Some(w) = try_assign(&vals) {
                    return Some(w);
                }
            }
        }
    }
    None
}

impl Calculus<'_> {
    /// Pairs `P^s Q^r(x)` for `|x| = d` and its Nishida expansion against
    /// `Q_j(y)` below the top index, the brackets `L(y, z)` of total weight
    /// `p`, and the `p`-fold products of classes in degrees `>= d` (lower
    /// degrees pair to zero with every term on both sides).
    pub fn verify_nishida_by_pairing(&self, s: u32, r: u32, d: i64) -> Result<NishidaVerification> {
        let p = self.prime();
        let pu = p.get() as i64;
        let x = FormalClass::cohomology("x", d, 1);
        let expansion = self.nishida_expand_coh(s, r, &x, None)?;
        let lhs_class = CohExpr::q(r, CohExpr::leaf(x.clone()));
        let total = pu * d + r as i64 + 2 * s as i64 * (pu - 1);
        let mut report = NishidaVerification {
            p: p.get(),
            s,
            r,
            d,
            n: self.n,
            shapes_checked: 0,
            nonzero_shapes: 0,
            pass: true,
            failure: None,
            notes: expansion.notes.clone(),
        };
        let mut shapes: Vec<(String, i64, HomExpr)> = Vec::new();
        if let (Some(top), Some(shift)) = (self.n.top_index(p), self.n.browder_shift()) {
            for j in 0..top as i64 {
                if (total - j).rem_euclid(pu) == 0 {
                    let y = HomExpr::leaf(FormalClass::homology("y", (total - j) / pu, 1));
                    shapes.push(("Q_j(y)".into(), j, HomExpr::q(j as u32, y)));
                }
            }
            let rest = total - shift;
            for w in 1..pu {
                for a in 0..=rest.max(-1) {
                    let y = HomExpr::leaf(FormalClass::homology("y", a, w as u32));
                    let z = HomExpr::leaf(FormalClass::homology("z", rest - a, (pu - w) as u32));
                    shapes.push((format!("L(y, z), weights ({w}, {})", pu - w), a, HomExpr::browder(y, z)));
                }
            }
        }
        let spare = total - pu * d;
        if spare >= 0 {
            for comp in compositions(p.get() as usize, spare as u64) {
                if comp.windows(2).any(|w| w[0] > w[1]) {
                    continue;
                }
                let factors = comp
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| HomExpr::leaf(FormalClass::homology(format!("y{}", i + 1), d + e as i64, 1)))
                    .collect();
                let label = format!("product in degrees {:?}", comp.iter().map(|&e| d + e as i64).collect::<Vec<_>>());
                shapes.push((label, 0, HomExpr::product(factors)));
            }
        }
        for (shape, index, h) in shapes {
            report.shapes_checked += 1;
            let lhs = self.pair(&lhs_class, &self.apply_dual_power(s, &h)?)?.value;
            let rhs = self.pair(&expansion.expr, &h)?.value;
            if !lhs.is_zero() || !rhs.is_zero() {
                report.nonzero_shapes += 1;
            }
            if lhs != rhs {
                let witness = find_witness(&lhs, &rhs);
                report.pass = false;
                report.failure =
                    Some(ShapeFailure { shape, index, lhs: lhs.to_string(), rhs: rhs.to_string(), witness });
                break;
            }
        }
        Ok(report)
    }
}
