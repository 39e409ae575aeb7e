//! Degree bookkeeping for the E_1-page of the spectral sequence computing
//! `H*(Ω^n' Y)`: column blocks `N_0^u N_1^v N_2^w`, connectivity, gaps, the
//! first nontrivial differential on Dyer-Lashof classes, and a conservative
//! permanent-cycle filter.
//!
//! All arithmetic is exact `i64`; scenarios refuse parameters whose powers
//! would not fit comfortably.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::Prime;
pub use crate::interval::DegreeInterval;
use crate::opcalc::{coh_weight, q_feasible, Ambient, CohExpr, FormalClass, OpExpression, Side};
use crate::steenrod::{gens_degree, Gen};

/// Largest power `p^{k+4}` a scenario may involve.
const POWER_CAP: i64 = 1 << 40;
/// Largest absolute value of the degree parameters.
const PARAM_CAP: i64 = 1 << 30;

/// Parameters of the nonrealization argument: a module concentrated in
/// `[bottom, top]` with a class of degree `2·half_degree` whose top power is
/// nonzero, tensored with `Φ(phi_index, phi_index + 2)` and desuspended
/// `desuspension` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpectralScenario {
    pub p: Prime,
    #[serde(rename = "l")]
    pub bottom: i64,
    #[serde(rename = "m")]
    pub top: i64,
    #[serde(rename = "i")]
    pub half_degree: i64,
    #[serde(rename = "k")]
    pub phi_index: u32,
    #[serde(rename = "n")]
    pub desuspension: i64,
}

impl SpectralScenario {
    /// Checked constructor: enforces `0 ≤ ℓ ≤ 2i ≤ 2pi ≤ m` and `n ≥ 0`.
    pub fn new(
        p: Prime,
        bottom: i64,
        top: i64,
        half_degree: i64,
        phi_index: u32,
        desuspension: i64,
    ) -> Result<SpectralScenario> {
        let sc = SpectralScenario::unvalidated(p, bottom, top, half_degree, phi_index, desuspension)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Skips the degree chain; only the overflow guards apply.
    pub fn unvalidated(
        p: Prime,
        bottom: i64,
        top: i64,
        half_degree: i64,
        phi_index: u32,
        desuspension: i64,
    ) -> Result<SpectralScenario> {
        let sc = SpectralScenario { p, bottom, top, half_degree, phi_index, desuspension };
        sc.check_range()?;
        Ok(sc)
    }

    fn check_range(&self) -> Result<()> {
        let q = self.p.get() as i64;
        if q.checked_pow(self.phi_index + 4).is_none_or(|v| v > POWER_CAP) {
            return Err(Error::OutOfRange(format!("p^(k+4) overflows for p = {q}, k = {}", self.phi_index)));
        }
        for (name, v) in [("l", self.bottom), ("m", self.top), ("i", self.half_degree), ("n", self.desuspension)] {
            if v.abs() > PARAM_CAP {
                return Err(Error::OutOfRange(format!("{name} = {v} is too large")));
            }
        }
        Ok(())
    }

    /// The failing links of the chain `0 ≤ ℓ ≤ 2i ≤ 2pi ≤ m`, `n ≥ 0`.
    pub fn chain_violations(&self) -> Vec<String> {
        let q = self.p.get() as i64;
        let (l, m, i, n) = (self.bottom, self.top, self.half_degree, self.desuspension);
        let mut out = Vec::new();
        if l < 0 {
            out.push(format!("l = {l} < 0"));
        }
        if l > 2 * i {
            out.push(format!("l = {l} > 2i = {}", 2 * i));
        }
        if i < 0 {
            out.push(format!("2i = {} > 2pi = {}", 2 * i, 2 * q * i));
        }
        if 2 * q * i > m {
            out.push(format!("2pi = {} > m = {m}", 2 * q * i));
        }
        if n < 0 {
            out.push(format!("n = {n} < 0"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.check_range()?;
        let v = self.chain_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(v.join("; ")))
        }
    }

    /// `n' = n + 2i + 1`, the loop index after suspending `2i + 1` times.
    pub fn loop_index(&self) -> i64 {
        self.desuspension + 2 * self.half_degree + 1
    }

    /// `p^{k+j}`.
    pub fn phi_power(&self, j: u32) -> i64 {
        (self.p.get() as i64).pow(self.phi_index + j)
    }

    /// Degree window of `N_j`. The bottom of `N_0` is raised to `2i + 2p^k`
    /// by collapsing the skeleton below it.
    pub fn summand(&self, j: u32) -> DegreeInterval {
        let lo = if j == 0 { 2 * self.half_degree } else { self.bottom };
        DegreeInterval::new(lo + 2 * self.phi_power(j), self.top + 2 * self.phi_power(j))
    }

    /// `(p²-1)m + p(m-ℓ) + (p²-2)n + 1`, the right side of the realizability bound.
    pub fn bound_rhs(&self) -> i64 {
        let q = self.p.get() as i64;
        (q * q - 1) * self.top + q * (self.top - self.bottom) + (q * q - 2) * self.desuspension + 1
    }

    /// Slack in `2p^k > bound_rhs`; nonnegative exactly when the
    /// contradiction assumption holds.
    pub fn assumption_margin(&self) -> i64 {
        2 * self.phi_power(0) - self.bound_rhs() - 1
    }

    pub fn satisfies_assumption(&self) -> bool {
        self.assumption_margin() >= 0
    }
}

impl fmt::Display for SpectralScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} l={} m={} i={} k={} n={}",
            self.p, self.bottom, self.top, self.half_degree, self.phi_index, self.desuspension
        )
    }
}

/// Smallest `k` with `2p^k > (p²-1)m + p(m-ℓ) + (p²-2)n + 1`.
pub fn assumption_threshold(p: Prime, bottom: i64, top: i64, desuspension: i64) -> Result<u32> {
    let mut k = 0;
    loop {
        let sc = SpectralScenario::unvalidated(p, bottom, top, 0, k, desuspension)?;
        if sc.satisfies_assumption() {
            return Ok(k);
        }
        k += 1;
    }
}

fn weight(sc: &SpectralScenario, u: u32, v: u32, w: u32) -> i64 {
    let q = sc.p.get() as i64;
    u as i64 + v as i64 * q + w as i64 * q * q
}

/// Degrees of `N_0^u N_1^v N_2^w`: the bottom comes from plain products, the
/// top from iterated Browder operations. The empty block is `Empty`.
pub fn e1_column_interval(u: u32, v: u32, w: u32, sc: &SpectralScenario) -> DegreeInterval {
    let count = (u + v + w) as i64;
    if count == 0 {
        return DegreeInterval::Empty;
    }
    let pk = sc.phi_power(0);
    let wt = weight(sc, u, v, w);
    let lo = 2 * u as i64 * sc.half_degree + (v + w) as i64 * sc.bottom + 2 * wt * pk;
    let hi = count * sc.top + 2 * wt * pk + (count - 1) * (sc.loop_index() - 1);
    DegreeInterval::new(lo, hi)
}

/// The lower bound for a Dyer-Lashof operation applied to a Browder
/// operation, as printed: `2ui + (v+w)ℓ + (u+vp+wp²)p^k + p(n'-1)`.
pub fn sharpened_lower_bound(u: u32, v: u32, w: u32, sc: &SpectralScenario) -> i64 {
    let q = sc.p.get() as i64;
    2 * u as i64 * sc.half_degree
        + (v + w) as i64 * sc.bottom
        + weight(sc, u, v, w) * sc.phi_power(0)
        + q * (sc.loop_index() - 1)
}

/// The same bound derived from the block bottom: a Browder operation adds
/// `(s-1)(n'-1)` over the product of its inputs and a Dyer-Lashof operation
/// on it multiplies that by `p`, so the degree is at least the block bottom
/// plus `p(n'-1)`. Differs from [`sharpened_lower_bound`] by `(u+vp+wp²)p^k`.
pub fn bracket_power_lower_bound(u: u32, v: u32, w: u32, sc: &SpectralScenario) -> i64 {
    let q = sc.p.get() as i64;
    e1_column_interval(u, v, w, sc).lo().unwrap_or(0) + q * (sc.loop_index() - 1)
}

/// `D_{n', r+1}` of the collapsed spectrum is `(r+1)(2i+2p^k) - 1`-connected.
pub fn connectivity_bound(r: u32, sc: &SpectralScenario) -> i64 {
    (r as i64 + 1) * (2 * sc.half_degree + 2 * sc.phi_power(0)) - 1
}

/// `E_1^{-(r+1), *}` vanishes in cohomological degree `degree` when that
/// degree is at most the connectivity.
pub fn column_vanishes(r: u32, degree: i64, sc: &SpectralScenario) -> bool {
    degree <= connectivity_bound(r, sc)
}

/// One block `N_0^u N_1^v N_2^w` of column `-(u+v+w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub u: u32,
    pub v: u32,
    pub w: u32,
    pub interval: DegreeInterval,
}

impl Block {
    pub fn new(u: u32, v: u32, w: u32, sc: &SpectralScenario) -> Block {
        Block { u, v, w, interval: e1_column_interval(u, v, w, sc) }
    }

    pub fn column(&self) -> u32 {
        self.u + self.v + self.w
    }
}

/// All blocks in columns `-1` down to `-max_column`.
pub fn column_blocks(sc: &SpectralScenario, max_column: u32) -> Vec<Block> {
    let mut out = Vec::new();
    for c in 1..=max_column {
        for w in 0..=c {
            for v in 0..=c - w {
                out.push(Block::new(c - v - w, v, w, sc));
            }
        }
    }
    out
}

/// A maximal run of degrees not covered by any interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub interval: DegreeInterval,
    pub width: i64,
}

/// Sorted maximal gaps strictly between the covered degrees.
pub fn gap_check(intervals: &[DegreeInterval]) -> Vec<Gap> {
    let mut spans: Vec<(i64, i64)> = intervals.iter().filter_map(|iv| iv.bounds()).collect();
    spans.sort_unstable();
    let mut gaps = Vec::new();
    let mut reach: Option<i64> = None;
    for (lo, hi) in spans {
        if let Some(r) = reach {
            if lo > r + 1 {
                let g = DegreeInterval::new(r + 1, lo - 1);
                gaps.push(Gap { interval: g, width: g.width() });
            }
        }
        reach = Some(reach.map_or(hi, |r| r.max(hi)));
    }
    gaps
}

/// `upper.lo - lower.hi`: an operation raising degree by `d` can carry a
/// class of `lower` into `upper` only if `d ≥` this distance. `None` when
/// either side is empty.
pub fn distance(lower: DegreeInterval, upper: DegreeInterval) -> Option<i64> {
    Some(upper.lo()? - lower.hi()?)
}

/// The three regions of the first `p` columns and the ladder of blocks
/// `N_0^u N_1^{p-u}` (`u = p, ..., 1`) inside column `-p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VIntervals {
    pub v0: DegreeInterval,
    pub v1: DegreeInterval,
    pub v2: DegreeInterval,
    pub ladder: Vec<Block>,
}

/// Hulls of the block intervals making up `V_0`, `V_1`, `V_2`. Rejects
/// scenarios where the contradiction assumption fails, since the regions
/// may then overlap.
pub fn v_intervals(sc: &SpectralScenario) -> Result<VIntervals> {
    if !sc.satisfies_assumption() {
        return Err(Error::Hypothesis(format!("2p^k = {} does not exceed {}", 2 * sc.phi_power(0), sc.bound_rhs())));
    }
    let q = sc.p.get();
    let mut v0 = DegreeInterval::Empty;
    let mut v2 = DegreeInterval::Empty;
    for u in 0..=q {
        for v in 0..=q - u {
            if (u, v) != (0, 0) && (u, v) != (0, q) && (u, v) != (1, q - 1) {
                v0 = v0.hull(e1_column_interval(u, v, 0, sc));
            }
            for w in 1..=q - u - v {
                v2 = v2.hull(e1_column_interval(u, v, w, sc));
            }
        }
    }
    v2 = v2.hull(e1_column_interval(0, q, 0, sc));
    let v1 = e1_column_interval(1, q - 1, 0, sc);
    let ladder = (1..=q).rev().map(|u| Block::new(u, q - u, 0, sc)).collect();
    Ok(VIntervals { v0, v1, v2, ladder })
}

/// Which of the two differential formulas applies: `Q^{s(p-1)}` hits a
/// Bockstein, `Q^{s(p-1)-1}` a plain power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QForm {
    Even,
    Odd,
}

impl QForm {
    pub fn index(self, p: Prime, s: u32) -> Option<u32> {
        let base = s * (p.get() - 1);
        match self {
            QForm::Even => Some(base),
            QForm::Odd => base.checked_sub(1),
        }
    }
}

/// An unspecified unit `u^{k,s}` (even form) or `v^{k,s}` (odd form). Only
/// its existence is known, so it never takes a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitTag {
    pub form: QForm,
    pub class_degree: i64,
    pub s: u32,
}

impl UnitTag {
    pub fn value(&self) -> Result<u32> {
        Err(Error::Unsupported(format!("{self} is a nonzero scalar with no known value")))
    }
}

impl fmt::Display for UnitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.form {
            QForm::Even => 'u',
            QForm::Odd => 'v',
        };
        write!(f, "{letter}^{{{},{}}}", self.class_degree, self.s)
    }
}

/// `d_{p-1} Q^r(x) = unit · θ(x)` from column `-p` to column `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialTarget {
    pub page: u32,
    pub source: CohExpr,
    pub source_degree: i64,
    pub unit: UnitTag,
    pub target: CohExpr,
    pub target_degree: i64,
}

impl fmt::Display for DifferentialTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d_{} {} = {} · {}", self.page, self.source, self.unit, self.target)
    }
}

/// The `d_{p-1}` target of `Q^{s(p-1)}(x)` or `Q^{s(p-1)-1}(x)` for a class
/// `x` of the `-1` column. Requires `|x| + s` even and a feasible index.
pub fn d_pminus1_target(p: Prime, n: Ambient, s: u32, form: QForm, x: &FormalClass) -> Result<DifferentialTarget> {
    if x.side != Side::Cohomology || x.weight != 1 {
        return Err(Error::Hypothesis(format!("{x} is not a cohomology class of column -1")));
    }
    let k = x.degree;
    if k < 0 {
        return Err(Error::Hypothesis(format!("{x} has negative degree")));
    }
    if (k + s as i64) % 2 != 0 {
        return Err(Error::Hypothesis(format!("|x| + s = {} is odd", k + s as i64)));
    }
    let r = form.index(p, s).ok_or_else(|| Error::Hypothesis("Q^{-1} does not exist".into()))?;
    if !q_feasible(p, r, k, n) {
        return Err(Error::Hypothesis(format!("Q^{r} is zero on degree {k} for n = {n}")));
    }
    let power = Gen::P(((k + s as i64) / 2) as u32);
    let ops = match form {
        QForm::Even => vec![Gen::Beta, power],
        QForm::Odd => vec![power],
    };
    let source_degree = p.get() as i64 * k + r as i64;
    let target_degree = k + gens_degree(p, &ops) as i64;
    if target_degree != source_degree + 1 {
        return Err(Error::MalformedExpression(format!(
            "d_(p-1) from degree {source_degree} lands in degree {target_degree}"
        )));
    }
    Ok(DifferentialTarget {
        page: p.get() - 1,
        source: CohExpr::q(r, CohExpr::leaf(x.clone())),
        source_degree,
        unit: UnitTag { form, class_degree: k, s },
        target: CohExpr::leaf_with(x.clone(), ops),
        target_degree,
    })
}

/// Value of `d_page` on `Q^r(x)` for `x` in column `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DifferentialValue {
    Zero,
    Target(DifferentialTarget),
    /// Outside the cases with a known formula.
    Unknown,
}

/// `d_page Q^r(x)`: zero below page `p-1` and above it (the target column
/// would be nonnegative); on page `p-1` the formula of [`d_pminus1_target`]
/// when its parity condition holds.
pub fn differential_on_power(p: Prime, n: Ambient, page: u32, r: u32, x: &FormalClass) -> Result<DifferentialValue> {
    if page == 0 {
        return Err(Error::OutOfRange("pages start at 1".into()));
    }
    if page != p.get() - 1 || !q_feasible(p, r, x.degree, n) {
        return Ok(DifferentialValue::Zero);
    }
    let q = p.get() - 1;
    let (s, form) = if r.is_multiple_of(q) { (r / q, QForm::Even) } else { ((r + 1) / q, QForm::Odd) };
    if (x.degree + s as i64) % 2 != 0 {
        return Ok(DifferentialValue::Unknown);
    }
    Ok(DifferentialValue::Target(d_pminus1_target(p, n, s, form, x)?))
}

/// Hypotheses under which classes are known to survive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleContext {
    /// The spectral sequence is the one for a suspension `ΣX`.
    pub suspension: bool,
    /// Desuspension index of `H*(X)`, when known.
    pub desuspension_index: Option<i64>,
}

/// True only when a known result makes every summand of `e` a permanent
/// cycle: positive-degree classes of column `-1`; over a suspension,
/// products of Browder operations on such classes; and, when the
/// desuspension index is at least `n-1`, everything in the first `2p-1`
/// columns. Anything else is reported false (unknown).
pub fn permanent_cycle_filter(e: &OpExpression, ctx: &CycleContext) -> bool {
    let p = e.p;
    if let (true, Ambient::Finite(n), Some(d)) = (ctx.suspension, e.n, ctx.desuspension_index) {
        if d >= n as i64 - 1 {
            if let Ok(w) = coh_weight(p, &e.root) {
                if w < 2 * p.get() {
                    return true;
                }
            }
        }
    }
    fn survives(p: Prime, e: &CohExpr, suspension: bool) -> bool {
        match e {
            // d_r from column -1 lands in column r - 1 ≥ 0, which is zero
            // away from degree 0
            CohExpr::Leaf { class, ops } => class.weight == 1 && class.degree + gens_degree(p, ops) as i64 != -1,
            CohExpr::DualBrowder { args } => suspension && args.iter().all(|a| survives(p, a, suspension)),
            CohExpr::Star { args } => args.iter().all(|a| survives(p, a, suspension)),
            CohExpr::Sum { terms } => terms.iter().all(|t| survives(p, &t.expr, suspension)),
            CohExpr::DualQ { .. } => false,
        }
    }
    survives(p, &e.root, ctx.suspension)
}
