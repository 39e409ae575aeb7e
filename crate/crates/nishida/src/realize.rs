//! Nonrealization checkers: the closed-form bounds, replays of the two
//! cup-power arguments on a concrete module, and a step-by-step certificate
//! for the loop-space bound.
//!
//! A green certificate says that the contradiction argument is arithmetically
//! sound at the given parameters. It says nothing about spaces beyond that.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fp::Prime;
use crate::interval::DegreeInterval;
use crate::opcalc::{Ambient, Calculus, CohExpr, FormalClass, ModuleContext, OpExpression};
use crate::phi::make_phi_range;
use crate::ssq::{
    bracket_power_lower_bound, column_blocks, connectivity_bound, distance, permanent_cycle_filter,
    sharpened_lower_bound, v_intervals, CycleContext, SpectralScenario,
};
use crate::steenrod::{Gen, SteenrodAlgebra};
use crate::unstable::{Action, BasisElement, Coords, GradedFpModule, Parity};

/// Outcome of a closed-form bound `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub pass: bool,
    pub lhs: i64,
    pub rhs: i64,
    /// `rhs - lhs`; negative exactly when the bound fails.
    pub margin: i64,
}

impl BoundCheck {
    fn le(lhs: i64, rhs: i64) -> BoundCheck {
        BoundCheck { pass: lhs <= rhs, lhs, rhs, margin: rhs - lhs }
    }
}

fn pow(p: Prime, e: u32) -> Result<i64> {
    (p.get() as i64)
        .checked_pow(e)
        .filter(|v| *v < 1 << 40)
        .ok_or_else(|| Error::OutOfRange(format!("p^{e} is too large")))
}

/// `2p^k ≤ (p²-1)m + p(m-ℓ)`. Failure means no space realizes a module in
/// `[ℓ, m]` tensored with `Φ(k, ∞)`.
pub fn thm_main_bound(p: Prime, k: u32, bottom: i64, top: i64) -> Result<BoundCheck> {
    if bottom < 0 || bottom > top {
        return Err(Error::Hypothesis(format!("need 0 <= l <= m, got l = {bottom}, m = {top}")));
    }
    let q = p.get() as i64;
    // the left side saturates: it only has to exceed the right side
    let lhs = q.checked_pow(k).and_then(|v| v.checked_mul(2)).unwrap_or(i64::MAX);
    Ok(BoundCheck::le(lhs, (q * q - 1) * top + q * (top - bottom)))
}

/// Bound of the single-gap argument: `2(p-2)p^{k+1} ≤ pm + m - pℓ`.
pub fn neqn_bound(p: Prime, k: u32, bottom: i64, top: i64) -> Result<BoundCheck> {
    let q = p.get() as i64;
    Ok(BoundCheck::le(2 * (q - 2) * pow(p, k + 1)?, q * top + top - q * bottom))
}

/// Bound for unstable algebras: `2p^k ≤ m`.
pub fn unstable_algebra_bound(p: Prime, k: u32, top: i64) -> Result<BoundCheck> {
    Ok(BoundCheck::le(2 * pow(p, k)?, top))
}

/// A concrete unstable module with a named class `x` of degree `2i` whose
/// top power `P^i x` is nonzero.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub module: GradedFpModule,
    pub class: String,
}

impl Fixture {
    /// `x` in degree `2i` and `y = P^i x` in degree `2pi`; every other
    /// operation is zero. For `i = 0` the module is `x` alone.
    pub fn minimal(p: Prime, half_degree: i64) -> Result<Fixture> {
        if !(0..=1 << 20).contains(&half_degree) {
            return Err(Error::OutOfRange(format!("half degree {half_degree}")));
        }
        let x = BasisElement { name: "x".into(), deg: 2 * half_degree };
        let module = if half_degree == 0 {
            GradedFpModule::new(p, vec![x], vec![], BTreeMap::new(), None, true)?
        } else {
            let y = BasisElement { name: "y".into(), deg: 2 * p.get() as i64 * half_degree };
            let powers = BTreeMap::from([(half_degree as u32, vec![(1, 0, 1)])]);
            GradedFpModule::new(p, vec![x, y], vec![], powers, None, true)?
        };
        Ok(Fixture { module, class: "x".into() })
    }

    /// A module in the JSON format of [`GradedFpModule::from_json`]. The
    /// window must be exact, since the replays read zeros off it.
    pub fn from_json(text: &str, class: &str) -> Result<Fixture> {
        let module = GradedFpModule::from_json(text)?;
        if !module.is_exact() {
            return Err(Error::InvalidModule("fixture modules need an exact window".into()));
        }
        if module.index_of(class).is_none() {
            return Err(Error::InvalidModule(format!("no class named {class}")));
        }
        Ok(Fixture { module, class: class.into() })
    }

    fn class_index(&self) -> Result<usize> {
        self.module.index_of(&self.class).ok_or_else(|| Error::InvalidModule(format!("no class named {}", self.class)))
    }

    /// Hypotheses the fixture must satisfy for the scenario `[ℓ, m]`, `i`.
    pub fn violations(&self, bottom: i64, top: i64, half_degree: i64) -> Vec<String> {
        let mut out = Vec::new();
        let Ok(x) = self.class_index() else {
            out.push(format!("no class named {}", self.class));
            return out;
        };
        let d = self.module.basis()[x].deg;
        if d != 2 * half_degree {
            out.push(format!("|{}| = {d}, expected 2i = {}", self.class, 2 * half_degree));
        }
        if half_degree >= 0 && half_degree <= u32::MAX as i64 {
            let v = self.module.apply_gen(Gen::P(half_degree as u32), &Coords::from([(x, 1)]));
            if !v.is_nonzero() {
                out.push(format!("P^{half_degree} {} is zero", self.class));
            }
        }
        if let Some((lo, hi)) = self.module.degree_range() {
            if lo < bottom || hi > top {
                out.push(format!("fixture occupies [{lo}, {hi}], outside [{bottom}, {top}]"));
            }
        }
        if let Err(v) = self.module.check_unstable() {
            out.push(format!("fixture is not unstable: P^{} with eps {} on {}", v.i, v.eps, v.name));
        }
        out
    }
}

/// The fixture tensored with `Φ(k, k + levels)`.
struct Tensored {
    fixture: Fixture,
    module: GradedFpModule,
    p: Prime,
    k: u32,
}

impl Tensored {
    fn new(fixture: &Fixture, k: u32, levels: u32) -> Result<Tensored> {
        let p = fixture.module.prime();
        let module = fixture.module.tensor(&make_phi_range(k, k + levels, p)?)?;
        Ok(Tensored { fixture: fixture.clone(), module, p, k })
    }

    /// `v ⊗ t^{p^{k+j}}` for a vector `v` of the fixture.
    fn lift(&self, v: &Coords, j: u32) -> Result<Coords> {
        let t = (self.p.get() as u64).pow(self.k + j);
        v.iter()
            .map(|(&r, &c)| {
                let name = format!("{}⊗t^{t}", self.fixture.module.basis()[r].name);
                self.module
                    .index_of(&name)
                    .map(|idx| (idx, c))
                    .ok_or_else(|| Error::OutOfRange(format!("{name} is outside the tensored window")))
            })
            .collect()
    }

    fn class(&self, j: u32) -> Result<Coords> {
        self.lift(&Coords::from([(self.fixture.class_index()?, 1)]), j)
    }

    fn fixture_power(&self, i: u32) -> Result<Coords> {
        value(self.fixture.module.apply_gen(Gen::P(i), &Coords::from([(self.fixture.class_index()?, 1)])))
    }

    fn power(&self, i: u32, v: &Coords) -> Result<Coords> {
        value(self.module.apply_gen(Gen::P(i), v))
    }

    fn occupied(&self, degree: i64) -> bool {
        self.module.basis().iter().any(|b| b.deg == degree)
    }
}

fn value(a: Action) -> Result<Coords> {
    a.value().ok_or_else(|| Error::OutOfRange("operation left the stored window".into()))
}

fn coords_json(m: &GradedFpModule, v: &Coords) -> Value {
    if v.is_empty() {
        return json!("0");
    }
    let parts: Vec<String> = v
        .iter()
        .map(|(&j, &c)| if c == 1 { m.basis()[j].name.clone() } else { format!("{c} {}", m.basis()[j].name) })
        .collect();
    json!(parts.join(" + "))
}

/// One named step of a certificate or replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub anchor: String,
    pub check: String,
    pub values: BTreeMap<String, Value>,
    pub pass: bool,
    /// Integer slack for inequality steps: how far the check is from failing.
    pub margin: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
        }
    }

    fn margin(self, lhs: i64, rhs: i64) -> i64 {
        match self {
            Rel::Lt => rhs.saturating_sub(lhs).saturating_sub(1),
            Rel::Le => rhs.saturating_sub(lhs),
            Rel::Gt => lhs.saturating_sub(rhs).saturating_sub(1),
            Rel::Ge => lhs.saturating_sub(rhs),
            Rel::Eq => lhs.abs_diff(rhs).try_into().map_or(i64::MIN, |d: i64| -d),
        }
    }
}

/// A check on the tensored fixture at the classes `a`, `b`, `c`.
type ModuleCheck<'a> = &'a dyn Fn(&Tensored, &Coords, &Coords, &Coords) -> Result<(bool, Value)>;
/// Marker for a halted build.
struct Halted;

type Flow = std::result::Result<(), Halted>;

struct Recorder {
    steps: Vec<Step>,
    halt: bool,
    anchor: &'static str,
}

impl Recorder {
    fn push(&mut self, step: Step) -> Flow {
        let pass = step.pass;
        self.steps.push(step);
        if self.halt && !pass {
            Err(Halted)
        } else {
            Ok(())
        }
    }

    fn arith(&mut self, name: &str, check: &str, lhs: i64, rel: Rel, rhs: i64, extra: &[(&str, Value)]) -> Flow {
        let mut values: BTreeMap<String, Value> = extra.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        values.insert("lhs".into(), json!(lhs));
        values.insert("relation".into(), json!(rel.symbol()));
        values.insert("rhs".into(), json!(rhs));
        let margin = rel.margin(lhs, rhs);
        self.push(Step {
            name: name.into(),
            anchor: self.anchor.into(),
            check: check.into(),
            values,
            pass: margin >= 0,
            margin: Some(margin),
            depends: Vec::new(),
        })
    }

    fn fact(&mut self, name: &str, check: &str, pass: bool, values: &[(&str, Value)]) -> Flow {
        self.push(Step {
            name: name.into(),
            anchor: self.anchor.into(),
            check: check.into(),
            values: values.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            pass,
            margin: None,
            depends: Vec::new(),
        })
    }

    /// Passes when every named earlier step passed. Dependencies must
    /// already be recorded.
    fn derived(&mut self, name: &str, check: &str, depends: &[&str]) -> Flow {
        let mut missing = Vec::new();
        let mut failed = Vec::new();
        for d in depends {
            match self.steps.iter().find(|s| s.name == *d) {
                None => missing.push(*d),
                Some(s) if !s.pass => failed.push(*d),
                Some(_) => {}
            }
        }
        let mut values = BTreeMap::new();
        if !failed.is_empty() {
            values.insert("failed".into(), json!(failed));
        }
        if !missing.is_empty() {
            values.insert("missing".into(), json!(missing));
        }
        self.push(Step {
            name: name.into(),
            anchor: self.anchor.into(),
            check: check.into(),
            values,
            pass: failed.is_empty() && missing.is_empty(),
            margin: None,
            depends: depends.iter().map(|d| d.to_string()).collect(),
        })
    }

    /// Depends on every earlier step whose name starts with one of the
    /// prefixes.
    fn derived_prefix(&mut self, name: &str, check: &str, prefixes: &[&str]) -> Flow {
        let deps: Vec<String> = self
            .steps
            .iter()
            .filter(|s| prefixes.iter().any(|p| s.name.starts_with(p)))
            .map(|s| s.name.clone())
            .collect();
        let refs: Vec<&str> = deps.iter().map(String::as_str).collect();
        self.derived(name, check, &refs)
    }
}

/// Result of one of the proposition-level checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropVerdict {
    pub bound: BoundCheck,
    /// Hypotheses of the proposition that the input violates.
    pub violations: Vec<String>,
    /// Replay of the argument on the fixture, when one ran.
    pub replay: Vec<Step>,
    /// The replay exhibited the contradiction.
    pub contradiction: bool,
}

impl PropVerdict {
    /// True when the parameters are not obstructed.
    pub fn pass(&self) -> bool {
        self.violations.is_empty() && self.bound.pass
    }

    pub fn summary(&self) -> String {
        if !self.violations.is_empty() {
            format!("hypotheses violated: {}", self.violations.join("; "))
        } else if self.bound.pass {
            "no obstruction from this proposition".into()
        } else if self.replay.is_empty() {
            format!("obstruction: bound fails by {}", -self.bound.margin)
        } else if self.contradiction {
            "obstruction: bound fails and the replay exhibits the contradiction".into()
        } else {
            let failed: Vec<&str> = self.replay.iter().filter(|s| !s.pass).map(|s| s.name.as_str()).collect();
            format!("obstruction: bound fails; replay did not close at {}", failed.join(", "))
        }
    }
}

fn prop_violations(
    p: Prime,
    bottom: i64,
    top: i64,
    half_degree: i64,
    fixture: Option<&Fixture>,
) -> Result<Vec<String>> {
    let sc = SpectralScenario::unvalidated(p, bottom, top, half_degree, 0, 0)?;
    let mut v = sc.chain_violations();
    if let Some(f) = fixture {
        if f.module.prime() != p {
            return Err(Error::PrimeMismatch(f.module.prime().get(), p.get()));
        }
        v.extend(f.violations(bottom, top, half_degree));
    }
    Ok(v)
}

/// The single-gap argument. With a fixture, a failing bound is replayed on
/// `M ⊗ Φ(k, k+1)`: `b = x ⊗ t^{p^k}` has `b^p = P^{p^k+i} b ≠ 0`, yet some
/// power `b^{j+1}` with `j + 1 ≤ p` lands in the empty band between the two
/// summands.
pub fn prop_neqn_check(
    p: Prime,
    k: u32,
    bottom: i64,
    top: i64,
    half_degree: i64,
    fixture: Option<&Fixture>,
) -> Result<PropVerdict> {
    let bound = neqn_bound(p, k, bottom, top)?;
    let violations = prop_violations(p, bottom, top, half_degree, fixture)?;
    let mut verdict = PropVerdict { bound, violations, replay: Vec::new(), contradiction: false };
    if let (Some(fx), true, false) = (fixture, verdict.violations.is_empty(), bound.pass) {
        let mut rec = Recorder { steps: Vec::new(), halt: false, anchor: "setup" };
        let _ = replay_neqn(&mut rec, fx, k, bottom, top, half_degree);
        verdict.contradiction = rec.steps.iter().all(|s| s.pass);
        verdict.replay = rec.steps;
    }
    Ok(verdict)
}

fn replay_neqn(rec: &mut Recorder, fx: &Fixture, k: u32, bottom: i64, top: i64, i: i64) -> Flow {
    let p = fx.module.prime();
    let (p0, p1) = (pow(p, k).unwrap_or(0), pow(p, k + 1).unwrap_or(0));
    let t = match Tensored::new(fx, k, 1) {
        Ok(t) => t,
        Err(e) => return rec.fact("tensor", "M ⊗ Φ(k, k+1) is computable", false, &[("error", json!(e.to_string()))]),
    };
    rec.anchor = "top-power";
    let top_power = (|| -> Result<(Coords, Coords)> {
        let b = t.class(0)?;
        let lhs = t.power((p0 + i) as u32, &b)?;
        let rhs = t.lift(&t.fixture_power(i as u32)?, 1)?;
        Ok((lhs, rhs))
    })();
    match top_power {
        Ok((lhs, rhs)) => rec.fact(
            "top-power",
            "P^{p^k+i} b = P^i x ⊗ t^{p^{k+1}} is nonzero",
            lhs == rhs && !lhs.is_empty(),
            &[("value", coords_json(&t.module, &lhs)), ("expected", coords_json(&t.module, &rhs))],
        )?,
        Err(e) => rec.fact("top-power", "P^{p^k+i} b is computable", false, &[("error", json!(e.to_string()))])?,
    }
    rec.anchor = "gap";
    rec.arith("gap", "m + 2p^k < l + 2p^{k+1}", top + 2 * p0, Rel::Lt, bottom + 2 * p1, &[])?;
    let step = 2 * (i + p0);
    let j = (top + 2 * p0) / step;
    let degree = (j + 1) * step;
    rec.arith(
        "power-chain",
        "the first power of b above N_0 lies below N_1",
        degree,
        Rel::Lt,
        bottom + 2 * p1,
        &[("j", json!(j)), ("power", json!(j + 1))],
    )?;
    rec.arith("power-count", "b^{j+1} divides b^p", j + 1, Rel::Le, p.get() as i64, &[])?;
    rec.fact(
        "gap-empty",
        "no class of M ⊗ Φ(k, k+1) in degree |b^{j+1}|",
        !t.occupied(degree),
        &[("degree", json!(degree))],
    )?;
    rec.anchor = "contradiction";
    rec.derived(
        "contradiction",
        "b^p = 0 and b^p ≠ 0",
        &["top-power", "gap", "power-chain", "power-count", "gap-empty"],
    )
}

/// The unstable-algebra argument. With a fixture, a failing bound is
/// replayed on `M ⊗ Φ(k, k+2)`: `b^p = P^i c ≠ 0` and
/// `P^{p^k}(a b^{p-1}) = b^p`, yet `a b^{p-1}` sits in a degree with no
/// classes.
pub fn prop_unstable_algebra_check(
    p: Prime,
    k: u32,
    bottom: i64,
    top: i64,
    half_degree: i64,
    fixture: Option<&Fixture>,
) -> Result<PropVerdict> {
    let bound = unstable_algebra_bound(p, k, top)?;
    let violations = prop_violations(p, bottom, top, half_degree, fixture)?;
    let mut verdict = PropVerdict { bound, violations, replay: Vec::new(), contradiction: false };
    if let (Some(fx), true, false) = (fixture, verdict.violations.is_empty(), bound.pass) {
        let mut rec = Recorder { steps: Vec::new(), halt: false, anchor: "setup" };
        let _ = replay_unstable_algebra(&mut rec, fx, k, half_degree);
        verdict.contradiction = rec.steps.iter().all(|s| s.pass);
        verdict.replay = rec.steps;
    }
    Ok(verdict)
}

fn replay_unstable_algebra(rec: &mut Recorder, fx: &Fixture, k: u32, i: i64) -> Flow {
    let p = fx.module.prime();
    let q = p.get() as i64;
    let (p0, p1) = (pow(p, k).unwrap_or(0), pow(p, k + 1).unwrap_or(0));
    let built = (|| -> Result<(Tensored, Coords, Coords, Coords)> {
        let t = Tensored::new(fx, k, 2)?;
        let (a, b, c) = (t.class(0)?, t.class(1)?, t.class(2)?);
        Ok((t, a, b, c))
    })();
    let (t, a, b, c) = match built {
        Ok(x) => x,
        Err(e) => return rec.fact("tensor", "M ⊗ Φ(k, k+2) is computable", false, &[("error", json!(e.to_string()))]),
    };
    let deg = |v: &Coords| v.keys().next().map_or(0, |&j| t.module.basis()[j].deg);
    let (da, db) = (deg(&a), deg(&b));
    rec.anchor = "power-identities";
    match t.power(p0 as u32, &a) {
        Ok(v) => rec.fact("a-to-b", "P^{p^k} a = b", v == b, &[("value", coords_json(&t.module, &v))])?,
        Err(e) => rec.fact("a-to-b", "P^{p^k} a = b", false, &[("error", json!(e.to_string()))])?,
    }
    rec.anchor = "top-power";
    match (t.power((p1 + i) as u32, &b), t.power(i as u32, &c)) {
        (Ok(lhs), Ok(rhs)) => rec.fact(
            "top-power",
            "b^p = P^{p^{k+1}+i} b = P^i c is nonzero",
            lhs == rhs && !lhs.is_empty() && db == 2 * (p1 + i),
            &[("value", coords_json(&t.module, &lhs)), ("degree_b", json!(db))],
        )?,
        (Err(e), _) | (_, Err(e)) => {
            rec.fact("top-power", "top power is computable", false, &[("error", json!(e.to_string()))])?
        }
    }
    rec.anchor = "cup-power";
    let mut items = Vec::new();
    let mut all = true;
    for j in 1..=p0 {
        let killed_a = matches!(t.power((p0 - j) as u32, &a), Ok(v) if v.is_empty());
        let d = (q - 1) * db + 2 * (q - 1) * j;
        let reason = if killed_a {
            "instability"
        } else if !t.occupied(d) {
            "gap"
        } else {
            all = false;
            "survives"
        };
        if reason != "instability" || j == 1 || j == p0 {
            items.push(json!({"j": j, "reason": reason, "degree": d}));
        }
    }
    rec.fact(
        "middle-terms",
        "every term P^{p^k-j} a · P^j b^{p-1}, 1 <= j <= p^k, vanishes by instability or a gap",
        all,
        &[("terms", json!(items)), ("count", json!(p0))],
    )?;
    let d = da + (q - 1) * db;
    rec.fact("product-in-gap", "no class in degree |a b^{p-1}|", !t.occupied(d), &[("degree", json!(d))])?;
    rec.anchor = "contradiction";
    rec.derived(
        "contradiction",
        "b^p = P^{p^k}(a b^{p-1}) = 0",
        &["a-to-b", "top-power", "middle-terms", "product-in-gap"],
    )
}

/// Final status of a certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    /// Every step passed.
    Green,
    /// The contradiction assumption fails, so there is nothing to certify.
    Refused,
    Failed {
        steps: Vec<String>,
    },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Green => write!(f, "contradiction certified"),
            Verdict::Refused => write!(f, "theorem bound satisfied, no contradiction available"),
            Verdict::Failed { steps } => write!(f, "failed at {}", steps.join(", ")),
        }
    }
}

/// Transcript of the loop-space argument at concrete parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub scenario: SpectralScenario,
    pub steps: Vec<Step>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn is_green(&self) -> bool {
        self.verdict == Verdict::Green
    }

    pub fn step(&self, name: &str) -> Option<&Step> {
        self.steps.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("certificates serialize")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifyMode {
    /// Stop at the first failing step.
    #[default]
    Halt,
    /// Evaluate every step regardless of failures.
    Audit,
}

/// The certificate in halting mode with the minimal fixture.
pub fn thm_nneq_certificate(
    p: Prime,
    k: u32,
    bottom: i64,
    top: i64,
    half_degree: i64,
    desuspension: i64,
) -> Result<Certificate> {
    certify(p, k, bottom, top, half_degree, desuspension, None, CertifyMode::Halt)
}

/// The certificate with every step evaluated.
pub fn thm_nneq_audit(
    p: Prime,
    k: u32,
    bottom: i64,
    top: i64,
    half_degree: i64,
    desuspension: i64,
) -> Result<Certificate> {
    certify(p, k, bottom, top, half_degree, desuspension, None, CertifyMode::Audit)
}

/// Builds the certificate. `fixture` defaults to [`Fixture::minimal`].
#[allow(clippy::too_many_arguments)]
pub fn certify(
    p: Prime,
    k: u32,
    bottom: i64,
    top: i64,
    half_degree: i64,
    desuspension: i64,
    fixture: Option<&Fixture>,
    mode: CertifyMode,
) -> Result<Certificate> {
    let sc = SpectralScenario::unvalidated(p, bottom, top, half_degree, k, desuspension)?;
    let mut rec = Recorder { steps: Vec::new(), halt: mode == CertifyMode::Halt, anchor: "setup" };
    rec.arith(
        "assumption",
        "2p^k > (p^2-1)m + p(m-l) + (p^2-2)n + 1",
        2 * sc.phi_power(0),
        Rel::Gt,
        sc.bound_rhs(),
        &[],
    )
    .ok();
    if !rec.steps[0].pass {
        return Ok(Certificate { scenario: sc, steps: rec.steps, verdict: Verdict::Refused });
    }
    let owned;
    let fixture = match fixture {
        Some(f) => f,
        None => {
            owned = Fixture::minimal(p, half_degree.max(0))?;
            &owned
        }
    };
    let halted = Engine::new(sc, fixture).run(&mut rec).is_err();
    if !halted {
        rec.anchor = "recheck";
        let report = recheck_certificate_steps(&sc, &rec.steps);
        let _ = rec.fact(
            "recheck",
            "an independent integer pass gives the same verdict on every inequality",
            report.disagreements.is_empty(),
            &[("checked", json!(report.checked)), ("disagreements", json!(report.disagreements))],
        );
    }
    let failed: Vec<String> = rec.steps.iter().filter(|s| !s.pass).map(|s| s.name.clone()).collect();
    let verdict = if failed.is_empty() { Verdict::Green } else { Verdict::Failed { steps: failed } };
    Ok(Certificate { scenario: sc, steps: rec.steps, verdict })
}

struct Engine<'a> {
    sc: SpectralScenario,
    fixture: &'a Fixture,
    q: i64,
    p0: i64,
    p1: i64,
    p2: i64,
    p3: i64,
}

impl<'a> Engine<'a> {
    fn new(sc: SpectralScenario, fixture: &'a Fixture) -> Engine<'a> {
        Engine {
            sc,
            fixture,
            q: sc.p.get() as i64,
            p0: sc.phi_power(0),
            p1: sc.phi_power(1),
            p2: sc.phi_power(2),
            p3: sc.phi_power(3),
        }
    }

    fn run(&self, rec: &mut Recorder) -> Flow {
        let sc = &self.sc;
        let (q, p0, p1, p2) = (self.q, self.p0, self.p1, self.p2);
        let (l, m, i, n) = (sc.bottom, sc.top, sc.half_degree, sc.desuspension);
        let n1 = sc.loop_index() - 1;

        rec.anchor = "scenario-chain";
        rec.arith("chain.bottom", "l >= 0", l, Rel::Ge, 0, &[])?;
        rec.arith("chain.class-above-bottom", "l <= 2i", l, Rel::Le, 2 * i, &[])?;
        rec.arith("chain.power-below-top", "2pi <= m", 2 * q * i, Rel::Le, m, &[])?;
        rec.arith("chain.desuspension", "n >= 0", n, Rel::Ge, 0, &[])?;
        rec.arith("chain.level", "k >= 1", sc.phi_index as i64, Rel::Ge, 1, &[])?;

        rec.anchor = "fixture";
        let fx = self.fixture;
        let x = fx.class_index().ok();
        let top_power = x.and_then(|x| fx.module.apply_gen(Gen::P(i as u32), &Coords::from([(x, 1)])).value());
        rec.fact(
            "fixture.top-power",
            "the fixture class has degree 2i and P^i x is nonzero",
            x.map(|x| fx.module.basis()[x].deg) == Some(2 * i) && top_power.as_ref().is_some_and(|v| !v.is_empty()),
            &[
                ("class", json!(fx.class)),
                ("top_power", top_power.map_or(json!(null), |v| coords_json(&fx.module, &v))),
            ],
        )?;
        let (lo, hi) = fx.module.degree_range().unwrap_or((i64::MIN, i64::MAX));
        rec.arith(
            "fixture.range",
            "the fixture lies in [l, m]",
            0,
            Rel::Le,
            (lo - l).min(m - hi),
            &[("occupied", json!([lo, hi]))],
        )?;
        let tensored = Tensored::new(fx, sc.phi_index, 2);
        let unstable =
            fx.module.check_unstable().is_ok() && tensored.as_ref().is_ok_and(|t| t.module.check_unstable().is_ok());
        rec.fact(
            "fixture.unstable",
            "the fixture and its tensor product with Φ(k, k+2) are unstable",
            unstable,
            &[("tensor", json!(tensored.as_ref().err().map(|e| e.to_string())))],
        )?;

        rec.anchor = "setup";
        let (s0, s1, s2) = (sc.summand(0), sc.summand(1), sc.summand(2));
        rec.arith(
            "summands.gap-0-1",
            "top of N_0 < bottom of N_1",
            s0.hi().unwrap_or(0),
            Rel::Lt,
            s1.lo().unwrap_or(0),
            &[],
        )?;
        rec.arith(
            "summands.gap-1-2",
            "top of N_1 < bottom of N_2",
            s1.hi().unwrap_or(0),
            Rel::Lt,
            s2.lo().unwrap_or(0),
            &[],
        )?;

        rec.anchor = "power-identities";
        rec.arith("power.instability", "p^k > i", p0, Rel::Gt, i, &[])?;
        let classes =
            tensored.as_ref().ok().and_then(|t| Some((t, t.class(0).ok()?, t.class(1).ok()?, t.class(2).ok()?)));
        let module_fact = |name: &str, check: &str, f: ModuleCheck| {
            let (pass, v) = match &classes {
                Some((t, a, b, c)) => match f(t, a, b, c) {
                    Ok(r) => r,
                    Err(e) => (false, json!(e.to_string())),
                },
                None => (false, json!("fixture tensor unavailable")),
            };
            (name.to_string(), check.to_string(), pass, v)
        };
        let push = |rec: &mut Recorder, (name, check, pass, v): (String, String, bool, Value)| {
            rec.fact(&name, &check, pass, &[("value", v)])
        };
        push(
            rec,
            module_fact("power.a-to-b", "P^{p^k} a = b", &|t, a, b, _| {
                let v = t.power(p0 as u32, a)?;
                Ok((&v == b, coords_json(&t.module, &v)))
            }),
        )?;
        push(
            rec,
            module_fact("power.b-to-c", "P^{p^{k+1}} b = c", &|t, _, b, c| {
                let v = t.power(p1 as u32, b)?;
                Ok((&v == c, coords_json(&t.module, &v)))
            }),
        )?;
        rec.arith("power.column-zero", "|a| = 2i + 2p^k > 0", 2 * i + 2 * p0, Rel::Gt, 0, &[])?;

        rec.anchor = "cup-power";
        push(
            rec,
            module_fact("cup.instability-kill", "P^j a = 0 for i < j < p^k", &|t, a, _, _| {
                for j in (i + 1)..p0 {
                    if !t.power(j as u32, a)?.is_empty() {
                        return Ok((false, json!(format!("P^{j} a is nonzero"))));
                    }
                }
                Ok((true, json!((p0 - i - 1).max(0))))
            }),
        )?;
        let jmin = (p0 - i + q - 2).div_euclid(q - 1);
        rec.arith(
            "cup.pigeonhole",
            "some factor P^{j_r} b has j_r >= ceil((p^k - i)/(p-1)) >= 1",
            jmin,
            Rel::Ge,
            1,
            &[],
        )?;
        rec.arith(
            "cup.gap-bottom",
            "|P^{j_min} b| > top of N_1",
            2 * i + 2 * p1 + 2 * (q - 1) * jmin,
            Rel::Gt,
            m + 2 * p1,
            &[("j_min", json!(jmin))],
        )?;
        rec.arith(
            "cup.gap-top",
            "|P^{p^k} b| < bottom of N_2",
            2 * i + 2 * p1 + 2 * (q - 1) * p0,
            Rel::Lt,
            l + 2 * p2,
            &[],
        )?;
        push(
            rec,
            module_fact("cup.fixture-gap", "P^j b = 0 for j_min <= j <= p^k", &|t, _, b, _| {
                for j in jmin.max(1)..=p0 {
                    if !t.power(j as u32, b)?.is_empty() {
                        return Ok((false, json!(format!("P^{j} b is nonzero"))));
                    }
                }
                Ok((true, json!(p0 - jmin.max(1) + 1)))
            }),
        )?;
        rec.derived(
            "cup.identity",
            "P^{p^k}(a b^{p-1}) = b^p",
            &[
                "power.a-to-b",
                "cup.instability-kill",
                "cup.pigeonhole",
                "cup.gap-bottom",
                "cup.gap-top",
                "cup.fixture-gap",
            ],
        )?;

        rec.anchor = "top-power";
        push(
            rec,
            module_fact("top.cartan", "b^p = P^{p^{k+1}+i} b = P^i c", &|t, _, b, c| {
                let lhs = t.power((p1 + i) as u32, b)?;
                let rhs = t.power(i as u32, c)?;
                Ok((lhs == rhs, coords_json(&t.module, &lhs)))
            }),
        )?;
        push(
            rec,
            module_fact("top.nonzero", "P^i c is nonzero", &|t, _, _, c| {
                let v = t.power(i as u32, c)?;
                Ok((!v.is_empty(), coords_json(&t.module, &v)))
            }),
        )?;
        push(
            rec,
            module_fact("top.index", "|b| = 2(p^{k+1} + i), so the top power of b is its p-th power", &|t, _, b, _| {
                let d = b.keys().next().map_or(0, |&j| t.module.basis()[j].deg);
                Ok((d == 2 * (p1 + i), json!(d)))
            }),
        )?;

        self.gamma_steps(rec, n1)?;

        rec.anchor = "nonzero";
        rec.derived(
            "nonzero",
            "P^{p^k} P^{(p-1)p^k}(delta) = b^p ≠ 0",
            &["cup.identity", "top.cartan", "top.nonzero", "gamma.nonzero"],
        )?;

        self.delta_steps(rec, classes.as_ref().map(|(t, a, b, c)| (*t, a, b, c)), n1)?;
        self.gap_steps(rec, n1)?;

        rec.anchor = "contradiction";
        rec.derived(
            "contradiction",
            "the same class is zero and nonzero",
            &["nonzero", "delta.identity", "three-gaps.vanishing"],
        )
    }

    fn gamma_steps(&self, rec: &mut Recorder, n1: i64) -> Flow {
        let sc = &self.sc;
        let (q, p0, p2) = (self.q, self.p0, self.p2);
        let (l, m, i, n) = (sc.bottom, sc.top, sc.half_degree, sc.desuspension);
        let target = 2 * q * i + 2 * p2 - 1;
        let r_top = (q * q - 1) as u32;
        rec.anchor = "gamma-nonzero";
        rec.arith(
            "gamma.connectivity",
            "columns -(r+1), r >= p^2-1, vanish in degree 2pi + 2p^{k+2} - 1",
            target,
            Rel::Le,
            connectivity_bound(r_top, sc),
            &[],
        )?;
        let blocks = column_blocks(sc, r_top);
        let wt = |b: &crate::ssq::Block| (b.u + b.v * q as u32 + b.w * (q * q) as u32) as i64;
        let low_max = blocks.iter().filter(|b| wt(b) < q * q).filter_map(|b| b.interval.hi()).max().unwrap_or(0);
        rec.arith(
            "gamma.low-blocks",
            "blocks with u + vp + wp^2 < p^2 end below 2pi + 2p^{k+2} - 1",
            low_max,
            Rel::Lt,
            target,
            &[],
        )?;
        let c1 = (q * q - 1) * m + 2 * (q * q - 1) * p0 + (q * q - 2) * n1;
        rec.arith("gamma.low-chain-1", "max <= (p^2-1)m + 2(p^2-1)p^k + (p^2-2)(n'-1)", low_max, Rel::Le, c1, &[])?;
        let c2 = 2 * p2 - 2 * p0 + (q * q + q - 1) * m + (q * q - 2) * n;
        rec.arith("gamma.low-chain-2", "... <= 2p^{k+2} - 2p^k + (p^2+p-1)m + (p^2-2)n", c1, Rel::Le, c2, &[])?;
        rec.arith("gamma.low-chain-3", "... < 2pi + 2p^{k+2} - 1", c2, Rel::Lt, target, &[])?;

        let loop_n = sc.loop_index();
        let ambient = Ambient::new(loop_n.clamp(1, u32::MAX as i64) as u32).unwrap_or(Ambient::Infinite);
        let cls = |name: &str, d: i64| CohExpr::leaf(FormalClass::cohomology(name, d, 1));
        let (da, db, dc) = (2 * i + 2 * p0, 2 * i + 2 * self.p1, 2 * i + 2 * p2);
        let browder = OpExpression {
            p: sc.p,
            n: ambient,
            root: CohExpr::star(vec![CohExpr::browder(vec![cls("a", da), cls("b", db)]), cls("c", dc)]),
        };
        let over_suspension = CycleContext { suspension: true, desuspension_index: None };
        rec.fact(
            "gamma.bracket-cycles",
            "products of Browder operations on column -1 classes are permanent cycles over a suspension",
            permanent_cycle_filter(&browder, &over_suspension),
            &[("expression", json!(browder.to_string()))],
        )?;
        let index = self.tensor_index().map(|d| 2 * i + n + d);
        let cyc = CycleContext { suspension: true, desuspension_index: index };
        let q0 = OpExpression { p: sc.p, n: ambient, root: CohExpr::q(0, cls("a", da)) };
        rec.fact(
            "gamma.column-one-powers",
            "Dyer-Lashof classes of weight <= 2p-1 survive when the desuspension index is >= n'-1",
            permanent_cycle_filter(&q0, &cyc),
            &[("desuspension_index", json!(index)), ("n_prime", json!(loop_n))],
        )?;
        let relevant: Vec<_> =
            blocks.iter().filter(|b| b.column() as i64 >= 2 * q && b.column() <= r_top && wt(b) >= q * q).collect();
        let bp_min = relevant.iter().map(|b| bracket_power_lower_bound(b.u, b.v, b.w, sc)).min();
        let printed_min = relevant.iter().map(|b| sharpened_lower_bound(b.u, b.v, b.w, sc)).min();
        let floor = l + 2 * p2 + q * (n + 2 * i);
        rec.arith(
            "gamma.bracket-power-blocks",
            "Q on a Browder operation in a block with u + vp + wp^2 >= p^2 has degree >= l + 2p^{k+2} + p(n+2i)",
            bp_min.unwrap_or(i64::MAX),
            Rel::Ge,
            floor,
            &[("blocks", json!(relevant.len())), ("printed_bound_min", json!(printed_min))],
        )?;
        rec.arith(
            "gamma.bracket-power-chain",
            "l + 2p^{k+2} + p(n+2i) > 2pi + 2p^{k+2} - 1",
            floor,
            Rel::Gt,
            target,
            &[],
        )?;
        rec.derived_prefix("gamma.nonzero", "gamma = P^i c survives to E_infinity", &["gamma.", "top.nonzero"])
    }

    /// Desuspension index of the tensored fixture, standing in for `N`.
    fn tensor_index(&self) -> Option<i64> {
        let t = Tensored::new(self.fixture, self.sc.phi_index, 2).ok()?;
        t.module.desuspension_index().ok()
    }

    fn delta_steps(
        &self,
        rec: &mut Recorder,
        classes: Option<(&Tensored, &Coords, &Coords, &Coords)>,
        n1: i64,
    ) -> Flow {
        let sc = &self.sc;
        let (q, p0, p1, p2) = (self.q, self.p0, self.p1, self.p2);
        let (l, m, i, n) = (sc.bottom, sc.top, sc.half_degree, sc.desuspension);
        rec.anchor = "delta-reduction";
        let loop_n = sc.loop_index().clamp(1, u32::MAX as i64) as u32;
        let ambient = Ambient::new(loop_n).unwrap_or(Ambient::Infinite);
        let da = 2 * i + 2 * p0;
        let a = FormalClass::cohomology("a", da, 1);
        let index = self.tensor_index().map(|d| 2 * i + n + d);
        let q0 = OpExpression { p: sc.p, n: ambient, root: CohExpr::q(0, CohExpr::leaf(a.clone())) };
        rec.fact(
            "delta.permanent",
            "Q^0(a) is a permanent cycle",
            permanent_cycle_filter(&q0, &CycleContext { suspension: true, desuspension_index: index }),
            &[("desuspension_index", json!(index))],
        )?;
        let s = ((q - 1) * p0) as u32;
        let alg = SteenrodAlgebra::new(sc.p);
        let calc = Calculus::new(&alg, ambient);
        let reduction = (|| -> Result<(bool, String, String, Vec<String>)> {
            let (t, av, bv, cv) = classes.ok_or_else(|| Error::InvalidModule("fixture tensor unavailable".into()))?;
            let ctx = ModuleContext::new(
                t.module.clone(),
                vec![("a".into(), av.clone()), ("b".into(), bv.clone()), ("c".into(), cv.clone())],
            );
            let exp = calc.nishida_expand_coh(s, 0, &a, Some(&ctx))?;
            let b = FormalClass::cohomology("b", 2 * i + 2 * p1, 1);
            let mut factors = vec![CohExpr::leaf(a.clone())];
            factors.extend((1..q).map(|_| CohExpr::leaf(b.clone())));
            let expected = calc.canonical(&CohExpr::sum([(sc.p.get() - 1, CohExpr::star(factors))]))?;
            Ok((exp.expr == expected, exp.expr.to_string(), expected.to_string(), exp.notes))
        })();
        match reduction {
            Ok((pass, got, want, notes)) => rec.fact(
                "delta.reduction",
                "P^{(p-1)p^k} Q^0(a) = -a * b^{*(p-1)} in the fixture context",
                pass,
                &[("expansion", json!(got)), ("expected", json!(want)), ("notes", json!(notes))],
            )?,
            Err(e) => rec.fact(
                "delta.reduction",
                "Nishida expansion is computable",
                false,
                &[("error", json!(e.to_string()))],
            )?,
        }
        let qdeg = 2 * q * i + 2 * p0 - 2 * p1 + 2 * p2;
        let q0deg = calc.coh_degree(&q0.root).unwrap_or(i64::MIN);
        rec.arith(
            "delta.degree",
            "|P^{(p-1)p^k} Q^0(a)| = q = 2pi + 2p^k - 2p^{k+1} + 2p^{k+2}",
            q0deg + 2 * (q - 1) * s as i64,
            Rel::Eq,
            qdeg,
            &[("q", json!(qdeg))],
        )?;
        let blocks = column_blocks(sc, (q - 1) as u32);
        let low_max = blocks.iter().filter(|b| b.w == 0).filter_map(|b| b.interval.hi()).max().unwrap_or(0);
        rec.arith(
            "delta.low-columns",
            "blocks without N_2 in columns -1..-(p-1) end below q",
            low_max,
            Rel::Lt,
            qdeg,
            &[],
        )?;
        let c1 = (q - 1) * m + 2 * (q - 1) * p1 + (q - 2) * n1;
        rec.arith("delta.low-chain-1", "max <= (p-1)m + 2(p-1)p^{k+1} + (p-2)(n'-1)", low_max, Rel::Le, c1, &[])?;
        let c2 = 2 * (q - 1) * p1 + q * m - l + (q - 2) * n;
        rec.arith("delta.low-chain-2", "... <= 2(p-1)p^{k+1} + pm - l + (p-2)n", c1, Rel::Le, c2, &[])?;
        let c3 = q * l + 2 * p0 + 2 * (q - 1) * p1;
        rec.arith("delta.low-chain-3", "... < pl + 2p^k + 2(p-1)p^{k+1}", c2, Rel::Lt, c3, &[])?;
        rec.arith("delta.low-chain-4", "... <= q", c3, Rel::Le, qdeg, &[])?;
        let high_min = blocks.iter().filter(|b| b.w > 0).filter_map(|b| b.interval.lo()).min().unwrap_or(i64::MAX);
        rec.arith(
            "delta.high-columns",
            "blocks with N_2 in columns -1..-(p-1) start above q",
            high_min,
            Rel::Gt,
            qdeg,
            &[],
        )?;
        rec.arith("delta.high-chain-1", "min >= l + 2p^{k+2}", high_min, Rel::Ge, l + 2 * p2, &[])?;
        rec.arith("delta.spread", "2(p-1)p^k > m - l", 2 * (q - 1) * p0, Rel::Gt, m - l, &[])?;
        let h2 = m - 2 * (q - 1) * p0 + 2 * p2;
        rec.arith("delta.high-chain-2", "l + 2p^{k+2} > m - 2(p-1)p^k + 2p^{k+2}", l + 2 * p2, Rel::Gt, h2, &[])?;
        rec.arith("delta.high-chain-3", "m - 2(p-1)p^k + 2p^{k+2} >= q", h2, Rel::Ge, qdeg, &[])?;
        rec.derived_prefix(
            "delta.identity",
            "P^{(p-1)p^k}(delta) is represented by -a * b^{*(p-1)} in column -p",
            &["delta."],
        )
    }

    fn gap_steps(&self, rec: &mut Recorder, n1: i64) -> Flow {
        let sc = &self.sc;
        let (q, p0, p1, p2, p3) = (self.q, self.p0, self.p1, self.p2, self.p3);
        let (l, m, i) = (sc.bottom, sc.top, sc.half_degree);
        rec.anchor = "three-gaps";
        let v = match v_intervals(sc) {
            Ok(v) => v,
            Err(e) => {
                return rec.fact("v.regions", "regions are computable", false, &[("error", json!(e.to_string()))])
            }
        };
        let wide = q * q - q + 1;
        let displayed = [
            DegreeInterval::new(2 * i + 2 * p0, (q - 1) * m + 2 * (q - 1) * p1 + (q - 2) * n1),
            DegreeInterval::new(2 * i + (q - 1) * l + wide * 2 * p0, q * m + wide * 2 * p0 + (q - 1) * n1),
            DegreeInterval::new(l + 2 * p2, q * m + 2 * p3 + (q - 1) * n1),
        ];
        for (j, (hull, shown)) in [v.v0, v.v1, v.v2].iter().zip(displayed).enumerate() {
            let (hl, hh) = hull.bounds().unwrap_or((i64::MIN, i64::MAX));
            let (sl, sh) = shown.bounds().unwrap_or((0, -1));
            rec.arith(
                &format!("v.hull-{j}"),
                &format!("V_{j} lies in its displayed interval"),
                0,
                Rel::Le,
                (hl - sl).min(sh - hh),
                &[("hull", json!([hl, hh])), ("displayed", json!([sl, sh]))],
            )?;
        }
        let small = 2 * (q - 1) * p0 / q;
        let big = 2 * (q - 1) * p0;
        let width = |lo: DegreeInterval, hi: DegreeInterval| distance(lo, hi).map_or(i64::MIN, |d| d - 1);
        let mut widths = Vec::new();
        let mut spans = Vec::new();
        let g01 = width(v.v0, v.v1);
        widths.push(g01);
        rec.arith("v.gap-0-1", "gap between V_0 and V_1 spans >= 2(p-1)p^{k-1}", g01, Rel::Ge, small, &[])?;
        let g12 = width(v.v1, v.v2);
        widths.push(g12);
        rec.arith("v.gap-1-2", "gap between V_1 and V_2 spans >= 2(p-1)p^{k-1}", g12, Rel::Ge, small, &[])?;
        let d02 = distance(v.v0, v.v2).unwrap_or(i64::MIN);
        spans.push(d02);
        rec.arith("v.distance-0-2", "distance from V_0 to V_2 exceeds 2(p-1)p^k", d02, Rel::Gt, big, &[])?;
        for pair in v.ladder.windows(2) {
            let g = width(pair[0].interval, pair[1].interval);
            widths.push(g);
            rec.arith(
                &format!("ladder.gap-{}", pair[0].u),
                &format!("gap above N_0^{} N_1^{} spans >= 2(p-1)p^{{k-1}}", pair[0].u, pair[0].v),
                g,
                Rel::Ge,
                small,
                &[],
            )?;
        }
        for triple in v.ladder.windows(3) {
            let d = distance(triple[0].interval, triple[2].interval).unwrap_or(i64::MIN);
            spans.push(d);
            rec.arith(
                &format!("ladder.distance-{}", triple[0].u),
                &format!("distance from N_0^{} N_1^{} two blocks up exceeds 2(p-1)p^k", triple[0].u, triple[0].v),
                d,
                Rel::Gt,
                big,
                &[],
            )?;
        }
        let alg = SteenrodAlgebra::new(sc.p);
        match alg.verify_subalg_lemma(sc.phi_index) {
            Ok(report) => {
                rec.fact(
                    "subalg.decomposition",
                    "P^{p^k} P^{(p-1)p^k} lies in the subalgebra generated by P^1, P^p, ..., P^{p^k}",
                    report.pass(),
                    &[
                        ("witness", json!(if report.relations.is_some() { "split relations" } else { "flat" })),
                        ("max_top_factors", json!(report.max_top_factors)),
                        ("first_failure", json!(report.first_failure().map(|c| c.name.clone()))),
                    ],
                )?;
                rec.arith(
                    "jump.small-generators",
                    "P^{p^j}, j < k, raises degree by at most 2(p-1)p^{k-1} and cannot cross a gap",
                    small,
                    Rel::Le,
                    widths.iter().copied().min().unwrap_or(i64::MIN),
                    &[],
                )?;
                rec.arith(
                    "jump.top-single-gap",
                    "P^{p^k} raises degree by 2(p-1)p^k and crosses at most one gap",
                    big,
                    Rel::Lt,
                    spans.iter().copied().min().unwrap_or(i64::MAX),
                    &[],
                )?;
                rec.arith(
                    "jump.top-count",
                    "each summand has at most p-1 factors P^{p^k}, fewer than the p gaps to cross",
                    report.max_top_factors as i64,
                    Rel::Le,
                    q - 1,
                    &[],
                )?;
            }
            Err(e) => rec.fact(
                "subalg.decomposition",
                "decomposition is computable",
                false,
                &[("error", json!(e.to_string()))],
            )?,
        }
        rec.derived_prefix(
            "three-gaps.vanishing",
            "P^{p^k} P^{(p-1)p^k}(delta) = 0",
            &["v.", "ladder.", "subalg.", "jump.", "delta.identity"],
        )
    }
}

/// Steps the second pass re-derived and those whose verdict differs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecheckReport {
    pub checked: usize,
    pub disagreements: Vec<String>,
}

/// Re-derives every inequality of the certificate from the raw parameters
/// in `i128`, without reusing any interval or bound computed by the engine,
/// and compares verdicts. Steps outside the arithmetic skeleton are skipped.
pub fn recheck_certificate(cert: &Certificate) -> RecheckReport {
    recheck_certificate_steps(&cert.scenario, &cert.steps)
}

fn recheck_certificate_steps(sc: &SpectralScenario, steps: &[Step]) -> RecheckReport {
    let independent = independent_verdicts(sc);
    let mut report = RecheckReport::default();
    for s in steps {
        if let Some(&v) = independent.get(s.name.as_str()) {
            report.checked += 1;
            if v != s.pass {
                report.disagreements.push(s.name.clone());
            }
        }
    }
    report
}

fn independent_verdicts(sc: &SpectralScenario) -> BTreeMap<String, bool> {
    let p = sc.p.get() as i128;
    let (l, m, i, n) = (sc.bottom as i128, sc.top as i128, sc.half_degree as i128, sc.desuspension as i128);
    let k = sc.phi_index;
    let pk = |e: u32| p.pow(k + e);
    let (a0, a1, a2, a3) = (pk(0), pk(1), pk(2), pk(3));
    let shift = n + 2 * i;
    let weight = |u: i128, v: i128, w: i128| u + v * p + w * p * p;
    let bottom = |u: i128, v: i128, w: i128| 2 * u * i + (v + w) * l + 2 * weight(u, v, w) * a0;
    let topd = |u: i128, v: i128, w: i128| (u + v + w) * m + 2 * weight(u, v, w) * a0 + (u + v + w - 1) * shift;
    let mut out = BTreeMap::new();
    let mut put = |name: String, ok: bool| {
        out.insert(name, ok);
    };
    put("assumption".into(), 2 * a0 > (p * p - 1) * m + p * (m - l) + (p * p - 2) * n + 1);
    put("chain.bottom".into(), l >= 0);
    put("chain.class-above-bottom".into(), l <= 2 * i);
    put("chain.power-below-top".into(), 2 * p * i <= m);
    put("chain.desuspension".into(), n >= 0);
    put("chain.level".into(), k >= 1);
    put("summands.gap-0-1".into(), m + 2 * a0 < l + 2 * a1);
    put("summands.gap-1-2".into(), m + 2 * a1 < l + 2 * a2);
    put("power.instability".into(), a0 > i);
    put("power.column-zero".into(), i + a0 > 0);
    // smallest j with (p-1) j >= p^k - i
    let mut jmin: i128 = 0;
    while (p - 1) * jmin < a0 - i {
        jmin += 1;
    }
    if a0 - i <= 0 {
        jmin = -((i - a0) / (p - 1));
    }
    put("cup.pigeonhole".into(), jmin >= 1);
    put("cup.gap-bottom".into(), 2 * (i + a1 + (p - 1) * jmin) > m + 2 * a1);
    put("cup.gap-top".into(), 2 * (i + a1 + (p - 1) * a0) < l + 2 * a2);

    // gamma
    let t = 2 * p * i + 2 * a2 - 1;
    put("gamma.connectivity".into(), t < p * p * (2 * i + 2 * a0));
    let cmax = p * p - 1;
    let mut low_max = i128::MIN;
    let mut bp_min = i128::MAX;
    for u in 0..=cmax {
        for v in 0..=cmax - u {
            for w in 0..=cmax - u - v {
                let c = u + v + w;
                if c == 0 {
                    continue;
                }
                if weight(u, v, w) < p * p {
                    low_max = low_max.max(topd(u, v, w));
                } else if c >= 2 * p {
                    bp_min = bp_min.min(bottom(u, v, w) + p * shift);
                }
            }
        }
    }
    put("gamma.low-blocks".into(), low_max < t);
    let g1 = (p * p - 1) * m + 2 * (p * p - 1) * a0 + (p * p - 2) * shift;
    let g2 = 2 * a2 - 2 * a0 + (p * p + p - 1) * m + (p * p - 2) * n;
    put("gamma.low-chain-1".into(), low_max <= g1);
    put("gamma.low-chain-2".into(), g1 <= g2);
    put("gamma.low-chain-3".into(), g2 < t);
    let floor = l + 2 * a2 + p * shift;
    put("gamma.bracket-power-blocks".into(), bp_min >= floor);
    put("gamma.bracket-power-chain".into(), floor > t);

    // delta
    let qd = 2 * p * i + 2 * a0 - 2 * a1 + 2 * a2;
    put("delta.degree".into(), p * (2 * i + 2 * a0) + 2 * (p - 1) * (p - 1) * a0 == qd);
    let mut dlow = i128::MIN;
    let mut dhigh = i128::MAX;
    for u in 0..p {
        for v in 0..p - u {
            for w in 0..p - u - v {
                if u + v + w == 0 {
                    continue;
                }
                if w == 0 {
                    dlow = dlow.max(topd(u, v, w));
                } else {
                    dhigh = dhigh.min(bottom(u, v, w));
                }
            }
        }
    }
    put("delta.low-columns".into(), dlow < qd);
    let d1 = (p - 1) * m + 2 * (p - 1) * a1 + (p - 2) * shift;
    let d2 = 2 * (p - 1) * a1 + p * m - l + (p - 2) * n;
    let d3 = p * l + 2 * a0 + 2 * (p - 1) * a1;
    put("delta.low-chain-1".into(), dlow <= d1);
    put("delta.low-chain-2".into(), d1 <= d2);
    put("delta.low-chain-3".into(), d2 < d3);
    put("delta.low-chain-4".into(), d3 <= qd);
    put("delta.high-columns".into(), dhigh > qd);
    put("delta.high-chain-1".into(), dhigh >= l + 2 * a2);
    put("delta.spread".into(), 2 * (p - 1) * a0 > m - l);
    let h2 = m - 2 * (p - 1) * a0 + 2 * a2;
    put("delta.high-chain-2".into(), l + 2 * a2 > h2);
    put("delta.high-chain-3".into(), h2 >= qd);

    // regions of the first p columns
    let mut v0 = (i128::MAX, i128::MIN);
    let mut v2 = (i128::MAX, i128::MIN);
    // empty blocks hold no classes; a gap against one never certifies
    let grow = |r: &mut (i128, i128), lo: i128, hi: i128| {
        if lo <= hi {
            r.0 = r.0.min(lo);
            r.1 = r.1.max(hi);
        }
    };
    let filled = |r: (i128, i128)| r.0 <= r.1;
    for u in 0..=p {
        for v in 0..=p - u {
            for w in 0..=p - u - v {
                if u + v + w == 0 {
                    continue;
                }
                let (lo, hi) = (bottom(u, v, w), topd(u, v, w));
                if w > 0 || (u, v) == (0, p) {
                    grow(&mut v2, lo, hi);
                } else if (u, v) != (1, p - 1) {
                    grow(&mut v0, lo, hi);
                }
            }
        }
    }
    let v1 = (bottom(1, p - 1, 0), topd(1, p - 1, 0));
    let wide = p * p - p + 1;
    let shown = [
        (2 * i + 2 * a0, (p - 1) * m + 2 * (p - 1) * a1 + (p - 2) * shift),
        (2 * i + (p - 1) * l + wide * 2 * a0, p * m + wide * 2 * a0 + (p - 1) * shift),
        (l + 2 * a2, p * m + 2 * a3 + (p - 1) * shift),
    ];
    for (j, (h, s)) in [v0, v1, v2].iter().zip(shown).enumerate() {
        put(format!("v.hull-{j}"), filled(*h) && s.0 <= h.0 && h.1 <= s.1);
    }
    let small = 2 * (p - 1) * pk(0) / p;
    let big = 2 * (p - 1) * a0;
    let mut min_width = i128::MAX;
    let mut min_span = i128::MAX;
    let gap = |lo: (i128, i128), hi: (i128, i128)| match filled(lo) && filled(hi) {
        true => hi.0 - lo.1 - 1,
        false => i128::MIN,
    };
    let g01 = gap(v0, v1);
    let g12 = gap(v1, v2);
    let d02 = gap(v0, v2).saturating_add(1);
    put("v.gap-0-1".into(), g01 >= small);
    put("v.gap-1-2".into(), g12 >= small);
    put("v.distance-0-2".into(), d02 > big);
    let block = |u: i128, v: i128| (bottom(u, v, 0), topd(u, v, 0));
    min_width = min_width.min(g01).min(g12);
    min_span = min_span.min(d02);
    for u in (2..=p).rev() {
        let g = gap(block(u, p - u), block(u - 1, p - u + 1));
        min_width = min_width.min(g);
        put(format!("ladder.gap-{u}"), g >= small);
    }
    for u in (3..=p).rev() {
        let d = gap(block(u, p - u), block(u - 2, p - u + 2)).saturating_add(1);
        min_span = min_span.min(d);
        put(format!("ladder.distance-{u}"), d > big);
    }
    put("jump.small-generators".into(), small <= min_width);
    put("jump.top-single-gap".into(), big < min_span);
    out
}

/// A module as seen by the top-level theorem: concentrated in `[ℓ, m]`,
/// with desuspension index `n` witnessed by a class of degree `2i + n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDescriptor {
    pub bottom: i64,
    pub top: i64,
    pub desuspension_index: i64,
    pub class_degree: i64,
    pub origin: Parity,
}

/// The top-level bound obtained by reindexing the loop-space bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainFromNneq {
    /// The module desuspended `n` times, as a loop-space scenario.
    pub reindexed: SpectralScenario,
    /// Hypotheses of the loop-space argument the reindexed scenario misses.
    pub scenario_violations: Vec<String>,
    /// The bound actually instantiated: the loop-space bound for `n ≥ 1`,
    /// the unstable-algebra bound for `n = 0`.
    pub instantiated: BoundCheck,
    pub main: BoundCheck,
    /// The instantiated right side is at most the top-level right side, so
    /// the instantiated bound implies the top-level one.
    pub dominates: bool,
}

impl MainFromNneq {
    pub fn pass(&self) -> bool {
        self.main.pass
    }
}

/// Derives the top-level bound for a module from the loop-space bound (or,
/// for `n = 0`, the unstable-algebra bound). Modules whose desuspension
/// class has odd origin are rejected: that case is open.
pub fn thm_main_from_nneq(p: Prime, k: u32, d: &ModuleDescriptor) -> Result<MainFromNneq> {
    if d.origin == Parity::Odd {
        return Err(Error::Unsupported("desuspension class of odd origin: this case is open".into()));
    }
    let n = d.desuspension_index;
    if n < 0 || n > d.top {
        return Err(Error::Hypothesis(format!("need 0 <= n <= m, got n = {n}")));
    }
    let twice_i = d.class_degree - n;
    if twice_i < 0 || twice_i % 2 != 0 || twice_i > d.top - n {
        return Err(Error::Hypothesis(format!(
            "class degree {} minus n = {n} must be even and in [0, m - n]",
            d.class_degree
        )));
    }
    let main = thm_main_bound(p, k, d.bottom, d.top)?;
    let q = p.get() as i64;
    let reindexed = SpectralScenario::unvalidated(p, d.bottom - n, d.top - n, twice_i / 2, k, n)?;
    let instantiated = if n == 0 {
        unstable_algebra_bound(p, k, d.top)?
    } else {
        BoundCheck::le(2 * pow(p, k)?, reindexed.bound_rhs())
    };
    let main_rhs = (q * q - 1) * d.top + q * (d.top - d.bottom);
    Ok(MainFromNneq {
        reindexed,
        scenario_violations: reindexed.chain_violations(),
        instantiated,
        main,
        dominates: instantiated.rhs <= main_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssq::assumption_threshold;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn main_bound_examples() {
        let b = thm_main_bound(p3(), 0, 0, 2).unwrap();
        assert!(b.pass);
        assert_eq!((b.lhs, b.rhs), (2, 22));
        let first_fail = (0..10).find(|&k| !thm_main_bound(p3(), k, 2, 2).unwrap().pass);
        assert_eq!(first_fail, Some(2));
        assert!(!thm_main_bound(p3(), 30, 5, 5).unwrap().pass);
        assert!(thm_main_bound(p3(), 1, 3, 2).is_err());
    }

    #[test]
    fn neqn_reports_hypotheses() {
        let fx = Fixture::minimal(p3(), 1).unwrap();
        let v = prop_neqn_check(p3(), 1, 2, 2, 1, Some(&fx)).unwrap();
        assert!(!v.bound.pass);
        assert!(v.violations.iter().any(|s| s.contains("2pi = 6 > m = 2")), "{:?}", v.violations);
        assert!(v.replay.is_empty());
    }

    #[test]
    fn neqn_replay_closes() {
        let fx = Fixture::minimal(p3(), 1).unwrap();
        let v = prop_neqn_check(p3(), 2, 2, 6, 1, Some(&fx)).unwrap();
        assert!(!v.bound.pass);
        assert!(v.contradiction, "{:#?}", v.replay);
        let chain = v.replay.iter().find(|s| s.name == "power-chain").unwrap();
        assert_eq!(chain.values["j"], json!(1));
        assert_eq!(chain.values["lhs"], json!(40));
        let gap = v.replay.iter().find(|s| s.name == "gap").unwrap();
        assert_eq!((gap.values["lhs"].clone(), gap.values["rhs"].clone()), (json!(24), json!(56)));
        assert_eq!(prop_neqn_check(p3(), 0, 0, 10, 0, None).unwrap().summary(), "no obstruction from this proposition");
    }

    #[test]
    fn unstable_algebra_replay_itemizes() {
        assert!(!unstable_algebra_bound(p3(), 1, 2).unwrap().pass);
        let fx = Fixture::minimal(p3(), 1).unwrap();
        let v = prop_unstable_algebra_check(p3(), 2, 2, 6, 1, Some(&fx)).unwrap();
        assert!(v.contradiction, "{:#?}", v.replay);
        let mid = v.replay.iter().find(|s| s.name == "middle-terms").unwrap();
        let terms = mid.values["terms"].as_array().unwrap();
        assert!(terms.iter().any(|t| t["j"] == json!(8) && t["reason"] == json!("gap") && t["degree"] == json!(144)));
        let prod = v.replay.iter().find(|s| s.name == "product-in-gap").unwrap();
        assert_eq!(prod.values["degree"], json!(132));
    }

    #[test]
    fn certificate_refuses_below_threshold() {
        let k = assumption_threshold(p3(), 2, 6, 0).unwrap();
        let c = thm_nneq_certificate(p3(), k - 1, 2, 6, 1, 0).unwrap();
        assert_eq!(c.verdict, Verdict::Refused);
        assert_eq!(c.verdict.to_string(), "theorem bound satisfied, no contradiction available");
        assert_eq!(c.steps.len(), 1);
    }

    #[test]
    fn certificate_green_when_chain_holds() {
        let k = assumption_threshold(p3(), 2, 6, 0).unwrap();
        assert_eq!(k, 4);
        let c = thm_nneq_certificate(p3(), k, 2, 6, 1, 0).unwrap();
        let failed: Vec<_> = c.steps.iter().filter(|s| !s.pass).collect();
        assert!(c.is_green(), "{failed:#?}");
        assert_eq!(c.step("delta.degree").unwrap().values["q"], json!(1140));
        let report = recheck_certificate(&c);
        assert!(report.disagreements.is_empty());
        assert!(report.checked > 40);
    }

    #[test]
    fn certificate_halts_on_scenario_chain() {
        let c = thm_nneq_certificate(p3(), 2, 2, 2, 1, 0).unwrap();
        assert_eq!(c.verdict, Verdict::Failed { steps: vec!["chain.power-below-top".into()] });
        let audit = thm_nneq_audit(p3(), 2, 2, 2, 1, 0).unwrap();
        assert!(audit.step("gamma.low-chain-2").is_some_and(|s| !s.pass));
        assert!(audit.step("v.gap-0-1").is_some_and(|s| s.pass));
        assert!(recheck_certificate(&audit).disagreements.is_empty());
    }

    #[test]
    fn reindexing() {
        let d = ModuleDescriptor { bottom: 2, top: 4, desuspension_index: 1, class_degree: 3, origin: Parity::Even };
        let r = thm_main_from_nneq(p3(), 1, &d).unwrap();
        assert!(r.dominates);
        // n = 1: (p²-1)(m-1) + p(m-l) + (p²-2) + 1 equals the top-level right side
        assert_eq!(r.instantiated.rhs, r.main.rhs);
        assert!(!r.scenario_violations.is_empty());
        let d0 = ModuleDescriptor { desuspension_index: 0, class_degree: 2, ..d };
        let r0 = thm_main_from_nneq(p3(), 1, &d0).unwrap();
        assert_eq!(r0.instantiated.rhs, 4);
        assert!(r0.dominates);
        let odd = ModuleDescriptor { origin: Parity::Odd, ..d };
        assert!(matches!(thm_main_from_nneq(p3(), 1, &odd), Err(Error::Unsupported(_))));
    }
}
