//! Finite graded F_p-modules with a Steenrod action stored as sparse
//! matrices, together with instability, desuspension and tensor products.
//!
//! A module lives on a degree window `[lo, hi]`. When the module is `exact`
//! it is known to be zero outside the window, so an operation landing
//! outside is zero. Otherwise such an operation is reported as out of range:
//! truncating an infinite module must not manufacture vanishing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::Prime;
use crate::steenrod::{Gen, SteenrodAlgebra};

/// Sparse coordinates over the basis, nonzero entries only.
pub type Coords = BTreeMap<usize, u32>;

/// Sparse matrix entry `(row = target, col = source, coeff)`.
pub type Entry = (usize, usize, u32);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub name: String,
    pub deg: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ModuleJson {
    p: Prime,
    basis: Vec<BasisElement>,
    #[serde(default)]
    beta: Vec<Entry>,
    #[serde(default)]
    powers: BTreeMap<String, Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<(i64, i64)>,
    #[serde(default = "default_exact")]
    exact: bool,
}

fn default_exact() -> bool {
    true
}

/// A finite-type graded module over the Steenrod algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedFpModule {
    p: Prime,
    basis: Vec<BasisElement>,
    beta: Vec<Entry>,
    powers: BTreeMap<u32, Vec<Entry>>,
    lo: i64,
    hi: i64,
    exact: bool,
}

/// A vector in a module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleElement {
    pub coords: Coords,
}

impl ModuleElement {
    pub fn basis(j: usize) -> ModuleElement {
        ModuleElement { coords: Coords::from([(j, 1)]) }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Result of applying an operation inside the stored window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Value(Coords),
    OutOfRange,
}

impl Action {
    pub fn is_nonzero(&self) -> bool {
        matches!(self, Action::Value(c) if !c.is_empty())
    }

    pub fn value(self) -> Option<Coords> {
        match self {
            Action::Value(c) => Some(c),
            Action::OutOfRange => None,
        }
    }
}

/// `β^ε P^i x ≠ 0` with `2i + ε > |x|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub class: usize,
    pub name: String,
    pub i: u32,
    pub eps: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesuspensionClass {
    pub class: usize,
    pub name: String,
    pub deg: i64,
    pub parity: Parity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesuspensionReport {
    pub index: i64,
    pub classes: Vec<DesuspensionClass>,
}

fn add_into(p: Prime, acc: &mut Coords, j: usize, c: u32) {
    if c == 0 {
        return;
    }
    let e = acc.entry(j).or_insert(0);
    *e = p.add(*e, c);
    if *e == 0 {
        acc.remove(&j);
    }
}

impl GradedFpModule {
    /// Builds and validates a module. `window` defaults to the span of the
    /// basis degrees.
    pub fn new(
        p: Prime,
        basis: Vec<BasisElement>,
        beta: Vec<Entry>,
        powers: BTreeMap<u32, Vec<Entry>>,
        window: Option<(i64, i64)>,
        exact: bool,
    ) -> Result<GradedFpModule> {
        let (lo, hi) = match window {
            Some(w) => w,
            None => (basis.iter().map(|b| b.deg).min().unwrap_or(0), basis.iter().map(|b| b.deg).max().unwrap_or(0)),
        };
        if lo > hi {
            return Err(Error::InvalidModule(format!("empty window [{lo}, {hi}]")));
        }
        if let Some(b) = basis.iter().find(|b| b.deg < lo || b.deg > hi) {
            return Err(Error::InvalidModule(format!("class {} of degree {} outside [{lo}, {hi}]", b.name, b.deg)));
        }
        let q = 2 * (p.get() as i64 - 1);
        let n = basis.len();
        let normalize = |entries: Vec<Entry>, shift: i64, what: &str| -> Result<Vec<Entry>> {
            let mut acc: BTreeMap<(usize, usize), u32> = BTreeMap::new();
            for (r, c, v) in entries {
                if r >= n || c >= n {
                    return Err(Error::InvalidModule(format!("{what}: index ({r}, {c}) outside basis of size {n}")));
                }
                if basis[r].deg != basis[c].deg + shift {
                    return Err(Error::InvalidModule(format!(
                        "{what}: {} -> {} does not raise degree by {shift}",
                        basis[c].name, basis[r].name
                    )));
                }
                let e = acc.entry((r, c)).or_insert(0);
                *e = p.add(*e, v % p.get());
            }
            Ok(acc.into_iter().filter(|&(_, v)| v != 0).map(|((r, c), v)| (r, c, v)).collect())
        };
        let beta = normalize(beta, 1, "beta")?;
        let mut pw = BTreeMap::new();
        for (i, entries) in powers {
            if i == 0 {
                continue;
            }
            let e = normalize(entries, q * i as i64, &format!("P^{i}"))?;
            if !e.is_empty() {
                pw.insert(i, e);
            }
        }
        let m = GradedFpModule { p, basis, beta, powers: pw, lo, hi, exact };
        for j in 0..n {
            if let Action::Value(v) = m.apply_gen(Gen::Beta, &Coords::from([(j, 1)])) {
                if m.apply_gen(Gen::Beta, &v).is_nonzero() {
                    return Err(Error::InvalidModule(format!("beta squares to a nonzero map on {}", m.basis[j].name)));
                }
            }
        }
        Ok(m)
    }

    pub fn zero(p: Prime) -> GradedFpModule {
        GradedFpModule { p, basis: Vec::new(), beta: Vec::new(), powers: BTreeMap::new(), lo: 0, hi: 0, exact: true }
    }

    /// F_p concentrated in degree 0 with trivial action.
    pub fn ground(p: Prime) -> GradedFpModule {
        GradedFpModule {
            p,
            basis: vec![BasisElement { name: "1".into(), deg: 0 }],
            beta: Vec::new(),
            powers: BTreeMap::new(),
            lo: 0,
            hi: 0,
            exact: true,
        }
    }

    pub fn from_json(text: &str) -> Result<GradedFpModule> {
        let raw: ModuleJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut powers = BTreeMap::new();
        for (k, v) in raw.powers {
            let i: u32 = k.parse().map_err(|_| Error::Parse(format!("power index {k:?} is not an integer")))?;
            powers.insert(i, v);
        }
        GradedFpModule::new(raw.p, raw.basis, raw.beta, powers, raw.window, raw.exact)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = ModuleJson {
            p: self.p,
            basis: self.basis.clone(),
            beta: self.beta.clone(),
            powers: self.powers.iter().map(|(i, e)| (i.to_string(), e.clone())).collect(),
            window: Some((self.lo, self.hi)),
            exact: self.exact,
        };
        serde_json::to_value(raw).expect("module serializes")
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn beta_entries(&self) -> &[Entry] {
        &self.beta
    }

    pub fn power_entries(&self) -> &BTreeMap<u32, Vec<Entry>> {
        &self.powers
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.name == name)
    }

    /// Degree range actually occupied by basis elements.
    pub fn degree_range(&self) -> Option<(i64, i64)> {
        let lo = self.basis.iter().map(|b| b.deg).min()?;
        let hi = self.basis.iter().map(|b| b.deg).max()?;
        Some((lo, hi))
    }

    fn in_window(&self, d: i64) -> bool {
        self.lo <= d && d <= self.hi
    }

    /// Applies one generator to a homogeneous vector.
    pub fn apply_gen(&self, g: Gen, v: &Coords) -> Action {
        let Some((&first, _)) = v.iter().next() else { return Action::Value(Coords::new()) };
        let d = self.basis[first].deg;
        let (shift, entries) = match g {
            Gen::P(0) => return Action::Value(v.clone()),
            Gen::Beta => (1, Some(&self.beta)),
            Gen::P(i) => (2 * (self.p.get() as i64 - 1) * i as i64, self.powers.get(&i)),
        };
        if !self.in_window(d + shift) {
            return if self.exact { Action::Value(Coords::new()) } else { Action::OutOfRange };
        }
        let mut out = Coords::new();
        if let Some(entries) = entries {
            for &(r, c, x) in entries {
                if let Some(&y) = v.get(&c) {
                    add_into(self.p, &mut out, r, self.p.mul(x, y));
                }
            }
        }
        Action::Value(out)
    }

    /// Applies a product of generators, rightmost factor first.
    pub fn apply_word(&self, gens: &[Gen], v: &Coords) -> Action {
        let mut cur = v.clone();
        for &g in gens.iter().rev() {
            match self.apply_gen(g, &cur) {
                Action::Value(c) => cur = c,
                Action::OutOfRange => return Action::OutOfRange,
            }
        }
        Action::Value(cur)
    }

    /// `β^ε P^i` applied to basis element `j`.
    pub fn beta_power(&self, eps: u32, i: u32, j: usize) -> Action {
        let word: Vec<Gen> = if eps == 1 { vec![Gen::Beta, Gen::P(i)] } else { vec![Gen::P(i)] };
        self.apply_word(&word, &Coords::from([(j, 1)]))
    }

    // Largest i for which P^i on a class of degree d can land in the window.
    fn max_power(&self, d: i64) -> u32 {
        let q = 2 * (self.p.get() as i64 - 1);
        if self.hi < d {
            0
        } else {
            ((self.hi - d) / q) as u32
        }
    }

    /// Instability: `β^ε P^i x = 0` whenever `2i + ε > |x|`. Out-of-range
    /// values never count as violations.
    pub fn check_unstable(&self) -> std::result::Result<(), Violation> {
        for (j, b) in self.basis.iter().enumerate() {
            for i in 0..=self.max_power(b.deg) {
                for eps in 0..=1u32 {
                    if 2 * i as i64 + eps as i64 > b.deg && self.beta_power(eps, i, j).is_nonzero() {
                        return Err(Violation { class: j, name: b.name.clone(), i, eps });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn shift(&self, n: i64) -> GradedFpModule {
        let mut m = self.clone();
        for b in &mut m.basis {
            b.deg += n;
        }
        m.lo += n;
        m.hi += n;
        m
    }

    // Nonzero (class, i, ε) with their slack |x| - 2i - ε; P^0 included.
    fn nonzero_ops(&self) -> Vec<(usize, u32, u32, i64)> {
        let mut out = Vec::new();
        for (j, b) in self.basis.iter().enumerate() {
            for i in 0..=self.max_power(b.deg) {
                for eps in 0..=1u32 {
                    if self.beta_power(eps, i, j).is_nonzero() {
                        out.push((j, i, eps, b.deg - 2 * i as i64 - eps as i64));
                    }
                }
            }
        }
        out
    }

    /// Largest `n ≥ 0` such that the `n`-fold desuspension stays unstable.
    pub fn desuspension_index(&self) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::InvalidModule("the zero module has no desuspension index".into()));
        }
        if let Err(v) = self.check_unstable() {
            return Err(Error::Hypothesis(format!(
                "module is not unstable: P^{} with eps {} on {}",
                v.i, v.eps, v.name
            )));
        }
        Ok(self.nonzero_ops().iter().map(|t| t.3).min().expect("P^0 is nonzero on every class"))
    }

    /// Classes realizing the desuspension index.
    pub fn find_desuspension_classes(&self) -> Result<DesuspensionReport> {
        let index = self.desuspension_index()?;
        let mut classes = Vec::new();
        for (j, b) in self.basis.iter().enumerate() {
            let gap = b.deg - index;
            let (eps, parity) = if gap % 2 == 0 { (0, Parity::Even) } else { (1, Parity::Odd) };
            let i = ((gap - eps as i64) / 2) as u32;
            if self.beta_power(eps, i, j).is_nonzero() {
                classes.push(DesuspensionClass { class: j, name: b.name.clone(), deg: b.deg, parity });
            }
        }
        Ok(DesuspensionReport { index, classes })
    }

    /// Every inadmissible `P^a β^ε P^b` (and `ββ`) acts as its Adem
    /// expansion on each basis element, wherever all values are in range.
    /// Returns the first failing `(class, a, ε, b)`.
    pub fn check_adem(&self, alg: &SteenrodAlgebra) -> std::result::Result<(), (usize, u32, u32, u32)> {
        let q = self.p.get();
        for (j, b) in self.basis.iter().enumerate() {
            let x = Coords::from([(j, 1)]);
            if self.apply_word(&[Gen::Beta, Gen::Beta], &x).is_nonzero() {
                return Err((j, 0, 2, 0));
            }
            for bb in 1..=self.max_power(b.deg) {
                for eps in 0..=1u32 {
                    let mid = b.deg + 2 * (q as i64 - 1) * bb as i64 + eps as i64;
                    for a in 1..=self.max_power(mid) {
                        if a >= q * bb + eps {
                            continue;
                        }
                        let mut word = vec![Gen::P(a)];
                        if eps == 1 {
                            word.push(Gen::Beta);
                        }
                        word.push(Gen::P(bb));
                        let Action::Value(lhs) = self.apply_word(&word, &x) else { continue };
                        let mut rhs = Coords::new();
                        let mut known = true;
                        for (m, c) in alg.adem_reduce(&word).terms() {
                            match self.apply_word(&m.gens(), &x) {
                                Action::Value(v) => {
                                    for (r, y) in v {
                                        add_into(self.p, &mut rhs, r, self.p.mul(c.value(), y));
                                    }
                                }
                                Action::OutOfRange => known = false,
                            }
                        }
                        if known && lhs != rhs {
                            return Err((j, a, eps, bb));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Tensor product with the Cartan formula and the Koszul sign on β.
    ///
    /// The window is the sum of the factor windows when both are exact;
    /// otherwise it is cut at `hi_M + lo_N` for each non-exact factor `M`, so
    /// every Cartan factor stays inside the range where it is known.
    pub fn tensor(&self, other: &GradedFpModule) -> Result<GradedFpModule> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p.get(), other.p.get()));
        }
        let p = self.p;
        let lo = self.lo + other.lo;
        let mut hi = self.hi + other.hi;
        if !self.exact {
            hi = hi.min(self.hi + other.lo);
        }
        if !other.exact {
            hi = hi.min(other.hi + self.lo);
        }
        let exact = self.exact && other.exact;
        let mut basis = Vec::new();
        let mut index = BTreeMap::new();
        for (a, ba) in self.basis.iter().enumerate() {
            for (b, bb) in other.basis.iter().enumerate() {
                let d = ba.deg + bb.deg;
                if d <= hi {
                    index.insert((a, b), basis.len());
                    basis.push(BasisElement { name: format!("{}⊗{}", ba.name, bb.name), deg: d });
                }
            }
        }
        let unit = |j: usize| Coords::from([(j, 1)]);
        let known = |act: Action, what: &str| -> Result<Coords> {
            act.value().ok_or_else(|| Error::InvalidModule(format!("{what} left the known range")))
        };
        let mut beta = Vec::new();
        let mut powers: BTreeMap<u32, Vec<Entry>> = BTreeMap::new();
        let q = 2 * (p.get() as i64 - 1);
        for (&(a, b), &col) in &index {
            let da = self.basis[a].deg;
            let db = other.basis[b].deg;
            if da + db < hi {
                let mut acc = Coords::new();
                for (r, x) in known(self.apply_gen(Gen::Beta, &unit(a)), "beta")? {
                    if let Some(&row) = index.get(&(r, b)) {
                        add_into(p, &mut acc, row, x);
                    }
                }
                let sign = p.sign(da.rem_euclid(2) as u64);
                for (r, x) in known(other.apply_gen(Gen::Beta, &unit(b)), "beta")? {
                    if let Some(&row) = index.get(&(a, r)) {
                        add_into(p, &mut acc, row, p.mul(sign, x));
                    }
                }
                beta.extend(acc.into_iter().map(|(r, x)| (r, col, x)));
            }
            let mut i = 1u32;
            while da + db + q * i as i64 <= hi {
                let mut acc = Coords::new();
                for j in 0..=i {
                    let left = known(self.apply_gen(Gen::P(j), &unit(a)), "power")?;
                    if left.is_empty() {
                        continue;
                    }
                    let right = known(other.apply_gen(Gen::P(i - j), &unit(b)), "power")?;
                    for (&r1, &x1) in &left {
                        for (&r2, &x2) in &right {
                            if let Some(&row) = index.get(&(r1, r2)) {
                                add_into(p, &mut acc, row, p.mul(x1, x2));
                            }
                        }
                    }
                }
                if !acc.is_empty() {
                    powers.entry(i).or_default().extend(acc.into_iter().map(|(r, x)| (r, col, x)));
                }
                i += 1;
            }
        }
        GradedFpModule::new(p, basis, beta, powers, Some((lo, hi)), exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn class(name: &str, deg: i64) -> BasisElement {
        BasisElement { name: name.into(), deg }
    }

    /// x in degree 2i with P^i x = y.
    fn top_power_fixture(i: u32) -> GradedFpModule {
        let p = p3();
        let d = 2 * i as i64;
        GradedFpModule::new(
            p,
            vec![class("x", d), class("y", 3 * d)],
            vec![],
            BTreeMap::from([(i, vec![(1, 0, 1)])]),
            None,
            true,
        )
        .unwrap()
    }

    #[test]
    fn zero_module_is_unstable_and_has_no_index() {
        let z = GradedFpModule::zero(p3());
        assert!(z.check_unstable().is_ok());
        assert!(z.desuspension_index().is_err());
    }

    #[test]
    fn single_class_index() {
        let m = GradedFpModule::new(p3(), vec![class("x", 2)], vec![], BTreeMap::new(), Some((2, 2)), false).unwrap();
        assert_eq!(m.desuspension_index().unwrap(), 2);
        let m = top_power_fixture(1);
        assert_eq!(m.desuspension_index().unwrap(), 0);
        let r = m.find_desuspension_classes().unwrap();
        assert_eq!(r.classes, vec![DesuspensionClass { class: 0, name: "x".into(), deg: 2, parity: Parity::Even }]);
        for n in 0..=10 {
            assert_eq!(m.shift(n).desuspension_index().unwrap(), n);
        }
        let r = m.shift(1).find_desuspension_classes().unwrap();
        assert_eq!((r.index, r.classes[0].parity, r.classes[0].name.as_str()), (1, Parity::Even, "x"));
    }

    #[test]
    fn odd_origin_fixture() {
        // x in degree 3, P^1 x = z, β z = y: only βP^1 obstructs.
        let m = GradedFpModule::new(
            p3(),
            vec![class("x", 3), class("z", 7), class("y", 8)],
            vec![(2, 1, 1)],
            BTreeMap::from([(1, vec![(1, 0, 1)])]),
            None,
            true,
        )
        .unwrap();
        let r = m.find_desuspension_classes().unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(r.classes.len(), 1);
        assert_eq!((r.classes[0].name.as_str(), r.classes[0].parity), ("x", Parity::Odd));
    }

    #[test]
    fn shift_round_trip() {
        let m = top_power_fixture(1);
        assert_eq!(m.shift(0), m);
        assert_eq!(m.shift(5).shift(-5), m);
        assert_eq!(m.shift(3).window(), (5, 9));
    }

    #[test]
    fn tensor_with_ground_is_identity_up_to_names() {
        let m = top_power_fixture(1);
        let t = m.tensor(&GradedFpModule::ground(p3())).unwrap();
        assert_eq!(t.dim(), m.dim());
        assert_eq!(t.power_entries(), m.power_entries());
        assert_eq!(t.window(), m.window());
    }

    #[test]
    fn beta_square_rejected() {
        let r = GradedFpModule::new(
            p3(),
            vec![class("a", 1), class("b", 2), class("c", 3)],
            vec![(1, 0, 1), (2, 1, 1)],
            BTreeMap::new(),
            None,
            true,
        );
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = top_power_fixture(2);
        let text = m.to_json().to_string();
        assert_eq!(GradedFpModule::from_json(&text).unwrap(), m);
        let plain = r#"{"p":3,"basis":[{"name":"x","deg":2},{"name":"y","deg":6}],"beta":[],"powers":{"1":[[1,0,1]]}}"#;
        assert_eq!(GradedFpModule::from_json(plain).unwrap(), top_power_fixture(1));
    }
}
