//! The odd-primary Steenrod algebra in the admissible basis.
//!
//! A monomial is stored as the flat word `[ε_0, s_1, ε_1, …, s_r, ε_r]`; the
//! unit is `[0]`. Products are formed one generator at a time on the right:
//! multiplying an admissible word by `β` or `P^b` can only break admissibility
//! at the final junction, where one Adem relation (Steenrod–Epstein form)
//! is applied and the prefix is multiplied through recursively.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{CoeffTables, FpScalar, Prime};
use crate::linalg::{self, SparseVec};

/// Default bound on the degree for which a basis is enumerated.
pub const DEFAULT_DEGREE_GUARD: u64 = 200;

/// Above this many generator words the subalgebra check switches from a flat
/// witness to split relations.
pub const FLAT_WORD_BUDGET: u64 = 100_000;

/// One factor of an arbitrary (not necessarily admissible) product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    Beta,
    P(u32),
}

impl Gen {
    pub fn degree(self, p: Prime) -> u64 {
        match self {
            Gen::Beta => 1,
            Gen::P(s) => 2 * s as u64 * (p.get() as u64 - 1),
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::Beta => write!(f, "b"),
            Gen::P(s) => write!(f, "P^{s}"),
        }
    }
}

/// Parses a whitespace-separated product such as `"P1 P1"`, `"b P^3 b"`.
pub fn parse_word(text: &str) -> Result<Vec<Gen>> {
    text.split_whitespace()
        .map(|tok| match tok {
            "b" | "B" | "β" | "beta" => Ok(Gen::Beta),
            _ => {
                let rest = tok.strip_prefix('P').ok_or_else(|| Error::Parse(format!("unknown factor {tok:?}")))?;
                let rest = rest.strip_prefix('^').unwrap_or(rest);
                rest.parse::<u32>().map(Gen::P).map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))
            }
        })
        .collect()
}

/// Inverse of [`parse_word`]: factors joined by spaces, empty for the unit.
pub fn format_word(gens: &[Gen]) -> String {
    gens.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
}

/// Degree of an arbitrary product of generators.
pub fn gens_degree(p: Prime, gens: &[Gen]) -> u64 {
    gens.iter().map(|g| g.degree(p)).sum()
}

fn word_degree(p: Prime, w: &[u32]) -> u64 {
    let q = 2 * (p.get() as u64 - 1);
    w.iter().enumerate().map(|(j, &v)| if j % 2 == 0 { v as u64 } else { q * v as u64 }).sum()
}

fn is_admissible(p: Prime, w: &[u32]) -> bool {
    if w.len().is_multiple_of(2) || w.iter().step_by(2).any(|&e| e > 1) || w.iter().skip(1).step_by(2).any(|&s| s == 0)
    {
        return false;
    }
    let r = w.len() / 2;
    (1..r).all(|j| {
        let s = w[2 * j - 1] as u64;
        let eps = w[2 * j] as u64;
        let next = w[2 * j + 1] as u64;
        s >= p.get() as u64 * next + eps
    })
}

fn word_gens(w: &[u32]) -> Vec<Gen> {
    let mut out = Vec::new();
    for (j, &v) in w.iter().enumerate() {
        if j % 2 == 0 {
            if v == 1 {
                out.push(Gen::Beta);
            }
        } else {
            out.push(Gen::P(v));
        }
    }
    out
}

fn fmt_word(w: &[u32], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let gens = word_gens(w);
    if gens.is_empty() {
        return write!(f, "1");
    }
    for (j, g) in gens.iter().enumerate() {
        if j > 0 {
            write!(f, " ")?;
        }
        write!(f, "{g}")?;
    }
    Ok(())
}

/// An admissible word `β^{ε_0} P^{s_1} β^{ε_1} ⋯ P^{s_r} β^{ε_r}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdmissibleMonomial {
    p: Prime,
    word: Vec<u32>,
}

impl AdmissibleMonomial {
    pub fn new(p: Prime, word: Vec<u32>) -> Result<AdmissibleMonomial> {
        if !is_admissible(p, &word) {
            return Err(Error::InvalidMonomial(format!("{word:?} is not admissible at p = {p}")));
        }
        Ok(AdmissibleMonomial { p, word })
    }

    pub fn unit(p: Prime) -> AdmissibleMonomial {
        AdmissibleMonomial { p, word: vec![0] }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    pub fn gens(&self) -> Vec<Gen> {
        word_gens(&self.word)
    }

    pub fn degree(&self) -> u64 {
        word_degree(self.p, &self.word)
    }
}

impl fmt::Display for AdmissibleMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_word(&self.word, f)
    }
}

/// Degree of an admissible monomial.
pub fn monomial_degree(m: &AdmissibleMonomial) -> u64 {
    m.degree()
}

type Terms = BTreeMap<Vec<u32>, u32>;

fn add_term(p: Prime, terms: &mut Terms, w: Vec<u32>, c: u32) {
    if c == 0 {
        return;
    }
    match terms.entry(w) {
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

/// An F_p-linear combination of admissible monomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteenrodElement {
    p: Prime,
    terms: Terms,
}

impl SteenrodElement {
    pub fn zero(p: Prime) -> SteenrodElement {
        SteenrodElement { p, terms: Terms::new() }
    }

    pub fn unit(p: Prime) -> SteenrodElement {
        SteenrodElement::monomial(&AdmissibleMonomial::unit(p))
    }

    pub fn monomial(m: &AdmissibleMonomial) -> SteenrodElement {
        SteenrodElement { p: m.p, terms: Terms::from([(m.word.clone(), 1)]) }
    }

    pub fn from_terms(
        p: Prime,
        terms: impl IntoIterator<Item = (AdmissibleMonomial, FpScalar)>,
    ) -> Result<SteenrodElement> {
        let mut out = SteenrodElement::zero(p);
        for (m, c) in terms {
            if m.p != p || c.prime() != p {
                return Err(Error::PrimeMismatch(p.get(), m.p.get()));
            }
            add_term(p, &mut out.terms, m.word, c.value());
        }
        Ok(out)
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order: by degree, then by word.
    pub fn terms(&self) -> Vec<(AdmissibleMonomial, FpScalar)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(w, &c)| (AdmissibleMonomial { p: self.p, word: w.clone() }, FpScalar::new(c as i64, self.p)))
            .collect();
        v.sort_by(|a, b| (a.0.degree(), &a.0.word).cmp(&(b.0.degree(), &b.0.word)));
        v
    }

    pub fn coeff(&self, word: &[u32]) -> FpScalar {
        FpScalar::new(self.terms.get(word).copied().unwrap_or(0) as i64, self.p)
    }

    /// Degree if every term has the same degree; `None` for zero or mixed.
    pub fn degree(&self) -> Option<u64> {
        let mut it = self.terms.keys().map(|w| word_degree(self.p, w));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn add(&self, other: &SteenrodElement) -> SteenrodElement {
        let mut out = self.clone();
        for (w, &c) in &other.terms {
            add_term(self.p, &mut out.terms, w.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: FpScalar) -> SteenrodElement {
        let mut out = SteenrodElement::zero(self.p);
        for (w, &v) in &self.terms {
            add_term(self.p, &mut out.terms, w.clone(), self.p.mul(v, c.value()));
        }
        out
    }

    pub fn sub(&self, other: &SteenrodElement) -> SteenrodElement {
        self.add(&other.scale(FpScalar::new(-1, self.p)))
    }
}

impl fmt::Display for SteenrodElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (m, c)) in self.terms().iter().enumerate() {
            if j > 0 {
                write!(f, " + ")?;
            }
            if c.value() != 1 {
                write!(f, "{c} ")?;
            }
            fmt_word(&m.word, f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    word: Vec<u32>,
    coeff: u32,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    p: Prime,
    terms: Vec<TermJson>,
}

impl Serialize for SteenrodElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self.terms().into_iter().map(|(m, c)| TermJson { word: m.word, coeff: c.value() }).collect();
        ElementJson { p: self.p, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SteenrodElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ElementJson::deserialize(d)?;
        let mut out = SteenrodElement::zero(raw.p);
        for t in raw.terms {
            if !is_admissible(raw.p, &t.word) {
                return Err(serde::de::Error::custom(format!("word {:?} is not admissible", t.word)));
            }
            add_term(raw.p, &mut out.terms, t.word, t.coeff % raw.p.get());
        }
        Ok(out)
    }
}

/// Multiplication engine for one prime. The cache of right multiplications by
/// a generator is shared between threads; the lock is held only for lookup
/// and insertion.
/// Admissible word times generator, as admissible words with coefficients.
type ProductMemo = HashMap<(Vec<u32>, Gen), Vec<(Vec<u32>, u32)>>;

pub struct SteenrodAlgebra {
    tables: CoeffTables,
    memo: Mutex<ProductMemo>,
}

impl SteenrodAlgebra {
    pub fn new(p: Prime) -> SteenrodAlgebra {
        SteenrodAlgebra { tables: CoeffTables::new(p), memo: Mutex::new(HashMap::new()) }
    }

    pub fn prime(&self) -> Prime {
        self.tables.prime()
    }

    pub fn tables(&self) -> &CoeffTables {
        &self.tables
    }

    /// Adem expansion of `P^a β^e P^b` for an inadmissible pair, as products
    /// of generators with coefficients.
    pub fn adem_relation(&self, a: u32, e: u32, b: u32) -> Vec<(u32, Vec<Gen>)> {
        let p = self.prime();
        let q = p.get() as i64;
        let t = &self.tables;
        let (a64, b64) = (a as i64, b as i64);
        let mut out = Vec::new();
        if e == 0 {
            debug_assert!(a64 < q * b64);
            for i in 0..=a64 / q {
                let c = t.binom_signed((q - 1) * (b64 - i) - 1, a64 - q * i);
                let c = p.mul(c, p.sign((a64 + i) as u64));
                if c != 0 {
                    out.push((c, vec![Gen::P((a64 + b64 - i) as u32), Gen::P(i as u32)]));
                }
            }
        } else {
            debug_assert!(a64 <= q * b64);
            for i in 0..=a64 / q {
                let c = t.binom_signed((q - 1) * (b64 - i), a64 - q * i);
                let c = p.mul(c, p.sign((a64 + i) as u64));
                if c != 0 {
                    out.push((c, vec![Gen::Beta, Gen::P((a64 + b64 - i) as u32), Gen::P(i as u32)]));
                }
            }
            if a64 >= 1 {
                for i in 0..=(a64 - 1) / q {
                    let c = t.binom_signed((q - 1) * (b64 - i) - 1, a64 - q * i - 1);
                    let c = p.mul(c, p.sign((a64 + i - 1) as u64));
                    if c != 0 {
                        out.push((c, vec![Gen::P((a64 + b64 - i) as u32), Gen::Beta, Gen::P(i as u32)]));
                    }
                }
            }
        }
        out
    }

    fn mul_word_gen(&self, w: &[u32], g: Gen) -> Vec<(Vec<u32>, u32)> {
        let p = self.prime();
        let n = w.len();
        match g {
            Gen::Beta => {
                if w[n - 1] == 1 {
                    Vec::new()
                } else {
                    let mut v = w.to_vec();
                    v[n - 1] = 1;
                    vec![(v, 1)]
                }
            }
            Gen::P(0) => vec![(w.to_vec(), 1)],
            Gen::P(b) => {
                if n == 1 {
                    return vec![(vec![w[0], b, 0], 1)];
                }
                let (a, e) = (w[n - 2], w[n - 1]);
                if a as u64 >= p.get() as u64 * b as u64 + e as u64 {
                    let mut v = w.to_vec();
                    v.extend([b, 0]);
                    return vec![(v, 1)];
                }
                let key = (w.to_vec(), g);
                if let Some(hit) = self.memo.lock().unwrap().get(&key) {
                    return hit.clone();
                }
                let prefix = &w[..n - 2];
                let mut acc = Terms::new();
                for (c, gens) in self.adem_relation(a, e, b) {
                    let mut cur: Terms = Terms::from([(prefix.to_vec(), c)]);
                    for &h in &gens {
                        cur = self.mul_terms_gen(&cur, h);
                    }
                    for (v, x) in cur {
                        add_term(p, &mut acc, v, x);
                    }
                }
                let res: Vec<(Vec<u32>, u32)> = acc.into_iter().collect();
                self.memo.lock().unwrap().insert(key, res.clone());
                res
            }
        }
    }

    fn mul_terms_gen(&self, x: &Terms, g: Gen) -> Terms {
        let p = self.prime();
        let mut out = Terms::new();
        for (w, &c) in x {
            for (v, d) in self.mul_word_gen(w, g) {
                add_term(p, &mut out, v, p.mul(c, d));
            }
        }
        out
    }

    /// Right multiplication by one generator.
    pub fn mul_gen(&self, x: &SteenrodElement, g: Gen) -> SteenrodElement {
        SteenrodElement { p: x.p, terms: self.mul_terms_gen(&x.terms, g) }
    }

    /// Product `x·y`.
    pub fn mul(&self, x: &SteenrodElement, y: &SteenrodElement) -> SteenrodElement {
        let p = self.prime();
        let mut out = Terms::new();
        for (w, &c) in &y.terms {
            let mut cur = x.terms.clone();
            for g in word_gens(w) {
                cur = self.mul_terms_gen(&cur, g);
            }
            for (v, d) in cur {
                add_term(p, &mut out, v, p.mul(c, d));
            }
        }
        SteenrodElement { p, terms: out }
    }

    /// Reduces an arbitrary product of generators to the admissible basis.
    pub fn adem_reduce(&self, gens: &[Gen]) -> SteenrodElement {
        let mut cur = SteenrodElement::unit(self.prime());
        for &g in gens {
            cur = self.mul_gen(&cur, g);
            if cur.is_zero() {
                break;
            }
        }
        cur
    }

    pub fn expand_generator_word(&self, w: &GeneratorWord) -> SteenrodElement {
        self.adem_reduce(&w.gens())
    }

    /// Decomposes a homogeneous β-free element as a combination of generator
    /// words of level `k` with at most `max_top` factors `P^{p^k}`.
    pub fn membership_in_word_span(
        &self,
        x: &SteenrodElement,
        k: u32,
        max_top: usize,
        guard: u64,
    ) -> Result<Option<Decomposition>> {
        let p = self.prime();
        if x.is_zero() {
            return Ok(Some(Vec::new()));
        }
        let d = x.degree().ok_or_else(|| Error::OutOfRange("element is not homogeneous".into()))?;
        if d > guard {
            return Err(Error::DegreeGuard { degree: d, guard });
        }
        let q = 2 * (p.get() as u64 - 1);
        if d % q != 0 {
            return Ok(None);
        }
        let basis = basis_in_degree(d, p, guard)?;
        let row: HashMap<&[u32], usize> = basis.iter().enumerate().map(|(j, m)| (m.word(), j)).collect();

        let parts: Vec<u64> = (0..=k).map(|j| (p.get() as u64).pow(j)).collect();
        let mut words = Vec::new();
        let mut columns: Vec<SparseVec> = Vec::new();
        let mut stack = Vec::new();
        self.enumerate_words(
            &parts,
            k,
            max_top,
            d / q,
            &mut stack,
            0,
            SteenrodElement::unit(p),
            &mut |factors, elem| {
                let mut col: SparseVec = elem.terms.iter().map(|(w, &c)| (row[w.as_slice()], c)).collect();
                col.sort_unstable();
                words.push(GeneratorWord { p, k, factors: factors.to_vec() });
                columns.push(col);
            },
        );
        let mut target: SparseVec = x.terms.iter().map(|(w, &c)| (row[w.as_slice()], c)).collect();
        target.sort_unstable();
        let sol = linalg::solve_in_span(p, basis.len(), &columns, &target, linalg::DENSE_ENTRY_LIMIT);
        Ok(sol.map(|s| s.into_iter().map(|(j, c)| (words[j].clone(), FpScalar::new(c as i64, p))).collect()))
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_words(
        &self,
        parts: &[u64],
        k: u32,
        max_top: usize,
        remaining: u64,
        stack: &mut Vec<u32>,
        tops: usize,
        prefix: SteenrodElement,
        emit: &mut dyn FnMut(&[u32], &SteenrodElement),
    ) {
        if remaining == 0 {
            emit(stack, &prefix);
            return;
        }
        for (j, &part) in parts.iter().enumerate() {
            if part > remaining {
                break;
            }
            let top = j as u32 == k;
            if top && tops >= max_top {
                continue;
            }
            let next = self.mul_gen(&prefix, Gen::P(part as u32));
            stack.push(j as u32);
            self.enumerate_words(parts, k, max_top, remaining - part, stack, tops + top as usize, next, emit);
            stack.pop();
        }
    }

    /// Finds a split of `P^n` through `P^a P^{n-a}`, `a` a power of `p`, with
    /// a unit coefficient on `P^n`. `None` for powers of `p` and for `n = 0`.
    pub fn power_split(&self, n: u64) -> Option<PowerSplit> {
        let p = self.prime();
        let q = p.get() as u64;
        if n == 0 || is_power(n, q) {
            return None;
        }
        let mut a = 1u64;
        while a < n {
            let b = n - a;
            if a < q * b {
                let lead = p.mul(self.tables.binom_signed(((q - 1) * b) as i64 - 1, a as i64), p.sign(a));
                if lead != 0 {
                    let rest = (1..=a / q)
                        .filter_map(|t| {
                            let c = self.tables.binom_signed(((q - 1) * (b - t)) as i64 - 1, (a - q * t) as i64);
                            let c = p.mul(c, p.sign(a + t));
                            (c != 0).then_some((t, c))
                        })
                        .collect();
                    return Some(PowerSplit { n, a, lead, rest });
                }
            }
            a *= q;
        }
        None
    }

    /// Split relations for every `P^n` reachable from `targets`.
    pub fn power_relations(&self, targets: &[u64]) -> Result<PowerRelations> {
        let q = self.prime().get() as u64;
        let mut splits = BTreeMap::new();
        let mut todo: Vec<u64> = targets.to_vec();
        while let Some(n) = todo.pop() {
            if n == 0 || is_power(n, q) || splits.contains_key(&n) {
                continue;
            }
            let s = self
                .power_split(n)
                .ok_or_else(|| Error::InvalidMonomial(format!("no split with a unit coefficient for P^{n}")))?;
            todo.push(s.a);
            todo.push(n - s.a);
            for &(t, _) in &s.rest {
                todo.push(n - t);
                todo.push(t);
            }
            splits.insert(n, s);
        }
        Ok(PowerRelations { p: self.prime(), splits })
    }

    /// Re-expands one split relation in the admissible basis.
    pub fn check_power_split(&self, s: &PowerSplit) -> bool {
        let p = self.prime();
        let pp = |x: u64, y: u64| self.adem_reduce(&[Gen::P(x as u32), Gen::P(y as u32)]);
        let mut rhs = pp(s.a, s.n - s.a);
        for &(t, c) in &s.rest {
            rhs = rhs.sub(&pp(s.n - t, t).scale(FpScalar::new(c as i64, p)));
        }
        let lhs = self.adem_reduce(&[Gen::P(s.n as u32)]).scale(FpScalar::new(s.lead as i64, p));
        lhs == rhs
    }

    /// Checks the decomposition lemma for `P^{p^k} P^{(p-1)p^k}` at level `k ≥ 1`.
    pub fn verify_subalg_lemma(&self, k: u32) -> Result<SubalgReport> {
        if k == 0 {
            return Err(Error::OutOfRange("the decomposition lemma needs k >= 1".into()));
        }
        let p = self.prime();
        let q = p.get() as u64;
        let pk = q.pow(k);
        let guard = DEFAULT_DEGREE_GUARD.max(2 * (q - 1) * q * pk);
        let mut checks = Vec::new();

        // (a) the i = 0 coefficient
        let top = (q - 1) * (q - 1) * pk - 1;
        let digits = p.digits(top);
        let expected: Vec<u32> = (0..=k + 1)
            .map(|j| match j.cmp(&k) {
                std::cmp::Ordering::Less => p.get() - 1,
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => p.get() - 2,
            })
            .collect();
        let padded: Vec<u32> = (0..expected.len()).map(|j| digits.get(j).copied().unwrap_or(0)).collect();
        let leading_ok = digits.len() <= expected.len();
        let binom = self.tables.binom(top, pk);
        checks.push(SubCheck {
            name: "leading binomial vanishes".into(),
            pass: binom == 0 && padded == expected && leading_ok,
            detail: format!("C({top}, {pk}) = {binom} mod {p}; digits {padded:?}, expected {expected:?}"),
            index: Some(0),
        });

        // (b) Adem expansion against the closed form
        let product = self.adem_reduce(&[Gen::P(pk as u32), Gen::P(((q - 1) * pk) as u32)]);
        let mut printed = SteenrodElement::zero(p);
        let mut coeffs = Vec::new();
        for i in 0..=pk / q {
            let c = self.tables.binom_signed(((q - 1) * ((q - 1) * pk - i)) as i64 - 1, (pk - q * i) as i64);
            let c = p.mul(c, p.sign(pk + i));
            coeffs.push((i, c));
            if c != 0 {
                let m = AdmissibleMonomial::new(p, canonical_pp(q * pk - i, i))?;
                printed = printed.add(&SteenrodElement::monomial(&m).scale(FpScalar::new(c as i64, p)));
            }
        }
        checks.push(SubCheck {
            name: "Adem expansion matches the closed form".into(),
            pass: printed == product,
            detail: format!("{product}"),
            index: None,
        });

        // (c) witnesses for each surviving summand
        let surviving: Vec<(u64, u32)> = coeffs.iter().copied().filter(|&(i, c)| i > 0 && c != 0).collect();
        let parts: Vec<u64> = (0..=k).map(|j| q.pow(j)).collect();
        if surviving.iter().any(|&(i, _)| word_count(q * pk - i, &parts) > FLAT_WORD_BUDGET) {
            return self.subalg_by_relations(k, product, &surviving, checks);
        }
        let mut witness: Vec<(FpScalar, Decomposition, Decomposition)> = Vec::new();
        for &(i, c) in &surviving {
            let left = self.adem_reduce(&[Gen::P((q * pk - i) as u32)]);
            let right = self.adem_reduce(&[Gen::P(i as u32)]);
            let lw = self.membership_in_word_span(&left, k, q as usize, guard)?;
            let rw = self.membership_in_word_span(&right, k - 1, usize::MAX, guard)?;
            match (lw, rw) {
                (Some(lw), Some(rw)) => {
                    checks.push(SubCheck {
                        name: "summand decomposes over lower levels".into(),
                        pass: true,
                        detail: format!("P^{} by {} words, P^{i} by {} words", q * pk - i, lw.len(), rw.len()),
                        index: Some(i),
                    });
                    witness.push((FpScalar::new(c as i64, p), lw, rw));
                }
                (lw, rw) => {
                    checks.push(SubCheck {
                        name: "summand decomposes over lower levels".into(),
                        pass: false,
                        detail: format!(
                            "left witness {}, right witness {}",
                            if lw.is_some() { "found" } else { "missing" },
                            if rw.is_some() { "found" } else { "missing" }
                        ),
                        index: Some(i),
                    });
                }
            }
        }

        // recombine and re-expand
        let mut combined: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        for (c, lw, rw) in &witness {
            for (a, ca) in lw {
                for (b, cb) in rw {
                    let mut f = a.factors.clone();
                    f.extend(&b.factors);
                    let v = (*c * *ca * *cb).value();
                    let e = combined.entry(f).or_insert(0);
                    *e = p.add(*e, v);
                }
            }
        }
        combined.retain(|_, v| *v != 0);
        let decomposition: Decomposition = combined
            .into_iter()
            .map(|(f, c)| (GeneratorWord { p, k, factors: f }, FpScalar::new(c as i64, p)))
            .collect();
        let mut re = SteenrodElement::zero(p);
        for (w, c) in &decomposition {
            re = re.add(&self.expand_generator_word(w).scale(*c));
        }
        let max_top = decomposition.iter().map(|(w, _)| w.top_count()).max().unwrap_or(0);
        checks.push(SubCheck {
            name: "witness re-expands to the product".into(),
            pass: re == product,
            detail: format!("{} generator words", decomposition.len()),
            index: None,
        });
        checks.push(SubCheck {
            name: "at most p factors of the top generator".into(),
            pass: max_top <= q as usize,
            detail: format!("max {max_top} <= {q}"),
            index: None,
        });
        Ok(SubalgReport { p, k, product, decomposition, relations: None, max_top_factors: max_top, checks })
    }

    fn subalg_by_relations(
        &self,
        k: u32,
        product: SteenrodElement,
        surviving: &[(u64, u32)],
        mut checks: Vec<SubCheck>,
    ) -> Result<SubalgReport> {
        let p = self.prime();
        let q = p.get() as u64;
        let pk = q.pow(k);
        let mut targets = Vec::new();
        for &(i, _) in surviving {
            targets.extend([q * pk - i, i]);
        }
        let rel = self.power_relations(&targets)?;
        for &(i, _) in surviving {
            let (left, right) = (rel.level(q * pk - i), rel.level(i));
            checks.push(SubCheck {
                name: "summand decomposes over lower levels".into(),
                pass: left.is_none_or(|l| l <= k) && right.is_none_or(|l| l < k),
                detail: format!("P^{} reaches level {left:?}, P^{i} reaches level {right:?}", q * pk - i),
                index: Some(i),
            });
        }
        let bad: Vec<u64> = rel.splits.values().filter(|s| !self.check_power_split(s)).map(|s| s.n).collect();
        checks.push(SubCheck {
            name: "split relations hold".into(),
            pass: bad.is_empty(),
            detail: format!("{} relations, failing at {bad:?}", rel.splits.len()),
            index: None,
        });
        let max_top = surviving.iter().map(|&(i, _)| rel.max_top(q * pk - i, k) + rel.max_top(i, k)).max().unwrap_or(0);
        checks.push(SubCheck {
            name: "at most p factors of the top generator".into(),
            pass: max_top <= q as usize,
            detail: format!("max {max_top} <= {q}"),
            index: None,
        });
        Ok(SubalgReport {
            p,
            k,
            product,
            decomposition: Vec::new(),
            relations: Some(rel),
            max_top_factors: max_top,
            checks,
        })
    }
}

fn is_power(n: u64, q: u64) -> bool {
    let mut m = n;
    while m > 1 && m.is_multiple_of(q) {
        m /= q;
    }
    m == 1
}

/// Number of ordered words in the parts `1, p, ..., p^k` summing to `d`,
/// saturating.
fn word_count(d: u64, parts: &[u64]) -> u64 {
    let mut ways = vec![0u64; d as usize + 1];
    ways[0] = 1;
    for s in 1..=d as usize {
        ways[s] =
            parts.iter().filter(|&&x| x as usize <= s).fold(0u64, |acc, &x| acc.saturating_add(ways[s - x as usize]));
    }
    ways[d as usize]
}

// P^a P^b as a raw word, dropping P^0.
fn canonical_pp(a: u64, b: u64) -> Vec<u32> {
    let mut w = vec![0];
    for s in [a, b] {
        if s > 0 {
            w.extend([s as u32, 0]);
        }
    }
    w
}

/// Admissible monomials of degree `d`, in descending lexicographic order of
/// their words. Refuses degrees above `guard`.
pub fn basis_in_degree(d: u64, p: Prime, guard: u64) -> Result<Vec<AdmissibleMonomial>> {
    if d > guard {
        return Err(Error::DegreeGuard { degree: d, guard });
    }
    let q = 2 * (p.get() as u64 - 1);
    let mut out = Vec::new();
    // Left to right: each s bounds the next one by (s - ε)/p.
    fn go(rem: u64, q: u64, p: u64, word: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let last = word.len() - 1;
        for eps in [1u64, 0] {
            if eps > rem {
                continue;
            }
            word[last] = eps as u32;
            let rem = rem - eps;
            if rem == 0 {
                out.push(word.clone());
                continue;
            }
            let mut upper = rem / q;
            if last > 0 {
                upper = upper.min((word[last - 1] as u64).saturating_sub(eps) / p);
            }
            for s in (1..=upper).rev() {
                word.extend([s as u32, 0]);
                go(rem - s * q, q, p, word, out);
                word.truncate(last + 1);
            }
        }
        word[last] = 0;
    }
    let mut word = vec![0u32];
    go(d, q, p.get() as u64, &mut word, &mut out);
    out.sort_unstable_by(|a, b| b.cmp(a));
    Ok(out.into_iter().map(|word| AdmissibleMonomial { p, word }).collect())
}

/// A product of generators `P^{p^j}`, `j ≤ k`, of the subalgebra `A_p(k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneratorWord {
    pub p: Prime,
    pub k: u32,
    /// Exponent `j` of each factor `P^{p^j}`.
    pub factors: Vec<u32>,
}

impl GeneratorWord {
    pub fn new(p: Prime, k: u32, factors: Vec<u32>) -> Result<GeneratorWord> {
        if let Some(&j) = factors.iter().find(|&&j| j > k) {
            return Err(Error::InvalidMonomial(format!("factor P^(p^{j}) is outside level {k}")));
        }
        Ok(GeneratorWord { p, k, factors })
    }

    pub fn gens(&self) -> Vec<Gen> {
        self.factors.iter().map(|&j| Gen::P(self.p.get().pow(j))).collect()
    }

    /// Number of factors equal to the top generator `P^{p^k}`.
    pub fn top_count(&self) -> usize {
        self.factors.iter().filter(|&&j| j == self.k).count()
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.gens().iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Coefficients on generator words.
pub type Decomposition = Vec<(GeneratorWord, FpScalar)>;

/// `P^n` solved from the Adem relation for `P^a P^{n-a}`:
/// `lead · P^n = P^a P^{n-a} - Σ_{(t, c) ∈ rest} c · P^{n-t} P^t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub n: u64,
    pub a: u64,
    pub lead: u32,
    pub rest: Vec<(u64, u32)>,
}

/// Split relations reducing a set of reduced powers to the generators
/// `P^{p^j}`. This is a factored witness: expanding it into generator words
/// is exponential, while each relation is checked on its own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerRelations {
    pub p: Prime,
    pub splits: BTreeMap<u64, PowerSplit>,
}

impl PowerRelations {
    /// Largest `j` with `P^{p^j}` among the leaves below `P^n`.
    pub fn level(&self, n: u64) -> Option<u32> {
        let mut memo = HashMap::new();
        self.fold(n, &mut memo, &|leaf| Some(leaf.ilog(self.p.get() as u64)), &|a, b| a.max(b), &|a, b| a.max(b))
    }

    /// Upper bound on the number of factors `P^{p^k}` in any word of the
    /// expansion of `P^n`.
    pub fn max_top(&self, n: u64, k: u32) -> usize {
        let top = (self.p.get() as u64).pow(k);
        let mut memo = HashMap::new();
        self.fold(n, &mut memo, &|leaf| Some(usize::from(leaf == top)), &|a, b| a + b, &|a, b| a.max(b)).unwrap_or(0)
    }

    fn fold<T: Copy>(
        &self,
        n: u64,
        memo: &mut HashMap<u64, Option<T>>,
        leaf: &dyn Fn(u64) -> Option<T>,
        product: &dyn Fn(T, T) -> T,
        join: &dyn Fn(T, T) -> T,
    ) -> Option<T> {
        if n == 0 {
            return None;
        }
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        let v = match self.splits.get(&n) {
            None => leaf(n),
            Some(s) => {
                let mut pairs = vec![(s.a, n - s.a)];
                pairs.extend(s.rest.iter().map(|&(t, _)| (n - t, t)));
                let mut acc: Option<T> = None;
                for (x, y) in pairs {
                    let vx = self.fold(x, memo, leaf, product, join);
                    let vy = self.fold(y, memo, leaf, product, join);
                    let term = match (vx, vy) {
                        (Some(a), Some(b)) => Some(product(a, b)),
                        (a, b) => a.or(b),
                    };
                    acc = match (acc, term) {
                        (Some(a), Some(b)) => Some(join(a, b)),
                        (a, b) => a.or(b),
                    };
                }
                acc
            }
        };
        memo.insert(n, v);
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Summation index the check refers to, when there is one.
    pub index: Option<u64>,
}

/// Outcome of the decomposition lemma check, with its witness.
#[derive(Clone, Debug)]
pub struct SubalgReport {
    pub p: Prime,
    pub k: u32,
    pub product: SteenrodElement,
    /// Flat witness over generator words, when the word enumeration is small.
    pub decomposition: Decomposition,
    /// Factored witness used otherwise.
    pub relations: Option<PowerRelations>,
    pub max_top_factors: usize,
    pub checks: Vec<SubCheck>,
}

impl SubalgReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&SubCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// One-shot reduction with a fresh engine.
pub fn adem_reduce(p: Prime, gens: &[Gen]) -> SteenrodElement {
    SteenrodAlgebra::new(p).adem_reduce(gens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn degrees() {
        let p = p3();
        assert_eq!(AdmissibleMonomial::unit(p).degree(), 0);
        assert_eq!(AdmissibleMonomial::new(p, vec![0, 1, 0]).unwrap().degree(), 4);
        assert_eq!(AdmissibleMonomial::new(p, vec![1, 3, 0]).unwrap().degree(), 13);
        assert!(AdmissibleMonomial::new(p, vec![0, 1, 0, 1, 0]).is_err());
    }

    #[test]
    fn small_relations() {
        let p = p3();
        let alg = SteenrodAlgebra::new(p);
        assert_eq!(alg.adem_reduce(&parse_word("P1 P1").unwrap()).to_string(), "2 P^2");
        assert_eq!(alg.adem_reduce(&parse_word("P3 P6").unwrap()).to_string(), "P^8 P^1");
        assert!(alg.adem_reduce(&parse_word("b b").unwrap()).is_zero());
        assert_eq!(alg.adem_reduce(&parse_word("b P3 P1").unwrap()).to_string(), "b P^3 P^1");
        assert_eq!(alg.adem_reduce(&[Gen::P(0)]), SteenrodElement::unit(p));
    }

    #[test]
    fn basis_small_degrees() {
        let p = p3();
        let show = |d| basis_in_degree(d, p, 200).unwrap().iter().map(|m| m.to_string()).collect::<Vec<_>>();
        assert_eq!(show(0), ["1"]);
        assert_eq!(show(4), ["P^1"]);
        assert_eq!(show(5), ["b P^1", "P^1 b"]);
        assert!(show(2).is_empty());
        assert!(basis_in_degree(201, p, 200).is_err());
    }

    #[test]
    fn membership_examples() {
        let p = p3();
        let alg = SteenrodAlgebra::new(p);
        let unit = SteenrodElement::unit(p);
        let d = alg.membership_in_word_span(&unit, 1, 3, 200).unwrap().unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].0.factors.is_empty());
        let p2 = alg.adem_reduce(&[Gen::P(2)]);
        let d = alg.membership_in_word_span(&p2, 0, 3, 200).unwrap().unwrap();
        assert_eq!(d, vec![(GeneratorWord { p, k: 0, factors: vec![0, 0] }, FpScalar::new(2, p))]);
        // P^3 is indecomposable, so not reachable from P^1 alone
        let p3e = alg.adem_reduce(&[Gen::P(3)]);
        assert!(alg.membership_in_word_span(&p3e, 0, 3, 200).unwrap().is_none());
    }

    #[test]
    fn json_round_trip() {
        let p = p3();
        let x = adem_reduce(p, &parse_word("P1 P1 P1").unwrap()).add(&adem_reduce(p, &parse_word("b P2").unwrap()));
        let s = serde_json::to_string(&x).unwrap();
        let y: SteenrodElement = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
        assert!(serde_json::from_str::<SteenrodElement>(r#"{"p":3,"terms":[{"word":[0,1,0,1,0],"coeff":1}]}"#).is_err());
    }

    #[test]
    fn split_relations_cover_every_power() {
        for q in [3u64, 5] {
            let alg = SteenrodAlgebra::new(Prime::new(q).unwrap());
            let targets: Vec<u64> = (1..=q * q * q).collect();
            let rel = alg.power_relations(&targets).unwrap();
            assert!(rel.splits.values().all(|s| alg.check_power_split(s)));
            for n in targets {
                let level = rel.level(n).unwrap();
                assert!(q.pow(level) <= n && n < q.pow(level + 1), "P^{n} reaches level {level}");
            }
        }
    }

    #[test]
    fn subalg_switches_to_relations_for_large_levels() {
        let alg = SteenrodAlgebra::new(p3());
        let small = alg.verify_subalg_lemma(2).unwrap();
        assert!(small.pass() && small.relations.is_none() && !small.decomposition.is_empty());
        let large = alg.verify_subalg_lemma(4).unwrap();
        assert!(large.pass(), "{:?}", large.first_failure());
        assert!(large.relations.is_some() && large.max_top_factors <= 3);
    }
}
