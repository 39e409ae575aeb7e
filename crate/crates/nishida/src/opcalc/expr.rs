//! Expression trees. Cohomology trees are built from dual Dyer-Lashof
//! operations `Q^r`, dual Browder operations `L^{n-1}` and the star product;
//! homology trees from `Q_r`, `L_{n-1}` and the Pontryagin product.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::Prime;
use crate::steenrod::{format_word, Gen};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cohomology,
    Homology,
}

/// A named class of fixed degree living in column `weight`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormalClass {
    pub name: String,
    pub degree: i64,
    pub side: Side,
    pub weight: u32,
    /// How many times the class is a suspension `σ(...)` of the base class.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub suspensions: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl FormalClass {
    pub fn cohomology(name: impl Into<String>, degree: i64, weight: u32) -> FormalClass {
        FormalClass { name: name.into(), degree, side: Side::Cohomology, weight, suspensions: 0 }
    }

    pub fn homology(name: impl Into<String>, degree: i64, weight: u32) -> FormalClass {
        FormalClass { name: name.into(), degree, side: Side::Homology, weight, suspensions: 0 }
    }

    /// `σx`, one degree higher.
    pub fn suspend(&self) -> FormalClass {
        FormalClass { degree: self.degree + 1, suspensions: self.suspensions + 1, ..self.clone() }
    }

    /// `x` from `σx`; `None` when the class is not a suspension.
    pub fn desuspend(&self) -> Option<FormalClass> {
        (self.suspensions > 0).then(|| FormalClass {
            degree: self.degree - 1,
            suspensions: self.suspensions - 1,
            ..self.clone()
        })
    }
}

impl fmt::Display for FormalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.suspensions {
            write!(f, "s(")?;
        }
        write!(f, "{}", self.name)?;
        for _ in 0..self.suspensions {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Dimension `n` of the little cubes, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ambient {
    Finite(u32),
    Infinite,
}

impl Ambient {
    pub fn new(n: u32) -> Result<Ambient> {
        if n == 0 {
            return Err(Error::OutOfRange("cube dimension must be at least 1".into()));
        }
        Ok(Ambient::Finite(n))
    }

    /// `(n-1)(p-1)`, the index of the top operation.
    pub fn top_index(self, p: Prime) -> Option<u64> {
        match self {
            Ambient::Finite(n) => Some((n as u64 - 1) * (p.get() as u64 - 1)),
            Ambient::Infinite => None,
        }
    }

    /// Degree raised by a binary Browder operation, `n - 1`.
    pub fn browder_shift(self) -> Option<i64> {
        match self {
            Ambient::Finite(n) => Some(n as i64 - 1),
            Ambient::Infinite => None,
        }
    }

    pub fn raise(self) -> Ambient {
        match self {
            Ambient::Finite(n) => Ambient::Finite(n + 1),
            Ambient::Infinite => Ambient::Infinite,
        }
    }

    pub fn lower(self) -> Result<Ambient> {
        match self {
            Ambient::Finite(n) if n >= 2 => Ok(Ambient::Finite(n - 1)),
            Ambient::Finite(_) => Err(Error::OutOfRange("cannot lower the cube dimension below 1".into())),
            Ambient::Infinite => Ok(Ambient::Infinite),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::Finite(n) => write!(f, "{n}"),
            Ambient::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AmbientRepr {
    Finite(u32),
    Named(String),
}

impl Serialize for Ambient {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Ambient::Finite(n) => AmbientRepr::Finite(n),
            Ambient::Infinite => AmbientRepr::Named("inf".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ambient {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match AmbientRepr::deserialize(d)? {
            AmbientRepr::Finite(n) => Ambient::new(n).map_err(serde::de::Error::custom),
            AmbientRepr::Named(s) if s == "inf" => Ok(Ambient::Infinite),
            AmbientRepr::Named(s) => Err(serde::de::Error::custom(format!("bad cube dimension {s:?}"))),
        }
    }
}

mod word_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::steenrod::{format_word, parse_word, Gen};

    pub fn serialize<S: Serializer>(gens: &[Gen], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_word(gens))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Gen>, D::Error> {
        let text = String::deserialize(d)?;
        parse_word(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Term<E> {
    pub coeff: u32,
    pub expr: E,
}

/// Cohomology expression. A leaf carries a Steenrod word applied to the
/// class, rightmost factor first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum CohExpr {
    Leaf {
        class: FormalClass,
        #[serde(default, with = "word_serde", skip_serializing_if = "Vec::is_empty")]
        ops: Vec<Gen>,
    },
    DualQ {
        r: u32,
        arg: Box<CohExpr>,
    },
    /// `L^{n-1}(x_1 ⊗ ... ⊗ x_k)`.
    DualBrowder {
        args: Vec<CohExpr>,
    },
    Star {
        args: Vec<CohExpr>,
    },
    Sum {
        terms: Vec<Term<CohExpr>>,
    },
}

impl CohExpr {
    pub fn leaf(class: FormalClass) -> CohExpr {
        CohExpr::Leaf { class, ops: Vec::new() }
    }

    pub fn leaf_with(class: FormalClass, ops: Vec<Gen>) -> CohExpr {
        CohExpr::Leaf { class, ops }
    }

    pub fn q(r: u32, arg: CohExpr) -> CohExpr {
        CohExpr::DualQ { r, arg: Box::new(arg) }
    }

    pub fn browder(args: Vec<CohExpr>) -> CohExpr {
        CohExpr::DualBrowder { args }
    }

    pub fn star(args: Vec<CohExpr>) -> CohExpr {
        CohExpr::Star { args }
    }

    pub fn zero() -> CohExpr {
        CohExpr::Sum { terms: Vec::new() }
    }

    pub fn sum(terms: impl IntoIterator<Item = (u32, CohExpr)>) -> CohExpr {
        CohExpr::Sum { terms: terms.into_iter().map(|(coeff, expr)| Term { coeff, expr }).collect() }
    }

    /// True for the empty sum. Other zero expressions are detected by
    /// canonicalisation.
    pub fn is_zero(&self) -> bool {
        matches!(self, CohExpr::Sum { terms } if terms.is_empty())
    }

    /// The summands of a sum, or the expression itself with coefficient one.
    pub fn summands(&self) -> Vec<(u32, &CohExpr)> {
        match self {
            CohExpr::Sum { terms } => terms.iter().map(|t| (t.coeff, &t.expr)).collect(),
            e => vec![(1, e)],
        }
    }
}

/// Homology expression. A leaf `(y, θ)` stands for the class with
/// `<u, (y, θ)> = <θ·u, y>`, so the dual Steenrod operations and the
/// homology Bockstein act by appending to `θ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum HomExpr {
    Unit,
    Leaf {
        class: FormalClass,
        #[serde(default, with = "word_serde", skip_serializing_if = "Vec::is_empty")]
        theta: Vec<Gen>,
    },
    Q {
        r: u32,
        arg: Box<HomExpr>,
    },
    Browder {
        left: Box<HomExpr>,
        right: Box<HomExpr>,
    },
    Pontryagin {
        args: Vec<HomExpr>,
    },
    Beta {
        arg: Box<HomExpr>,
    },
    Sum {
        terms: Vec<Term<HomExpr>>,
    },
}

impl HomExpr {
    pub fn leaf(class: FormalClass) -> HomExpr {
        HomExpr::Leaf { class, theta: Vec::new() }
    }

    pub fn q(r: u32, arg: HomExpr) -> HomExpr {
        HomExpr::Q { r, arg: Box::new(arg) }
    }

    pub fn browder(left: HomExpr, right: HomExpr) -> HomExpr {
        HomExpr::Browder { left: Box::new(left), right: Box::new(right) }
    }

    pub fn product(args: Vec<HomExpr>) -> HomExpr {
        HomExpr::Pontryagin { args }
    }

    pub fn zero() -> HomExpr {
        HomExpr::Sum { terms: Vec::new() }
    }

    pub fn sum(terms: impl IntoIterator<Item = (u32, HomExpr)>) -> HomExpr {
        HomExpr::Sum { terms: terms.into_iter().map(|(coeff, expr)| Term { coeff, expr }).collect() }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, HomExpr::Sum { terms } if terms.is_empty())
    }

    pub fn summands(&self) -> Vec<(u32, &HomExpr)> {
        match self {
            HomExpr::Sum { terms } => terms.iter().map(|t| (t.coeff, &t.expr)).collect(),
            e => vec![(1, e)],
        }
    }
}

/// A cohomology expression together with its prime and cube dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpExpression {
    pub p: Prime,
    pub n: Ambient,
    pub root: CohExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyExpression {
    pub p: Prime,
    pub n: Ambient,
    pub root: HomExpr,
}

fn needs_parens_coh(e: &CohExpr) -> bool {
    match e {
        CohExpr::Sum { terms } => terms.len() != 1 || terms[0].coeff != 1,
        CohExpr::Star { .. } => true,
        CohExpr::Leaf { ops, .. } => !ops.is_empty(),
        _ => false,
    }
}

fn write_terms<E: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    terms: &[Term<E>],
    parens: impl Fn(&E) -> bool,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (j, t) in terms.iter().enumerate() {
        if j > 0 {
            write!(f, " + ")?;
        }
        if t.coeff != 1 {
            write!(f, "{} ", t.coeff)?;
            if parens(&t.expr) {
                write!(f, "({})", t.expr)?;
                continue;
            }
        }
        write!(f, "{}", t.expr)?;
    }
    Ok(())
}

impl fmt::Display for CohExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CohExpr::Leaf { class, ops } if ops.is_empty() => write!(f, "{class}"),
            CohExpr::Leaf { class, ops } => write!(f, "{} {class}", format_word(ops)),
            CohExpr::DualQ { r, arg } => write!(f, "Q^{r}({arg})"),
            CohExpr::DualBrowder { args } => {
                write!(f, "L(")?;
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        write!(f, " (x) ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            CohExpr::Star { args } => {
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        write!(f, " * ")?;
                    }
                    if needs_parens_coh(a) {
                        write!(f, "({a})")?;
                    } else {
                        write!(f, "{a}")?;
                    }
                }
                Ok(())
            }
            CohExpr::Sum { terms } => {
                write_terms(f, terms, |e| matches!(e, CohExpr::Star { .. } | CohExpr::Sum { .. }))
            }
        }
    }
}

impl fmt::Display for HomExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomExpr::Unit => write!(f, "1"),
            HomExpr::Leaf { class, theta } => {
                // (y, θ) is written with lower-index operations, last applied first.
                for g in theta.iter().rev() {
                    match g {
                        Gen::Beta => write!(f, "b ")?,
                        Gen::P(s) => write!(f, "P_{s} ")?,
                    }
                }
                write!(f, "{class}")
            }
            HomExpr::Q { r, arg } => write!(f, "Q_{r}({arg})"),
            HomExpr::Browder { left, right } => write!(f, "L({left}, {right})"),
            HomExpr::Pontryagin { args } => {
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        write!(f, " # ")?;
                    }
                    if matches!(a, HomExpr::Pontryagin { .. } | HomExpr::Sum { .. }) {
                        write!(f, "({a})")?;
                    } else {
                        write!(f, "{a}")?;
                    }
                }
                Ok(())
            }
            HomExpr::Beta { arg } => write!(f, "b({arg})"),
            HomExpr::Sum { terms } => {
                write_terms(f, terms, |e| matches!(e, HomExpr::Pontryagin { .. } | HomExpr::Sum { .. }))
            }
        }
    }
}

impl fmt::Display for OpExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for HomologyExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}
