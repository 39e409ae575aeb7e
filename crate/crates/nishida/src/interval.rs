//! Closed integer intervals of degrees.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeInterval {
    Empty,
    Range { lo: i64, hi: i64 },
}

impl DegreeInterval {
    /// `[lo, hi]`, or empty when `lo > hi`.
    pub fn new(lo: i64, hi: i64) -> DegreeInterval {
        if lo > hi {
            DegreeInterval::Empty
        } else {
            DegreeInterval::Range { lo, hi }
        }
    }

    pub fn point(d: i64) -> DegreeInterval {
        DegreeInterval::Range { lo: d, hi: d }
    }

    pub fn is_empty(self) -> bool {
        matches!(self, DegreeInterval::Empty)
    }

    pub fn lo(self) -> Option<i64> {
        match self {
            DegreeInterval::Range { lo, .. } => Some(lo),
            DegreeInterval::Empty => None,
        }
    }

    pub fn hi(self) -> Option<i64> {
        match self {
            DegreeInterval::Range { hi, .. } => Some(hi),
            DegreeInterval::Empty => None,
        }
    }

    pub fn bounds(self) -> Option<(i64, i64)> {
        match self {
            DegreeInterval::Range { lo, hi } => Some((lo, hi)),
            DegreeInterval::Empty => None,
        }
    }

    pub fn contains(self, d: i64) -> bool {
        matches!(self, DegreeInterval::Range { lo, hi } if lo <= d && d <= hi)
    }

    pub fn shift(self, n: i64) -> DegreeInterval {
        match self {
            DegreeInterval::Range { lo, hi } => DegreeInterval::Range { lo: lo + n, hi: hi + n },
            DegreeInterval::Empty => DegreeInterval::Empty,
        }
    }

    /// Degrees of products: the Minkowski sum.
    pub fn sum(self, other: DegreeInterval) -> DegreeInterval {
        match (self, other) {
            (DegreeInterval::Range { lo: a, hi: b }, DegreeInterval::Range { lo: c, hi: d }) => {
                DegreeInterval::Range { lo: a + c, hi: b + d }
            }
            _ => DegreeInterval::Empty,
        }
    }

    /// Smallest interval containing both.
    pub fn hull(self, other: DegreeInterval) -> DegreeInterval {
        match (self, other) {
            (DegreeInterval::Empty, x) | (x, DegreeInterval::Empty) => x,
            (DegreeInterval::Range { lo: a, hi: b }, DegreeInterval::Range { lo: c, hi: d }) => {
                DegreeInterval::Range { lo: a.min(c), hi: b.max(d) }
            }
        }
    }

    pub fn intersect(self, other: DegreeInterval) -> DegreeInterval {
        match (self, other) {
            (DegreeInterval::Range { lo: a, hi: b }, DegreeInterval::Range { lo: c, hi: d }) => {
                DegreeInterval::new(a.max(c), b.min(d))
            }
            _ => DegreeInterval::Empty,
        }
    }

    pub fn width(self) -> i64 {
        match self {
            DegreeInterval::Range { lo, hi } => hi - lo + 1,
            DegreeInterval::Empty => 0,
        }
    }
}

impl fmt::Display for DegreeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeInterval::Range { lo, hi } => write!(f, "[{lo}, {hi}]"),
            DegreeInterval::Empty => write!(f, "[]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_not_a_point() {
        assert_ne!(DegreeInterval::new(0, 0), DegreeInterval::Empty);
        assert!(DegreeInterval::new(1, 0).is_empty());
        assert_eq!(DegreeInterval::new(2, 3).sum(DegreeInterval::new(10, 20)), DegreeInterval::new(12, 23));
        assert!(DegreeInterval::new(0, 5).intersect(DegreeInterval::new(6, 9)).is_empty());
        assert_eq!(DegreeInterval::Empty.hull(DegreeInterval::point(4)), DegreeInterval::point(4));
    }
}
