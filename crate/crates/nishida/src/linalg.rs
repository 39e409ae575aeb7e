//! Linear solving over F_p: is a target vector in the span of a family of
//! columns, and with which coefficients.
//!
//! Small systems go through a dense row reduction; large column families are
//! folded into a sparse incremental echelon form that stops as soon as the
//! rank saturates.

use std::collections::BTreeMap;

use crate::fp::Prime;

/// Sparse vector as sorted `(index, coefficient)` pairs with nonzero coefficients.
pub type SparseVec = Vec<(usize, u32)>;

/// Default cut-over from dense to sparse elimination, in matrix entries.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 16;

/// Finds coefficients `c_j` with `Σ c_j columns[j] = target`. Returns the
/// nonzero coefficients keyed by column index, or `None` when the target is
/// outside the span.
pub fn solve_in_span(
    p: Prime,
    dim: usize,
    columns: &[SparseVec],
    target: &SparseVec,
    dense_entry_limit: usize,
) -> Option<Vec<(usize, u32)>> {
    if dim.saturating_mul(columns.len() + 1) <= dense_entry_limit {
        dense_solve(p, dim, columns, target)
    } else {
        sparse_solve(p, columns, target)
    }
}

/// Rank of the column family.
pub fn rank(p: Prime, columns: &[SparseVec]) -> usize {
    let mut ech = Echelon::new(p);
    for (j, c) in columns.iter().enumerate() {
        ech.insert(j, c);
    }
    ech.pivots.len()
}

fn dense_solve(p: Prime, dim: usize, columns: &[SparseVec], target: &SparseVec) -> Option<Vec<(usize, u32)>> {
    let ncols = columns.len();
    let width = ncols + 1;
    let mut m = vec![0u32; dim * width];
    for (j, col) in columns.iter().enumerate() {
        for &(i, v) in col {
            m[i * width + j] = v;
        }
    }
    for &(i, v) in target {
        m[i * width + ncols] = v;
    }
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == dim {
            break;
        }
        let Some(pr) = (row..dim).find(|&r| m[r * width + col] != 0) else { continue };
        if pr != row {
            for c in 0..width {
                m.swap(pr * width + c, row * width + c);
            }
        }
        let inv = p.inv(m[row * width + col]).expect("pivot is nonzero");
        for c in 0..width {
            m[row * width + c] = p.mul(m[row * width + c], inv);
        }
        for r in 0..dim {
            if r != row {
                let f = m[r * width + col];
                if f != 0 {
                    for c in 0..width {
                        let sub = p.mul(f, m[row * width + c]);
                        m[r * width + c] = p.sub(m[r * width + c], sub);
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    if (row..dim).any(|r| m[r * width + ncols] != 0) {
        return None;
    }
    let mut out: Vec<(usize, u32)> = pivot_cols
        .iter()
        .enumerate()
        .filter_map(|(r, &c)| {
            let v = m[r * width + ncols];
            (v != 0).then_some((c, v))
        })
        .collect();
    out.sort_unstable();
    Some(out)
}

struct Pivot {
    row: usize,
    vec: BTreeMap<usize, u32>,
    combo: BTreeMap<usize, u32>,
}

struct Echelon {
    p: Prime,
    pivots: Vec<Pivot>,
}

fn axpy(p: Prime, dst: &mut BTreeMap<usize, u32>, f: u32, src: &BTreeMap<usize, u32>) {
    for (&k, &v) in src {
        let e = dst.entry(k).or_insert(0);
        *e = p.add(*e, p.mul(f, v));
        if *e == 0 {
            dst.remove(&k);
        }
    }
}

impl Echelon {
    fn new(p: Prime) -> Echelon {
        Echelon { p, pivots: Vec::new() }
    }

    fn reduce(&self, v: &mut BTreeMap<usize, u32>, combo: &mut BTreeMap<usize, u32>) {
        let p = self.p;
        for piv in &self.pivots {
            if let Some(&c) = v.get(&piv.row) {
                let f = p.neg(c);
                axpy(p, v, f, &piv.vec);
                axpy(p, combo, f, &piv.combo);
            }
        }
    }

    /// Inserts a column; returns true when it raised the rank.
    fn insert(&mut self, index: usize, col: &SparseVec) -> bool {
        let p = self.p;
        let mut v: BTreeMap<usize, u32> = col.iter().copied().filter(|&(_, x)| x != 0).collect();
        let mut combo = BTreeMap::from([(index, 1u32)]);
        self.reduce(&mut v, &mut combo);
        let Some((&row, &lead)) = v.iter().next() else { return false };
        let inv = p.inv(lead).expect("nonzero lead");
        for x in v.values_mut() {
            *x = p.mul(*x, inv);
        }
        for x in combo.values_mut() {
            *x = p.mul(*x, inv);
        }
        for piv in &mut self.pivots {
            if let Some(&c) = piv.vec.get(&row) {
                let f = p.neg(c);
                axpy(p, &mut piv.vec, f, &v);
                axpy(p, &mut piv.combo, f, &combo);
            }
        }
        self.pivots.push(Pivot { row, vec: v, combo });
        true
    }
}

fn sparse_solve(p: Prime, columns: &[SparseVec], target: &SparseVec) -> Option<Vec<(usize, u32)>> {
    let mut ech = Echelon::new(p);
    let support: Vec<usize> = target.iter().map(|&(i, _)| i).collect();
    let max_rank = columns.iter().flat_map(|c| c.iter().map(|&(i, _)| i)).chain(support).max().map_or(0, |m| m + 1);
    for (j, c) in columns.iter().enumerate() {
        ech.insert(j, c);
        if ech.pivots.len() == max_rank {
            break;
        }
    }
    let mut t: BTreeMap<usize, u32> = target.iter().copied().filter(|&(_, x)| x != 0).collect();
    let mut combo = BTreeMap::new();
    ech.reduce(&mut t, &mut combo);
    if !t.is_empty() {
        return None;
    }
    // t - Σ ... = 0 was tracked with negated factors; flip the sign back.
    Some(combo.into_iter().map(|(k, v)| (k, p.neg(v))).filter(|&(_, v)| v != 0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(p: Prime, cols: &[SparseVec], target: &SparseVec, sol: &[(usize, u32)]) {
        let mut acc = BTreeMap::new();
        for &(j, c) in sol {
            let v: BTreeMap<usize, u32> = cols[j].iter().copied().collect();
            axpy(p, &mut acc, c, &v);
        }
        let t: BTreeMap<usize, u32> = target.iter().copied().collect();
        assert_eq!(acc, t);
    }

    #[test]
    fn dense_and_sparse_agree_on_solvability() {
        let p = Prime::new(5).unwrap();
        let cols: Vec<SparseVec> = vec![vec![(0, 1), (1, 2)], vec![(1, 1), (2, 3)], vec![(0, 1), (1, 3), (2, 3)]];
        let target = vec![(0, 2), (2, 3)];
        for limit in [0, usize::MAX] {
            let sol = solve_in_span(p, 3, &cols, &target, limit).unwrap();
            check(p, &cols, &target, &sol);
        }
        let outside = vec![(0, 1)];
        let cols2 = vec![cols[0].clone(), cols[1].clone()];
        for limit in [0, usize::MAX] {
            if let Some(sol) = solve_in_span(p, 3, &cols2, &outside, limit) {
                check(p, &cols2, &outside, &sol);
                panic!("should be outside the span");
            }
        }
        assert_eq!(rank(p, &cols), 2);
    }

    #[test]
    fn zero_target_has_empty_solution() {
        let p = Prime::new(3).unwrap();
        assert_eq!(solve_in_span(p, 2, &[], &vec![], 100), Some(vec![]));
        assert_eq!(solve_in_span(p, 2, &[], &vec![], 0), Some(vec![]));
    }
}
