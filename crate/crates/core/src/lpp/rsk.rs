//! Robinson-Schensted-Knuth correspondence by row insertion.

use crate::grid::Grid;
use crate::{Error, Result};

/// Young tableau stored row by row; entries are 1-based labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tableau {
    pub rows: Vec<Vec<u32>>,
}

impl Tableau {
    pub fn shape(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `type(P)_k` = number of entries equal to `k`, for `k = 1..=len`.
    pub fn type_counts(&self, len: usize) -> Vec<u64> {
        let mut t = vec![0; len];
        for &x in self.rows.iter().flatten() {
            if let Some(slot) = t.get_mut(x as usize - 1) {
                *slot += 1;
            }
        }
        t
    }

    pub fn max_entry(&self) -> u32 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Rows weakly increasing, columns strictly increasing, shape a partition.
    pub fn is_semistandard(&self) -> bool {
        let shape_ok = self.shape().windows(2).all(|w| w[0] >= w[1]) && self.rows.iter().all(|r| !r.is_empty());
        let rows_ok = self.rows.iter().all(|r| r.windows(2).all(|w| w[0] <= w[1]));
        let cols_ok = self
            .rows
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(lower, upper)| lower > upper));
        shape_ok && rows_ok && cols_ok
    }

    /// Row-insert `x`; returns the row index of the new box.
    fn insert(&mut self, mut x: u32) -> usize {
        for (r, row) in self.rows.iter_mut().enumerate() {
            match row.iter().position(|&y| y > x) {
                Some(pos) => x = std::mem::replace(&mut row[pos], x),
                None => {
                    row.push(x);
                    return r;
                }
            }
        }
        self.rows.push(vec![x]);
        self.rows.len() - 1
    }

    /// Undo the insertion that created the box at the end of row `r`.
    fn reverse_bump(&mut self, r: usize) -> u32 {
        let mut x = self.rows[r].pop().expect("row is nonempty");
        if self.rows[r].is_empty() {
            self.rows.pop();
        }
        for row in self.rows[..r].iter_mut().rev() {
            let pos = row.iter().rposition(|&y| y < x).expect("column strictness");
            x = std::mem::replace(&mut row[pos], x);
        }
        x
    }
}

/// RSK of a nonnegative integer matrix `A` (indexed `(i, j)`): the pairs
/// `(i, j)` repeated `A(i, j)` times in lexicographic order, `j` inserted
/// into `P` and `i` recorded in `Q`.
pub fn rsk(a: &Grid<i64>) -> Result<(Tableau, Tableau)> {
    let mut p = Tableau::default();
    let mut q = Tableau::default();
    for i in 0..a.m() {
        for j in 0..a.n() {
            let count = a[(i, j)];
            if count < 0 {
                return Err(Error::NegativeEntry { i: i + 1, j: j + 1, value: count });
            }
            for _ in 0..count {
                let r = p.insert(j as u32 + 1);
                if r == q.rows.len() {
                    q.rows.push(Vec::new());
                }
                q.rows[r].push(i as u32 + 1);
            }
        }
    }
    Ok((p, q))
}

/// Inverse of [`rsk`] for an `m x n` target.
pub fn rsk_inverse(p: &Tableau, q: &Tableau, m: usize, n: usize) -> Result<Grid<i64>> {
    if p.shape() != q.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    if !p.is_semistandard() || !q.is_semistandard() {
        return Err(Error::ShapeMismatch("tableaux are not semistandard".into()));
    }
    if p.max_entry() as usize > n || q.max_entry() as usize > m {
        return Err(Error::ShapeMismatch(format!(
            "entries exceed the type bounds m = {m}, n = {n}"
        )));
    }
    let mut p = p.clone();
    let mut q = q.clone();
    let mut a = Grid::filled(m, n, 0i64);
    while q.size() > 0 {
        // The most recent box: largest label of Q, rightmost among equals,
        // which is the end of the longest row holding it.
        let top = q.max_entry();
        let (r, _) = q
            .rows
            .iter()
            .enumerate()
            .filter_map(|(r, row)| (row.last() == Some(&top)).then_some((r, row.len())))
            .max_by_key(|&(_, len)| len)
            .expect("max entry sits at a row end");
        q.rows[r].pop();
        if q.rows[r].is_empty() {
            q.rows.pop();
        }
        let j = p.reverse_bump(r);
        a[(top as usize - 1, j as usize - 1)] += 1;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let a = Grid::from_rows(1, vec![vec![3]]);
        let (p, q) = rsk(&a).unwrap();
        assert_eq!(p.rows, vec![vec![1, 1, 1]]);
        assert_eq!(q.rows, vec![vec![1, 1, 1]]);
        assert_eq!(rsk_inverse(&p, &q, 1, 1).unwrap(), a);
    }

    #[test]
    fn empty_matrix() {
        let a = Grid::filled(2, 3, 0i64);
        let (p, q) = rsk(&a).unwrap();
        assert!(p.shape().is_empty() && q.shape().is_empty());
        assert_eq!(rsk_inverse(&p, &q, 2, 3).unwrap(), a);
    }

    #[test]
    fn negative_entry_rejected() {
        let a = Grid::from_rows(2, vec![vec![1, -1]]);
        assert!(matches!(rsk(&a), Err(Error::NegativeEntry { .. })));
    }

    #[test]
    fn permutation_round_trip() {
        // permutation matrix of 3 1 2 with i rows
        let a = Grid::from_fn(3, 3, |i, j| i64::from([2, 0, 1][i] == j));
        let (p, q) = rsk(&a).unwrap();
        assert_eq!(p.shape(), vec![2, 1]);
        assert_eq!(rsk_inverse(&p, &q, 3, 3).unwrap(), a);
    }

    #[test]
    fn repeated_labels_round_trip() {
        let a = Grid::from_fn(3, 2, |i, j| [[2, 2], [3, 2], [2, 0]][i][j]);
        let (p, q) = rsk(&a).unwrap();
        assert_eq!(rsk_inverse(&p, &q, 3, 2).unwrap(), a);
    }

    #[test]
    fn shape_mismatch() {
        let p = Tableau { rows: vec![vec![1, 2]] };
        let q = Tableau { rows: vec![vec![1], vec![2]] };
        assert!(rsk_inverse(&p, &q, 2, 2).is_err());
    }
}
