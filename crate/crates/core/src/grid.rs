//! Dense two-index array used for weights and last-passage fields.
//!
//! Index `(i, j)` with `i` horizontal; storage is row-major in `j`, i.e.
//! all `i` for a fixed `j` are contiguous.

use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid<W> {
    m: usize,
    n: usize,
    data: Vec<W>,
}

impl<W> Grid<W> {
    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> W) -> Self {
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                data.push(f(i, j));
            }
        }
        Self { m, n, data }
    }

    /// Build from rows of constant `j`, each of length `m`.
    pub fn from_rows(m: usize, rows: Vec<Vec<W>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == m), "row length must equal m");
        let n = rows.len();
        Self {
            m,
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Horizontal extent.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Vertical extent.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&W> {
        (i < self.m && j < self.n).then(|| &self.data[j * self.m + i])
    }

    /// Row of constant `j`.
    pub fn row(&self, j: usize) -> &[W] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[W]> {
        self.data.chunks(self.m.max(1)).take(self.n)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &W)> {
        let m = self.m.max(1);
        self.data.iter().enumerate().map(move |(k, w)| ((k % m, k / m), w))
    }

    pub fn map<V>(&self, f: impl FnMut(&W) -> V) -> Grid<V> {
        Grid {
            m: self.m,
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn as_slice(&self) -> &[W] {
        &self.data
    }
}

impl<W: Clone> Grid<W> {
    pub fn filled(m: usize, n: usize, value: W) -> Self {
        Self {
            m,
            n,
            data: vec![value; m * n],
        }
    }
}

impl<W> Index<(usize, usize)> for Grid<W> {
    type Output = W;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &W {
        debug_assert!(i < self.m && j < self.n);
        &self.data[j * self.m + i]
    }
}

impl<W> IndexMut<(usize, usize)> for Grid<W> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut W {
        debug_assert!(i < self.m && j < self.n);
        &mut self.data[j * self.m + i]
    }
}
