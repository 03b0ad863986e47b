//! Small dense matrices with LU factorisation, plus exact elimination over
//! any field (used with rationals by the Cauchy-Binet oracle).

use crate::{Error, Real, Result};
use num_traits::{Num, Signed};
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Sub-matrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }
}

impl<T: Real> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| {
                    lu[(x, k)]
                        .abs()
                        .partial_cmp(&lu[(y, k)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(k);
            if lu[(p, k)] == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != T::zero() {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] = lu[(i, j)] - factor * v;
                    }
                }
            }
        }
        Self {
            lu,
            perm,
            sign,
            singular,
        }
    }

    pub fn det(&self) -> T {
        if self.singular {
            return T::zero();
        }
        (0..self.lu.rows).fold(self.sign, |d, k| d * self.lu[(k, k)])
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if self.singular {
            return Err(Error::NotConverged("singular matrix".into()));
        }
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.lu.rows;
        let mut inv = Matrix::from_fn(n, n, |_, _| T::zero());
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

pub fn det<T: Real>(a: &Matrix<T>) -> T {
    Lu::new(a).det()
}

/// 1-norm condition number via the explicit inverse (infinite if singular).
pub fn condition_number<T: Real>(a: &Matrix<T>) -> T {
    match Lu::new(a).inverse() {
        Ok(inv) => a.norm1() * inv.norm1(),
        Err(_) => T::infinity(),
    }
}

/// Exact determinant by fraction-free pivot search over a field.
pub fn det_exact<T: Clone + Num + Signed>(a: &Matrix<T>) -> T {
    assert!(a.is_square());
    let n = a.rows;
    let mut m = a.clone();
    let mut det = T::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[(i, k)].is_zero()) else {
            return T::zero();
        };
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let pivot = m[(k, k)].clone();
        det = det * pivot.clone();
        for i in k + 1..n {
            let factor = m[(i, k)].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for j in k..n {
                let v = m[(k, j)].clone();
                m[(i, j)] = m[(i, j)].clone() - factor.clone() * v;
            }
        }
    }
    det
}
