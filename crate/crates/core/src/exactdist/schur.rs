//! Schur polynomials, semistandard tableaux and the Schur measure, plus the
//! Cauchy-Binet identity. These serve as oracles for the kernel code.

use super::injective;
use crate::lpp::Tableau;
use crate::numeric::linalg::{det, det_exact, Matrix};
use crate::{Error, Real, Result};
use num_traits::{Num, Signed};

fn alternant<T: Real>(lambda: &[usize], x: &[T]) -> T {
    let n = x.len();
    let part = |j: usize| lambda.get(j).copied().unwrap_or(0);
    det(&Matrix::from_fn(n, n, |i, j| x[i].powi((part(j) + n - j - 1) as i32)))
}

/// Bialternant `det[x_i^{λ_j - j + n}] / det[x_i^{n - j}]`.
pub fn schur_polynomial<T: Real>(lambda: &[usize], x: &[T]) -> Result<T> {
    if !injective(x) {
        return Err(Error::RepeatedParameters);
    }
    if lambda.iter().filter(|&&p| p > 0).count() > x.len() {
        return Ok(T::zero());
    }
    Ok(alternant(lambda, x) / alternant(&[], x))
}

/// All semistandard tableaux of shape `λ` with entries in `1..=n`.
pub fn ssyt_enumerate(lambda: &[usize], n: usize) -> Vec<Tableau> {
    let shape: Vec<usize> = lambda.iter().copied().filter(|&p| p > 0).collect();
    let cells: Vec<(usize, usize)> = shape
        .iter()
        .enumerate()
        .flat_map(|(r, &len)| (0..len).map(move |c| (r, c)))
        .collect();
    let mut rows: Vec<Vec<u32>> = shape.iter().map(|&len| vec![0; len]).collect();
    let mut out = Vec::new();
    fn fill(cells: &[(usize, usize)], idx: usize, n: u32, rows: &mut Vec<Vec<u32>>, out: &mut Vec<Tableau>) {
        let Some(&(r, c)) = cells.get(idx) else {
            out.push(Tableau { rows: rows.clone() });
            return;
        };
        let left = if c > 0 { rows[r][c - 1] } else { 1 };
        let above = if r > 0 { rows[r - 1][c] + 1 } else { 1 };
        for v in left.max(above)..=n {
            rows[r][c] = v;
            fill(cells, idx + 1, n, rows, out);
        }
    }
    fill(&cells, 0, n as u32, &mut rows, &mut out);
    out
}

/// `s_λ(x) = Σ_T Π x_{T(cell)}` over semistandard tableaux.
pub fn schur_by_enumeration<T: Real>(lambda: &[usize], x: &[T]) -> T {
    ssyt_enumerate(lambda, x.len())
        .iter()
        .map(|t| t.rows.iter().flatten().map(|&v| x[v as usize - 1]).product::<T>())
        .sum()
}

/// `Z_n = Π_{i<j} (a_i - a_j)(b_i - b_j) / Π_{i,j} (1 - a_i b_j)`.
pub fn partition_function<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len();
    let mut z = T::one();
    for i in 0..n {
        for j in i + 1..n {
            z = z * (a[i] - a[j]) * (b[i] - b[j]);
        }
    }
    let den: T = a.iter().flat_map(|&ai| b.iter().map(move |&bj| T::one() - ai * bj)).product();
    z / den
}

/// `P(Λ = λ) = Z_n^{-1} det[a_i^{λ_j - j + n}] det[b_i^{λ_j - j + n}]`.
pub fn schur_measure<T: Real>(lambda: &[usize], a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    if !injective(a) || !injective(b) {
        return Err(Error::RepeatedParameters);
    }
    if lambda.iter().filter(|&&p| p > 0).count() > a.len() {
        return Ok(T::zero());
    }
    Ok(alternant(lambda, a) * alternant(lambda, b) / partition_function(a, b))
}

/// Partitions with at most `len` parts, each at most `max_part`.
pub fn partitions_bounded(max_part: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn walk(bound: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for p in 0..=bound {
            cur.push(p);
            walk(p, len, cur, out);
            cur.pop();
        }
    }
    walk(max_part, len, &mut cur, &mut out);
    out
}

/// Both sides of `det[Σ_x f_i(x) g_j(x)] = (1/n!) Σ_{x_1..x_n} det[f_i(x_j)] det[g_i(x_j)]`
/// for tables `f`, `g` with `n` rows over a common finite set.
pub fn cauchy_binet_sides<T: Clone + Num + Signed>(f: &[Vec<T>], g: &[Vec<T>]) -> (T, T) {
    let n = f.len();
    let size = f.first().map_or(0, Vec::len);
    let lhs = det_exact(&Matrix::from_fn(n, n, |i, j| {
        (0..size).fold(T::zero(), |acc, x| acc + f[i][x].clone() * g[j][x].clone())
    }));
    let mut idx = vec![0usize; n];
    let mut sum = T::zero();
    if size > 0 || n == 0 {
        loop {
            let df = det_exact(&Matrix::from_fn(n, n, |i, j| f[i][idx[j]].clone()));
            let dg = det_exact(&Matrix::from_fn(n, n, |i, j| g[i][idx[j]].clone()));
            sum = sum + df * dg;
            let Some(pos) = (0..n).rev().find(|&p| idx[p] + 1 < size) else {
                break;
            };
            idx[pos] += 1;
            idx[pos + 1..].iter_mut().for_each(|v| *v = 0);
        }
    }
    let fact = (1..=n).fold(T::one(), |acc, k| acc * (0..k).fold(T::zero(), |s, _| s + T::one()));
    (lhs, sum / fact)
}

pub fn cauchy_binet_check<T: Clone + Num + Signed>(f: &[Vec<T>], g: &[Vec<T>]) -> bool {
    let (l, r) = cauchy_binet_sides(f, g);
    l == r
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn first_schur_is_sum() {
        let x = [0.2, 0.5, 0.9];
        assert!((schur_polynomial(&[1], &x).unwrap() - 1.6).abs() < 1e-14);
    }

    #[test]
    fn bialternant_matches_enumeration() {
        let x = [0.3, 0.7];
        for lambda in [vec![2, 1], vec![3], vec![2, 2]] {
            let b = schur_polynomial(&lambda, &x).unwrap();
            let e = schur_by_enumeration(&lambda, &x);
            assert!((b - e).abs() < 1e-13, "{lambda:?}: {b} vs {e}");
        }
    }

    #[test]
    fn tableau_counts() {
        // number of SSYT of shape (2,1) with entries ≤ 3 is 8
        assert_eq!(ssyt_enumerate(&[2, 1], 3).len(), 8);
        assert!(ssyt_enumerate(&[2, 1], 3).iter().all(Tableau::is_semistandard));
        assert!(ssyt_enumerate(&[1, 1, 1], 2).is_empty());
    }

    #[test]
    fn measure_normalises() {
        let a = [0.2, 0.3];
        let b = [0.25, 0.35];
        let total: f64 = partitions_bounded(40, 2).iter().map(|l| schur_measure(l, &a, &b).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_binet_identity_tables() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        let id: Vec<Vec<BigRational>> = (0..2).map(|i| (0..2).map(|j| r(i64::from(i == j), 1)).collect()).collect();
        assert!(cauchy_binet_check(&id, &id));
        let f = vec![vec![r(1, 2), r(3, 1), r(-2, 5)]];
        let g = vec![vec![r(4, 3), r(1, 7), r(1, 1)]];
        let (l, rr) = cauchy_binet_sides(&f, &g);
        assert_eq!(l, rr);
    }
}
