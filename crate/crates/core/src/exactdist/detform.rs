//! Finite `n x n` determinant for `P(G(n, n) ≤ k)`.
//!
//! With `C = [1/(1 - a_i b_j)]` and `T_k(i, j) = Σ_{m ≥ k+n} (a_i b_j)^m`,
//! `P(G ≤ k) = det(C - T_k) / det C`. Injective parameters use the explicit
//! inverse of `C`. When every `a_i` equals `a` and every `b_j` equals `b`
//! the same ratio is taken in the limit: the rows `(a_i^m)_m` span
//! `{m^j a^m : j < n}`, and in the orthonormal basis `p_j(m) c^{m/2}`
//! (`c = ab`, Meixner polynomials) the ratio is `det(I - Σ_{m ≥ k+n} v v^T)`.
//! An ill-conditioned `C` falls back to divided differences of both sides.

use super::{clamp_probability, injective, validate_params};
use crate::numeric::linalg::{condition_number, Lu, Matrix};
use crate::{Error, Real, Result};
use rayon::prelude::*;

const CRAMER_MAX_CONDITION: f64 = 1e5;

pub fn cauchy_matrix<T: Real>(a: &[T], b: &[T]) -> Matrix<T> {
    Matrix::from_fn(a.len(), b.len(), |i, j| T::one() / (T::one() - a[i] * b[j]))
}

/// Explicit inverse of the Cauchy-type matrix `C` by Cramer's rule.
pub fn c_inverse<T: Real>(a: &[T], b: &[T]) -> Result<Matrix<T>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    if !injective(a) || !injective(b) {
        return Err(Error::RepeatedParameters);
    }
    let n = a.len();
    let one = T::one();
    // row factor for b_i and column factor for a_j
    let rb: Vec<T> = (0..n)
        .map(|i| {
            let num: T = a.iter().map(|&ak| one - ak * b[i]).product();
            let den: T = (0..n).filter(|&k| k != i).map(|k| b[k] - b[i]).product();
            num / den
        })
        .collect();
    let ca: Vec<T> = (0..n)
        .map(|j| {
            let num: T = b.iter().map(|&bk| one - a[j] * bk).product();
            let den: T = (0..n).filter(|&k| k != j).map(|k| a[k] - a[j]).product();
            num / den
        })
        .collect();
    Ok(Matrix::from_fn(n, n, |i, j| rb[i] * ca[j] / (one - a[j] * b[i])))
}

/// `P(G(n, n) ≤ k)` for square parameters.
pub fn cdf_det_form<T: Real>(a: &[T], b: &[T], k: u64) -> Result<T> {
    Ok(cdf_det_form_range(a, b, &[k])?[0])
}

pub fn cdf_det_form_range<T: Real>(a: &[T], b: &[T], ks: &[u64]) -> Result<Vec<T>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "determinant form needs m = n, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    validate_params(a, b)?;
    if injective(a) && injective(b) {
        return cramer_range(a, b, ks);
    }
    let constant = |v: &[T]| v.iter().all(|&x| (x - v[0]).abs() <= T::lit(1e-8));
    if constant(a) && constant(b) {
        return homogeneous_range(a[0] * b[0], a.len(), ks);
    }
    Err(Error::RepeatedParameters)
}

fn cramer_range<T: Real>(a: &[T], b: &[T], ks: &[u64]) -> Result<Vec<T>> {
    let n = a.len();
    let cinv = c_inverse(a, b)?;
    let cond = condition_number(&cauchy_matrix(a, b));
    if cond > T::lit(1e12) {
        let residual = cauchy_matrix(a, b).matmul(&cinv).max_abs_diff(&Matrix::identity(n));
        log::warn!("ill-conditioned Cauchy matrix: condition {cond}, residual {residual}");
    }
    // rounding in the explicit inverse grows like cond * eps
    if cond > T::lit(CRAMER_MAX_CONDITION) {
        return divided_range(a, b, ks);
    }
    ks.iter()
        .map(|&k| {
            let e = i32::try_from(k + n as u64).map_err(|_| Error::OutOfRange(format!("k = {k}")))?;
            let cols: Vec<Vec<T>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    (0..n)
                        .map(|i| {
                            let tail: T = (0..n)
                                .map(|p| {
                                    let c = a[p] * b[j];
                                    cinv[(i, p)] * c.powi(e) / (T::one() - c)
                                })
                                .sum();
                            if i == j { T::one() - tail } else { -tail }
                        })
                        .collect()
                })
                .collect();
            let m = Matrix::from_fn(n, n, |i, j| cols[j][i]);
            clamp_probability(Lu::new(&m).det())
        })
        .collect()
}

/// Rows `h_{m-i}(x_1, ..., x_{i+1})` for `m < len`: the divided differences of
/// `x^m`, which are sums of nonnegative monomials.
fn divided_rows<T: Real>(x: &[T], len: usize) -> Vec<Vec<T>> {
    let mut g = vec![T::zero(); len];
    let mut rows = Vec::with_capacity(x.len());
    for (i, &xi) in x.iter().enumerate() {
        let mut prev = T::zero();
        for (r, gr) in g.iter_mut().enumerate() {
            let base = if i > 0 { *gr } else if r == 0 { T::one() } else { T::zero() };
            prev = base + xi * prev;
            *gr = prev;
        }
        rows.push((0..len).map(|m| if m >= i { g[m - i] } else { T::zero() }).collect());
    }
    rows
}

/// Same ratio with `C` replaced by its divided differences in both
/// directions, `C~ = H_a H_b^T`. The Vandermonde factors cancel, so closely
/// spaced parameters do not amplify rounding.
fn divided_range<T: Real>(a: &[T], b: &[T], ks: &[u64]) -> Result<Vec<T>> {
    let n = a.len();
    let kmax = ks.iter().copied().max().unwrap_or(0) as usize;
    let rho = a.iter().copied().fold(T::zero(), T::max) * b.iter().copied().fold(T::zero(), T::max);
    let mut len = 2 * (kmax + n) + 64;
    let (ha, hb) = loop {
        let (ha, hb) = (divided_rows(a, len), divided_rows(b, len));
        let last = ha[n - 1][len - 1] * hb[n - 1][len - 1] / (T::one() - rho);
        if last < T::tol(1e-18) {
            break (ha, hb);
        }
        len *= 2;
        if len > 1 << 22 {
            return Err(Error::NotConverged("divided-difference support".into()));
        }
    };
    let gram = |lo: usize, hi: usize| {
        Matrix::from_fn(n, n, |i, j| (lo..hi).map(|m| ha[i][m] * hb[j][m]).sum())
    };
    let lu = Lu::new(&gram(0, len));
    ks.iter()
        .map(|&k| {
            let e = (k as usize + n).min(len);
            let tail = gram(e, len);
            let cols: Vec<Vec<T>> = (0..n)
                .map(|j| lu.solve(&(0..n).map(|i| tail[(i, j)]).collect::<Vec<_>>()))
                .collect::<Result<_>>()?;
            let m = Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() } - cols[j][i]);
            clamp_probability(Lu::new(&m).det())
        })
        .collect()
}

fn dot<T: Real>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&x, &y)| x * y).sum()
}

/// Orthonormal basis of `span{m^j c^{m/2} : j < n}` on `m ∈ [0, len)` by
/// Lanczos on `diag(m)` with full reorthogonalisation.
fn meixner_basis<T: Real>(c: T, n: usize, len: usize) -> Result<Vec<Vec<T>>> {
    let half = c.sqrt();
    let mut v0: Vec<T> = Vec::with_capacity(len);
    let mut p = T::one();
    for _ in 0..len {
        v0.push(p);
        p = p * half;
    }
    let norm = dot(&v0, &v0).sqrt();
    v0.iter_mut().for_each(|x| *x = *x / norm);
    let mut basis = vec![v0];
    for j in 1..n {
        let prev = &basis[j - 1];
        let mut w: Vec<T> = prev.iter().enumerate().map(|(m, &x)| T::from_usize_lossy(m) * x).collect();
        for _ in 0..2 {
            for v in &basis {
                let d = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, &y)| *x = *x - d * y);
            }
        }
        let beta = dot(&w, &w).sqrt();
        if !(beta > T::zero()) {
            return Err(Error::NotConverged("Lanczos breakdown".into()));
        }
        w.iter_mut().for_each(|x| *x = *x / beta);
        basis.push(w);
    }
    Ok(basis)
}

fn homogeneous_range<T: Real>(c: T, n: usize, ks: &[u64]) -> Result<Vec<T>> {
    if c == T::zero() {
        return Ok(vec![T::one(); ks.len()]);
    }
    let kmax = ks.iter().copied().max().unwrap_or(0) as usize;
    let mut len = 2 * (kmax + n) + 8 * n + 64;
    let basis = loop {
        let basis = meixner_basis(c, n, len)?;
        let tail = basis
            .iter()
            .map(|v| v[len - 8..].iter().fold(T::zero(), |acc, x| acc.max(x.abs())))
            .fold(T::zero(), T::max);
        if tail < T::tol(1e-18) {
            break basis;
        }
        len *= 2;
        if len > 1 << 24 {
            return Err(Error::NotConverged("orthonormal basis support".into()));
        }
    };
    // accumulate T = Σ_{m ≥ k+n} v v^T from the top, handling k in descending order
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(ks[i]));
    let mut t = Matrix::from_fn(n, n, |_, _| T::zero());
    let mut m = len;
    let mut out = vec![T::zero(); ks.len()];
    for idx in order {
        let start = ks[idx] as usize + n;
        while m > start {
            m -= 1;
            for i in 0..n {
                let vi = basis[i][m];
                for j in 0..n {
                    t[(i, j)] = t[(i, j)] + vi * basis[j][m];
                }
            }
        }
        let a = Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() } - t[(i, j)]);
        out[idx] = clamp_probability(Lu::new(&a).det())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_is_geometric() {
        for k in [0u64, 1, 4, 30] {
            let p = cdf_det_form(&[0.5], &[0.7], k).unwrap();
            assert!((p - (1.0 - 0.35f64.powi(k as i32 + 1))).abs() < 1e-15);
        }
    }

    #[test]
    fn cramer_inverse_matches_lu() {
        let a = [0.1, 0.5, 0.8];
        let b = [0.7, 0.2, 0.45];
        let explicit = c_inverse(&a, &b).unwrap();
        let lu = Lu::new(&cauchy_matrix(&a, &b)).inverse().unwrap();
        assert!(explicit.max_abs_diff(&lu) <= 1e-10);
    }

    #[test]
    fn divided_differences_match_cramer() {
        let a = [0.1f64, 0.5, 0.8, 0.3];
        let b = [0.7, 0.2, 0.45, 0.6];
        let ks = [0u64, 3, 10];
        let u = cramer_range(&a, &b, &ks).unwrap();
        let v = divided_range(&a, &b, &ks).unwrap();
        for (u, v) in u.iter().zip(&v) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn divided_differences_reach_the_confluent_value() {
        let a: Vec<f64> = (0..3).map(|i| 0.5 + 1e-7 * i as f64).collect();
        let b: Vec<f64> = (0..3).map(|i| 0.4 - 1e-7 * i as f64).collect();
        let near = divided_range(&a, &b, &[4]).unwrap()[0];
        let limit = cdf_det_form(&[0.5; 3], &[0.4; 3], 4).unwrap();
        assert!((near - limit).abs() < 1e-6, "{near} vs {limit}");
    }

    #[test]
    fn homogeneous_single_cell_limit() {
        // n = 1 through the orthonormal-basis route: 1 - c^{k+1}
        let p = homogeneous_range(0.3, 1, &[0, 2, 9]).unwrap();
        for (k, v) in [0, 2, 9].iter().zip(p) {
            assert!((v - (1.0 - 0.3f64.powi(k + 1))).abs() < 1e-14);
        }
    }

    #[test]
    fn homogeneous_is_continuous_limit() {
        // nearly homogeneous injective parameters approach the confluent value
        let n = 3;
        let eps = 1e-3;
        let a: Vec<f64> = (0..n).map(|i| 0.5 + eps * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 0.4 - eps * i as f64).collect();
        for k in [0u64, 3, 8] {
            let near = cdf_det_form(&a, &b, k).unwrap();
            let limit = cdf_det_form(&[0.5; 3], &[0.4; 3], k).unwrap();
            assert!((near - limit).abs() < 2e-2, "{near} vs {limit}");
        }
    }

    #[test]
    fn two_by_two_homogeneous_matches_hand_sum() {
        // G(2,2) = max path of i.i.d. geometric weights; check P(G = 0) = (1-q)^4
        let q: f64 = 0.25;
        let p0 = cdf_det_form(&[0.5, 0.5], &[0.5, 0.5], 0).unwrap();
        assert!((p0 - (1.0 - q).powi(4)).abs() < 1e-13);
    }

    #[test]
    fn mixed_repeats_rejected() {
        assert_eq!(
            cdf_det_form(&[0.3, 0.3], &[0.1, 0.2], 1).unwrap_err(),
            Error::RepeatedParameters
        );
    }
}
