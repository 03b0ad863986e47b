//! Gauss-Legendre rules, composite panels and a globally adaptive integrator.

use crate::{Error, Real, Result};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule on [-1, 1]. Nodes are found by Newton iteration on
    /// the Legendre recurrence in double precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `panels` equal panels on [a, b].
pub fn composite<T: Real, F: FnMut(T) -> T>(
    rule: &GaussLegendre<T>,
    mut f: F,
    a: T,
    b: T,
    panels: usize,
) -> T {
    let h = (b - a) / T::from_usize_lossy(panels);
    (0..panels)
        .map(|p| {
            let lo = a + h * T::from_usize_lossy(p);
            rule.integrate(&mut f, lo, lo + h)
        })
        .sum()
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

/// Globally adaptive Gauss-Legendre integration: the segment with the
/// largest error estimate is bisected until the summed estimate drops
/// below `rel_tol * |I|` (or `abs_tol`).
pub fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let rule = GaussLegendre::<T>::new(10);
    let mut eval = |lo: T, hi: T| -> Segment<T> {
        let mid = (lo + hi) / T::lit(2.0);
        let coarse = rule.integrate(&mut f, lo, hi);
        let fine = rule.integrate(&mut f, lo, mid) + rule.integrate(&mut f, mid, hi);
        Segment {
            a: lo,
            b: hi,
            value: fine,
            err: (fine - coarse).abs(),
        }
    };
    let mut segs = vec![eval(a, b)];
    for _ in 0..4000 {
        let total: T = segs.iter().map(|s| s.value).sum();
        let err: T = segs.iter().map(|s| s.err).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNotConverged(
                "non-finite integrand".into(),
            ));
        }
        if err <= (rel_tol * total.abs()).max(abs_tol) {
            return Ok(total);
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (k, s)| {
                if s.err > acc.1 {
                    (k, s.err)
                } else {
                    acc
                }
            });
        let s = segs.swap_remove(worst);
        let mid = (s.a + s.b) / T::lit(2.0);
        if mid <= s.a || mid >= s.b {
            // Segment cannot be split further; accept its contribution.
            segs.push(Segment { err: T::zero(), ..s });
            continue;
        }
        segs.push(eval(s.a, mid));
        segs.push(eval(mid, s.b));
    }
    Err(Error::QuadratureNotConverged(format!(
        "adaptive rule on [{}, {}] exceeded its segment budget",
        a, b
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::<f64>::new(8);
        // degree 15 is integrated exactly
        let v = rule.integrate(|x| x.powi(14) + x.powi(15), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rules_stay_accurate() {
        let rule = GaussLegendre::<f64>::new(200);
        let v = rule.integrate(|x| x.exp(), 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // integral of x^{-1/2} on (0, 1) is 2
        let v = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn f32_rule() {
        let rule = GaussLegendre::<f32>::new(6);
        let v = rule.integrate(|x| x * x, 0.0, 3.0);
        assert!((v - 9.0).abs() < 1e-4);
    }
}
