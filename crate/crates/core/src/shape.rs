//! Limit-shape function through the one-dimensional variational formula.
//!
//! Exponential model: `g(s,t) = inf_{z in [-α_lo, β_lo]} s A(z) + t B(z)` with
//! `A(z) = E[1/(a+z)]`, `B(z) = E[1/(b-z)]`. Geometric model:
//! `g(s,t) = inf_{z in [α_hi, 1/β_hi]} s E[a/(z-a)] + t E[bz/(1-bz)]`.
//! Both objectives are convex with an increasing derivative, so the minimiser
//! is an endpoint or the unique root of the derivative.

use crate::model::{transform_a, transform_ga, transform_gb, ModelKind, ParamLaw};
use crate::numeric::roots::bracketed_root;
use crate::{Error, Real, Result};
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `s/t <= c1`: minimiser at the left end.
    LinearLow,
    StrictlyConcave,
    /// `s/t >= c2`: minimiser at the right end.
    LinearHigh,
    /// The admissible interval collapses (or leaves the unit square).
    Degenerate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::LinearLow => "linear_low",
            Regime::StrictlyConcave => "strictly_concave",
            Regime::LinearHigh => "linear_high",
            Regime::Degenerate => "degenerate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeEval<T> {
    pub g: T,
    pub zeta: T,
    /// `None` in the degenerate regime.
    pub c1: Option<T>,
    pub c2: Option<T>,
    /// Geometric model, strictly concave regime only:
    /// `ζ^{2/3} (s E[a/(ζ-a)^3] + t E[b²/(1-bζ)^3])^{1/3}`, which is `σ(s/t)`
    /// when `t = 1`.
    pub sigma: Option<T>,
    pub regime: Regime,
}

/// `x * v` with `0 * inf = 0`.
fn weighted<T: Real>(x: T, v: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * v
    }
}

fn check_direction<T: Real>(s: T, t: T) -> Result<()> {
    if !(s >= T::zero() && t >= T::zero()) || !s.is_finite() || !t.is_finite() {
        return Err(Error::OutOfRange(format!("direction ({s}, {t}) must be nonnegative")));
    }
    Ok(())
}

fn ratio<T: Real>(s: T, t: T) -> T {
    if t == T::zero() {
        T::infinity()
    } else {
        s / t
    }
}

/// Shared endpoint/interior logic; `h` is the (increasing) derivative of the
/// objective and `dh` its derivative.
#[allow(clippy::too_many_arguments)]
fn minimise<T: Real>(
    s: T,
    t: T,
    lo: T,
    hi: T,
    c1: T,
    c2: T,
    part_s: impl Fn(T) -> T,
    part_t: impl Fn(T) -> T,
    h: impl Fn(T) -> T,
    dh: impl Fn(T) -> T,
) -> Result<(T, T, Regime)> {
    let value = |z: T| weighted(s, part_s(z)) + weighted(t, part_t(z));
    if s == T::zero() && t == T::zero() {
        return Ok((T::zero(), lo, Regime::LinearLow));
    }
    let r = ratio(s, t);
    if r <= c1 {
        return Ok((value(lo), lo, Regime::LinearLow));
    }
    if r >= c2 {
        return Ok((value(hi), hi, Regime::LinearHigh));
    }
    let zeta = bracketed_root(h, Some(dh), lo, hi, true)?;
    Ok((value(zeta), zeta, Regime::StrictlyConcave))
}

/// Exponential-model shape function.
pub fn shape_exponential<T: Real>(alpha: &ParamLaw<T>, beta: &ParamLaw<T>, s: T, t: T) -> Result<ShapeEval<T>> {
    alpha.validate(ModelKind::Exponential)?;
    beta.validate(ModelKind::Exponential)?;
    check_direction(s, t)?;
    let (lo_a, lo_b) = (alpha.lower(), beta.lower());
    if lo_a + lo_b <= T::zero() {
        let g = weighted(s, alpha.moment(0, T::zero(), T::one(), 1))
            + weighted(t, beta.moment(0, T::zero(), T::one(), 1));
        return Ok(ShapeEval {
            g,
            zeta: T::zero(),
            c1: None,
            c2: None,
            sigma: None,
            regime: Regime::Degenerate,
        });
    }
    let (lo, hi) = (-lo_a, lo_b);
    let a_k = |z: T, k: u32| alpha.moment(0, z, T::one(), k);
    let b_k = |z: T, k: u32| beta.moment(0, -z, T::one(), k);
    let c1 = b_k(lo, 2) / a_k(lo, 2);
    let c2 = b_k(hi, 2) / a_k(hi, 2);
    let two = T::lit(2.0);
    let (g, zeta, regime) = minimise(
        s,
        t,
        lo,
        hi,
        c1,
        c2,
        |z| transform_a(alpha, z),
        |z| b_k(z, 1),
        |z| -s * a_k(z, 2) + t * b_k(z, 2),
        |z| two * (s * a_k(z, 3) + t * b_k(z, 3)),
    )?;
    Ok(ShapeEval {
        g,
        zeta,
        c1: Some(c1),
        c2: Some(c2),
        sigma: None,
        regime,
    })
}

/// Geometric-model shape function.
pub fn shape_geometric<T: Real>(alpha: &ParamLaw<T>, beta: &ParamLaw<T>, s: T, t: T) -> Result<ShapeEval<T>> {
    alpha.validate(ModelKind::Geometric)?;
    beta.validate(ModelKind::Geometric)?;
    check_direction(s, t)?;
    let (hi_a, hi_b) = (alpha.upper(), beta.upper());
    if hi_a * hi_b >= T::one() {
        let g = weighted(s, transform_ga(alpha, T::one())) + weighted(t, transform_gb(beta, T::one()));
        return Ok(ShapeEval {
            g,
            zeta: T::one(),
            c1: None,
            c2: None,
            sigma: None,
            regime: Regime::Degenerate,
        });
    }
    let (lo, hi) = (hi_a, T::one() / hi_b);
    // E[a (z-a)^-k] and E[b^j (1-bz)^-k]
    let a_k = |z: T, k: u32| alpha.moment(1, z, -T::one(), k);
    let b_k = |z: T, j: u32, k: u32| beta.moment(j, T::one(), -z, k);
    let c1 = b_k(lo, 1, 2) / a_k(lo, 2);
    let c2 = b_k(hi, 1, 2) / a_k(hi, 2);
    let two = T::lit(2.0);
    let (g, zeta, regime) = minimise(
        s,
        t,
        lo,
        hi,
        c1,
        c2,
        |z| transform_ga(alpha, z),
        |z| transform_gb(beta, z),
        |z| -s * a_k(z, 2) + t * b_k(z, 1, 2),
        |z| two * (s * a_k(z, 3) + t * b_k(z, 2, 3)),
    )?;
    let sigma = (regime == Regime::StrictlyConcave).then(|| {
        let third = T::one() / T::lit(3.0);
        zeta.powf(two * third) * (s * a_k(zeta, 3) + t * b_k(zeta, 2, 3)).powf(third)
    });
    Ok(ShapeEval {
        g,
        zeta,
        c1: Some(c1),
        c2: Some(c2),
        sigma,
        regime,
    })
}

/// Dispatch on the model kind.
pub fn shape<T: Real>(kind: ModelKind, alpha: &ParamLaw<T>, beta: &ParamLaw<T>, s: T, t: T) -> Result<ShapeEval<T>> {
    match kind {
        ModelKind::Exponential => shape_exponential(alpha, beta, s, t),
        ModelKind::Geometric => shape_geometric(alpha, beta, s, t),
    }
}

/// `(d + sqrt(d² + 4p)) / 2` for `p >= 0` without cancellation.
fn upper_root<T: Real>(d: T, p: T) -> T {
    let two = T::lit(2.0);
    let root = (d * d + T::lit(4.0) * p).sqrt();
    if d >= T::zero() {
        (d + root) / two
    } else {
        two * p / (root - d)
    }
}

/// Uniform laws on `[λ/2, λ/2 + l]` and `[λ/2, λ/2 + m]`; `l = 0` or `m = 0`
/// means a point mass at `λ/2`.
pub fn shape_exponential_closed_uniform<T: Real>(lambda: T, l: T, m: T, s: T, t: T) -> Result<T> {
    if !(lambda > T::zero()) || !(l >= T::zero()) || !(m >= T::zero()) {
        return Err(Error::InvalidSpec(format!("need λ > 0, l, m >= 0; got ({lambda}, {l}, {m})")));
    }
    check_direction(s, t)?;
    let prod = s * t * (lambda + l) * (lambda + m);
    // Each log term is (w/k) ln(1 + (k/λ)(1 + X)), with limit (w/λ)(1 + X) at k = 0.
    let term = |w: T, k: T, x: T| {
        if w == T::zero() {
            T::zero()
        } else if k == T::zero() {
            w / lambda * (T::one() + x)
        } else {
            w / k * (k / lambda * (T::one() + x)).ln_1p()
        }
    };
    let x = if s > T::zero() {
        upper_root(l * t - m * s, prod) / (s * (lambda + m))
    } else {
        T::zero()
    };
    let y = if t > T::zero() {
        upper_root(m * s - l * t, prod) / (t * (lambda + l))
    } else {
        T::zero()
    };
    Ok(term(s, l, x) + term(t, m, y))
}

/// Laws with density `∝ 1/x` on `[√q - l, √q]` and `[√q - m, √q]`.
pub fn shape_geometric_closed_reciprocal<T: Real>(q: T, l: T, m: T, s: T, t: T) -> Result<T> {
    let sq = q.sqrt();
    if !(q > T::zero() && q < T::one()) || !(l > T::zero() && l < sq) || !(m > T::zero() && m < sq) {
        return Err(Error::InvalidSpec(format!("need 0 < l, m < √q < 1; got q = {q}, l = {l}, m = {m}")));
    }
    check_direction(s, t)?;
    let big_l = (sq / (sq - l)).ln();
    let big_m = (sq / (sq - m)).ln();
    let (x, y) = (s * l * big_m, t * m * big_l);
    let one_q = T::one() - q;
    let pm = T::one() + m * sq - q;
    let pl = T::one() + l * sq - q;
    let prod = x * y * pm * pl;
    let term = |w: T, big: T, k: T, ratio: T| {
        if w == T::zero() {
            T::zero()
        } else {
            w / big * (k * sq / one_q + k / one_q * ratio).ln_1p()
        }
    };
    let rs = if x > T::zero() {
        upper_root(l * y - m * x, prod) / (x * pm)
    } else {
        T::zero()
    };
    let rt = if y > T::zero() {
        upper_root(m * x - l * y, prod) / (y * pl)
    } else {
        T::zero()
    };
    Ok(term(s, big_l, l, rs) + term(t, big_m, m, rt))
}

/// Empirical shape quantities from the parameter prefixes, with `r = m/n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalShape<T> {
    pub m: usize,
    pub n: usize,
    pub gamma_mn: T,
    pub zeta_mn: T,
    pub sigma_mn: T,
}

/// `g_{m,n}(z) = (1/n) Σ a_i/(z-a_i) + (1/n) Σ b_j z/(1-b_j z)`.
pub fn empirical_g<T: Real>(a: &[T], b: &[T], z: T) -> T {
    let n = T::from_usize_lossy(b.len());
    let sa: T = a.iter().map(|&ai| ai / (z - ai)).sum();
    let sb: T = b.iter().map(|&bj| bj * z / (T::one() - bj * z)).sum();
    (sa + sb) / n
}

/// `d^k/dz^k g_{m,n}` for `k >= 1`.
pub fn empirical_g_deriv<T: Real>(a: &[T], b: &[T], z: T, k: u32) -> T {
    let n = T::from_usize_lossy(b.len());
    let fact = (1..=k).fold(T::one(), |acc, i| acc * T::from_u32(i).unwrap());
    let sign = if k.is_multiple_of(2) { T::one() } else { -T::one() };
    let e = -(k as i32 + 1);
    let sa: T = a.iter().map(|&ai| ai * (z - ai).powi(e)).sum();
    let sb: T = b.iter().map(|&bj| bj.powi(k as i32) * (T::one() - bj * z).powi(e)).sum();
    fact * (sign * sa + sb) / n
}

pub fn empirical_shape<T: Real>(a: &[T], b: &[T]) -> Result<EmpiricalShape<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBracket("empty parameter prefix".into()));
    }
    let lo = a.iter().copied().fold(T::zero(), T::max);
    let hi = b
        .iter()
        .filter(|&&bj| bj > T::zero())
        .map(|&bj| T::one() / bj)
        .fold(T::infinity(), T::min);
    if !(lo < hi) || !hi.is_finite() {
        return Err(Error::EmptyBracket(format!("({lo}, {hi})")));
    }
    let zeta = bracketed_root(
        |z| empirical_g_deriv(a, b, z, 1),
        Some(|z| empirical_g_deriv(a, b, z, 2)),
        lo,
        hi,
        true,
    )?;
    let two = T::lit(2.0);
    let third = T::one() / T::lit(3.0);
    let sigma = zeta.powf(two * third) * (empirical_g_deriv(a, b, zeta, 2) / two).powf(third);
    Ok(EmpiricalShape {
        m: a.len(),
        n: b.len(),
        gamma_mn: empirical_g(a, b, zeta),
        zeta_mn: zeta,
        sigma_mn: sigma,
    })
}

impl<T: Real> EmpiricalShape<T> {
    fn scale(&self) -> T {
        T::from_usize_lossy(self.n).cbrt() * self.sigma_mn
    }

    fn center(&self) -> T {
        T::from_usize_lossy(self.n) * self.gamma_mn
    }

    /// `p(s) = ⌊n γ_{m,n} + n^{1/3} σ_{m,n} s⌋`.
    pub fn scaling_index(&self, s: T) -> i64 {
        (self.center() + self.scale() * s).floor().to_i64().expect("index fits in i64")
    }

    /// `(p(s) - n γ_{m,n}) / (n^{1/3} σ_{m,n})`, within one lattice step of `s`.
    pub fn rescaled_index(&self, s: T) -> T {
        (T::from_i64(self.scaling_index(s)).unwrap() - self.center()) / self.scale()
    }
}

/// Points `(s, t)` on the level curve `g = 1` along `count` directions
/// spanning the closed first quadrant.
pub fn level_curve<T: Real>(g: impl Fn(T, T) -> Result<T>, count: usize) -> Result<Vec<(T, T)>> {
    let half_pi = T::FRAC_PI_2();
    (0..count)
        .map(|k| {
            let theta = half_pi * T::from_usize_lossy(k) / T::from_usize_lossy(count.max(2) - 1);
            let (s, t) = match k {
                0 => (T::one(), T::zero()),
                _ if k + 1 == count => (T::zero(), T::one()),
                _ => (theta.cos(), theta.sin()),
            };
            let v = g(s, t)?;
            Ok((s / v, t / v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN3: f64 = 1.098_612_288_668_109_8;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rost_point_mass() {
        let law = ParamLaw::Point(0.5);
        let e = shape_exponential(&law, &law, 1.0, 1.0).unwrap();
        assert!(close(e.g, 4.0, 1e-12), "{}", e.g);
        assert_eq!(e.regime, Regime::StrictlyConcave);
        assert!(close(e.zeta, 0.0, 1e-12));
    }

    #[test]
    fn uniform_diagonal() {
        let law = ParamLaw::Uniform(0.5, 1.5);
        let e = shape_exponential(&law, &law, 1.0, 1.0).unwrap();
        assert!(close(e.g, 2.0 * LN3, 1e-12), "{}", e.g);
        assert_eq!((e.c1, e.c2), (Some(0.0), Some(f64::INFINITY)));
    }

    #[test]
    fn closed_uniform_value_and_limits() {
        assert!(close(shape_exponential_closed_uniform(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 2.0 * LN3, 1e-14));
        let rost = |s: f64, t: f64, lam: f64| (s.sqrt() + t.sqrt()).powi(2) / lam;
        let v = shape_exponential_closed_uniform(2.0, 0.0, 0.0, 3.0, 0.5).unwrap();
        assert!(close(v, rost(3.0, 0.5, 2.0), 1e-13));
    }

    #[test]
    fn power_law_critical_values() {
        let alpha = ParamLaw::Power { p: 2.0, lo: 0.0, hi: 1.0, anchor: Default::default() };
        let beta = ParamLaw::Power { p: 3.0, lo: 1.0, hi: 2.0, anchor: Default::default() };
        let e = shape_exponential(&alpha, &beta, 1.0, 1.0).unwrap();
        let c1 = (-8.0 + 12.0 * 2f64.ln()) / 3.0;
        assert!(close(e.c1.unwrap(), c1, 1e-9), "{:?}", e.c1);
        assert!(e.c2.unwrap() > 5.86 && e.c2.unwrap() < 5.87);
    }

    #[test]
    fn linear_regions() {
        let alpha = ParamLaw::Power { p: 2.0, lo: 0.0, hi: 1.0, anchor: Default::default() };
        let beta = ParamLaw::Power { p: 3.0, lo: 1.0, hi: 2.0, anchor: Default::default() };
        let low = shape_exponential(&alpha, &beta, 0.05, 1.0).unwrap();
        assert_eq!(low.regime, Regime::LinearLow);
        let high = shape_exponential(&alpha, &beta, 10.0, 1.0).unwrap();
        assert_eq!(high.regime, Regime::LinearHigh);
        // Linear: g(2s, t) - g(s, t) = s E[1/a] at the left end.
        let twice = shape_exponential(&alpha, &beta, 0.1, 2.0).unwrap();
        assert!(close(twice.g, 2.0 * low.g, 1e-10));
    }

    #[test]
    fn degenerate_exponential() {
        let law = ParamLaw::Uniform(0.0_f64, 1.0);
        let e = shape_exponential(&law, &law, 1.0, 1.0).unwrap();
        assert_eq!(e.regime, Regime::Degenerate);
        assert!(e.g.is_infinite());
        // densities 3x² on [0,1] and x/2 on [0,2]: E[1/a] = 3/2, E[1/b] = 1
        let alpha = ParamLaw::Power { p: 2.0, lo: 0.0, hi: 1.0, anchor: Default::default() };
        let beta = ParamLaw::Power { p: 1.0, lo: 0.0, hi: 2.0, anchor: Default::default() };
        let e = shape_exponential(&alpha, &beta, 2.0, 3.0).unwrap();
        assert_eq!(e.regime, Regime::Degenerate);
        assert!(close(e.g, 6.0, 1e-9), "{}", e.g);
    }

    #[test]
    fn geometric_homogeneous() {
        let q: f64 = 0.25;
        let law = ParamLaw::Point(q.sqrt());
        for r in [0.5, 1.0, 2.0] {
            let e = shape_geometric(&law, &law, r, 1.0).unwrap();
            let gamma = (q * (1.0 + r) + 2.0 * (q * r).sqrt()) / (1.0 - q);
            let sigma = (q / r).powf(1.0 / 6.0) * (q.sqrt() + r.sqrt()).powf(2.0 / 3.0)
                * (1.0 + (q * r).sqrt()).powf(2.0 / 3.0)
                / (1.0 - q);
            assert!(close(e.g, gamma, 1e-12), "r={r}: {} vs {gamma}", e.g);
            assert!(close(e.sigma.unwrap(), sigma, 1e-10), "r={r}");
        }
    }

    #[test]
    fn geometric_degenerate_branch() {
        let law = ParamLaw::Uniform(0.0_f64, 1.0);
        let e = shape_geometric(&law, &law, 1.0, 1.0).unwrap();
        assert_eq!(e.regime, Regime::Degenerate);
        assert!(e.g.is_infinite());
    }

    #[test]
    fn reciprocal_closed_form_symmetric() {
        let q = 0.36;
        let v = shape_geometric_closed_reciprocal(q, 0.2, 0.2, 1.0, 1.0).unwrap();
        let law = ParamLaw::Reciprocal(0.4, 0.6);
        let e = shape_geometric(&law, &law, 1.0, 1.0).unwrap();
        assert!(close(v, e.g, 1e-10), "{v} vs {}", e.g);
        assert!(shape_geometric_closed_reciprocal(q, 0.7, 0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn empirical_constant_prefixes() {
        let sq = 0.5;
        let a = vec![sq; 7];
        let b = vec![sq; 7];
        let emp = empirical_shape(&a, &b).unwrap();
        let pop = shape_geometric(&ParamLaw::Point(sq), &ParamLaw::Point(sq), 1.0, 1.0).unwrap();
        assert!(close(emp.gamma_mn, pop.g, 1e-12));
        assert!(close(emp.zeta_mn, pop.zeta, 1e-12));
        assert!(close(emp.sigma_mn, pop.sigma.unwrap(), 1e-10));
    }

    #[test]
    fn scaling_index_identities() {
        let emp = empirical_shape(&[0.5_f64; 64], &[0.5; 64]).unwrap();
        assert_eq!(emp.scaling_index(0.0), (64.0 * emp.gamma_mn).floor() as i64);
        let step = 1.0 / (64f64.cbrt() * emp.sigma_mn);
        for s in [-2.0, -0.3, 0.0, 1.7] {
            assert!((emp.rescaled_index(s) - s).abs() <= step);
        }
    }

    #[test]
    fn level_curve_hits_axes() {
        let law = ParamLaw::Point(0.5);
        let pts = level_curve(|s, t| Ok(shape_exponential(&law, &law, s, t)?.g), 5).unwrap();
        assert!(close(pts[0].0, 1.0, 1e-12) && close(pts[0].1, 0.0, 1e-12));
        assert!(close(pts[4].1, 1.0, 1e-12));
    }
}
