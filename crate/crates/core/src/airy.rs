//! Airy function, Airy kernel and the Tracy-Widom GUE distribution.
//!
//! `Ai(s) = (1/2πi) ∫ exp(z³/3 - sz) dz` over a contour from `∞e^{-iθ}`
//! to `∞e^{iθ}`. By symmetry `Ai(s) = (1/π) Im ∫_{upper half}`. For `s ≥ 0`
//! the upper half is the ray at `θ = π/3`. For `s < 0` that ray carries a
//! factor up to `exp((2/3)(|s|/2)^{3/2})` that cancels in the imaginary part,
//! so the path is moved through the saddle `i√|s|`: the segment `[0, i√|s|]`
//! (unit modulus) followed by the descent ray `i√|s| + t e^{iπ/4}`. For
//! `s ≥ 1` the vertical line through the saddle `√s` keeps the relative
//! accuracy of the exponentially small value.

use crate::numeric::linalg::{Lu, Matrix};
use crate::numeric::ode::DormandPrince;
use crate::numeric::quad::GaussLegendre;
use crate::{Error, Real, Result};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest `|s|` accepted by [`airy_pair`].
pub const AIRY_RANGE: f64 = 30.0;
/// Beyond this argument `Ai` is below `1e-100` and treated as zero.
const AIRY_NEGLIGIBLE: f64 = 30.0;
const PANEL: f64 = 0.25;
/// `log` of the integrand size at which the contour is cut.
const CUT: f64 = 45.0;

fn path_integral<T: Real>(
    rule: &GaussLegendre<T>,
    len: T,
    point: impl Fn(T) -> Complex<T>,
    dir: Complex<T>,
    s: T,
) -> (Complex<T>, Complex<T>) {
    let panels = (len / T::lit(PANEL)).ceil().to_usize().unwrap_or(1).max(1);
    let h = len / T::from_usize_lossy(panels);
    let third = T::lit(1.0 / 3.0);
    let mut ai = Complex::new(T::zero(), T::zero());
    let mut aip = ai;
    for p in 0..panels {
        let lo = h * T::from_usize_lossy(p);
        for (t, w) in rule.mapped(lo, lo + h) {
            let z = point(t);
            let e = (z * z * z * third - z * s).exp() * dir * w;
            ai = ai + e;
            aip = aip - z * e;
        }
    }
    (ai, aip)
}

/// `(Ai(s), Ai'(s))` by contour quadrature.
pub fn airy_pair<T: Real>(s: T) -> Result<(T, T)> {
    if !(s.abs() <= T::lit(AIRY_RANGE)) {
        return Err(Error::OutOfRange(format!("Airy argument {s} beyond ±{AIRY_RANGE}")));
    }
    let rule = GaussLegendre::<T>::new(20);
    let cut = T::lit(CUT);
    let (ai, aip) = if s >= T::one() {
        // vertical line through the saddle √s: Re f = -(2/3)s^{3/2} - √s y²
        let p = s.sqrt();
        let up = Complex::new(T::zero(), T::one());
        let len = (cut / p).sqrt();
        path_integral(&rule, len, |t| up * t + p, up, s)
    } else if s >= T::zero() {
        // |integrand| = exp(-r³/3 - s r/2)
        let dir = Complex::from_polar(T::one(), T::PI() / T::lit(3.0));
        let r = crate::numeric::roots::bisect(|r| r * r * r / T::lit(3.0) + s * r / T::lit(2.0) - cut, T::zero(), T::lit(10.0), true)?;
        path_integral(&rule, r, |t| dir * t, dir, s)
    } else {
        let p = (-s).sqrt();
        let up = Complex::new(T::zero(), T::one());
        let (a1, d1) = path_integral(&rule, p, |t| up * t, up, s);
        // Re f drops by √|s| t² + t³/(3√2) along the descent ray
        let dir = Complex::from_polar(T::one(), T::FRAC_PI_4());
        let k = T::one() / (T::lit(3.0) * T::SQRT_2());
        let len = crate::numeric::roots::bisect(|t| p * t * t + k * t * t * t - cut, T::zero(), T::lit(10.0), true)?;
        let (a2, d2) = path_integral(&rule, len, |t| up * p + dir * t, dir, s);
        (a1 + a2, d1 + d2)
    };
    Ok((ai.im / T::PI(), aip.im / T::PI()))
}

pub fn airy<T: Real>(s: T) -> Result<T> {
    airy_pair(s).map(|p| p.0)
}

pub fn airy_prime<T: Real>(s: T) -> Result<T> {
    airy_pair(s).map(|p| p.1)
}

/// Quintic Hermite interpolant through values, first and second derivatives.
fn hermite5<T: Real>(t: T, h: T, f: [T; 2], d: [T; 2], dd: [T; 2]) -> T {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let l = T::lit;
    let h0 = T::one() - l(10.0) * t3 + l(15.0) * t4 - l(6.0) * t5;
    let h1 = t - l(6.0) * t3 + l(8.0) * t4 - l(3.0) * t5;
    let h2 = (t2 - l(3.0) * t3 + l(3.0) * t4 - t5) / l(2.0);
    let h3 = (t3 - l(2.0) * t4 + t5) / l(2.0);
    let h4 = -l(4.0) * t3 + l(7.0) * t4 - l(3.0) * t5;
    let h5 = l(10.0) * t3 - l(15.0) * t4 + l(6.0) * t5;
    f[0] * h0 + h * d[0] * h1 + h * h * dd[0] * h2 + f[1] * h5 + h * d[1] * h4 + h * h * dd[1] * h3
}

/// `Ai` and `Ai'` tabulated on a uniform grid, interpolated with quintic
/// Hermite polynomials using `Ai'' = s Ai` and `Ai''' = Ai + s Ai'`.
#[derive(Clone, Debug)]
pub struct AiryTable<T> {
    pub grid: Vec<T>,
    pub ai: Vec<T>,
    pub ai_prime: Vec<T>,
    step: T,
}

impl<T: Real> AiryTable<T> {
    pub fn new(lo: T, hi: T, step: T) -> Result<Self> {
        if !(lo < hi) || !(step > T::zero()) {
            return Err(Error::OutOfRange(format!("table [{lo}, {hi}] step {step}")));
        }
        let count = ((hi - lo) / step).round().to_usize().unwrap_or(0) + 1;
        let grid: Vec<T> = (0..count).map(|i| lo + step * T::from_usize_lossy(i)).collect();
        let pairs = grid.par_iter().map(|&s| airy_pair(s)).collect::<Result<Vec<_>>>()?;
        let (ai, ai_prime) = pairs.into_iter().unzip();
        Ok(Self { grid, ai, ai_prime, step })
    }

    /// `[-30, 30]` with step `0.02`.
    pub fn standard() -> Result<Self> {
        Self::new(-T::lit(AIRY_RANGE), T::lit(AIRY_RANGE), T::lit(0.02))
    }

    fn locate(&self, s: T) -> Option<(usize, T)> {
        let lo = self.grid[0];
        let pos = (s - lo) / self.step;
        if pos < T::zero() {
            return None;
        }
        let i = pos.floor().to_usize()?.min(self.grid.len() - 2);
        Some((i, (s - self.grid[i]) / self.step))
    }

    /// `(Ai(s), Ai'(s))`; zero above the table, an error below it.
    pub fn eval(&self, s: T) -> Result<(T, T)> {
        if s > *self.grid.last().unwrap() {
            return if s > T::lit(AIRY_NEGLIGIBLE) {
                Ok((T::zero(), T::zero()))
            } else {
                airy_pair(s)
            };
        }
        let (i, t) = self
            .locate(s)
            .ok_or_else(|| Error::OutOfRange(format!("{s} below the Airy table")))?;
        let x = [self.grid[i], self.grid[i + 1]];
        let f = [self.ai[i], self.ai[i + 1]];
        let d = [self.ai_prime[i], self.ai_prime[i + 1]];
        let dd = [x[0] * f[0], x[1] * f[1]];
        let ddd = [f[0] + x[0] * d[0], f[1] + x[1] * d[1]];
        Ok((hermite5(t, self.step, f, d, dd), hermite5(t, self.step, d, dd, ddd)))
    }

    pub fn ai(&self, s: T) -> Result<T> {
        self.eval(s).map(|p| p.0)
    }

    /// Largest `|Ai'' - s Ai|` on interior points, with `Ai''` from the
    /// eighth-order centred difference of the tabulated values.
    pub fn ode_residual(&self) -> T {
        const C: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
        let h2 = self.step * self.step;
        (4..self.grid.len().saturating_sub(4))
            .map(|i| {
                let mut d2 = T::lit(C[0]) * self.ai[i];
                for (k, &c) in C.iter().enumerate().skip(1) {
                    d2 = d2 + T::lit(c) * (self.ai[i + k] + self.ai[i - k]);
                }
                (d2 / h2 - self.grid[i] * self.ai[i]).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// `∫_0^L` nodes and weights for the kernel integral, in panels of width 1/2.
fn kernel_rule<T: Real>(len: T) -> Vec<(T, T)> {
    let rule = GaussLegendre::<T>::new(16);
    let panels = (len * T::lit(2.0)).ceil().to_usize().unwrap_or(1).max(1);
    let h = len / T::from_usize_lossy(panels);
    (0..panels)
        .flat_map(|p| {
            let lo = h * T::from_usize_lossy(p);
            rule.mapped(lo, lo + h).collect::<Vec<_>>()
        })
        .collect()
}

/// Lowest argument accepted by the kernel.
const KERNEL_FLOOR: f64 = -20.0;
/// Arguments above this contribute below `1e-70` to the kernel integral.
const KERNEL_TOP: f64 = 25.0;

/// `A(s, t) = ∫_0^∞ Ai(s + x) Ai(t + x) dx`.
pub fn airy_kernel<T: Real>(table: &AiryTable<T>, s: T, t: T) -> Result<T> {
    if s < T::lit(KERNEL_FLOOR) || t < T::lit(KERNEL_FLOOR) {
        return Err(Error::OutOfRange(format!("kernel arguments ({s}, {t}) below {KERNEL_FLOOR}")));
    }
    let len = (T::lit(KERNEL_TOP) - s.min(t)).max(T::zero());
    kernel_rule(len)
        .into_iter()
        .map(|(x, w)| Ok(w * table.ai(s + x)? * table.ai(t + x)?))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwMethod {
    Fredholm,
    Painleve,
}

impl std::fmt::Display for TwMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TwMethod::Fredholm => "fredholm",
            TwMethod::Painleve => "painleve",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TWEval<T> {
    pub s: T,
    #[serde(rename = "F")]
    pub f: T,
    pub method: TwMethod,
    pub est_error: T,
}

/// Lowest `s` accepted by the Tracy-Widom routines.
pub const TW_FLOOR: f64 = -10.0;
const PAINLEVE_START: f64 = 10.0;

/// Tracy-Widom GUE evaluator sharing one Airy table.
#[derive(Clone, Debug)]
pub struct TracyWidom<T> {
    table: AiryTable<T>,
    t0: T,
}

impl<T: Real> TracyWidom<T> {
    pub fn new() -> Result<Self> {
        Ok(Self {
            table: AiryTable::standard()?,
            t0: T::lit(PAINLEVE_START),
        })
    }

    /// Starting point of the backward Painlevé integration.
    pub fn with_start(mut self, t0: T) -> Self {
        self.t0 = t0;
        self
    }

    pub fn table(&self) -> &AiryTable<T> {
        &self.table
    }

    fn check(s: T) -> Result<()> {
        if s >= T::lit(TW_FLOOR) && s.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("s = {s} below {TW_FLOOR}")))
        }
    }

    /// Symmetrised Nyström matrix `√w_i A(x_i, x_j) √w_j` on `(s, ∞)` with
    /// `x = s + u/(1-u)` and an `n`-point rule in `u`.
    pub fn nystrom_matrix(&self, s: T, n: usize) -> Result<Matrix<T>> {
        let rule = GaussLegendre::<T>::new(n);
        let one = T::one();
        let pts: Vec<(T, T)> = rule
            .mapped(T::zero(), one)
            .map(|(u, w)| (s + u / (one - u), (w / ((one - u) * (one - u))).sqrt()))
            .collect();
        let inner = kernel_rule((T::lit(KERNEL_TOP) - s).max(T::zero()));
        // A = B Bᵀ with B(i, l) = √w_i Ai(x_i + t_l) √v_l
        let rows = pts
            .par_iter()
            .map(|&(x, sw)| {
                inner
                    .iter()
                    .map(|&(t, v)| Ok(sw * self.table.ai(x + t)? * v.sqrt()))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(n, n, |i, j| {
            rows[i].iter().zip(&rows[j]).map(|(&p, &q)| p * q).sum()
        }))
    }

    fn fredholm_det(&self, s: T, n: usize) -> Result<T> {
        let a = self.nystrom_matrix(s, n)?;
        let m = Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() } - a[(i, j)]);
        Ok(Lu::new(&m).det())
    }

    /// `det(I - A)` on `L²(s, ∞)`, doubling the node count from 32 to 256.
    pub fn fredholm(&self, s: T) -> Result<TWEval<T>> {
        Self::check(s)?;
        let mut n = 32;
        let mut prev = self.fredholm_det(s, n)?;
        while n < 256 {
            n *= 2;
            let next = self.fredholm_det(s, n)?;
            let err = (next - prev).abs();
            if err <= T::tol(1e-10) {
                return Ok(TWEval {
                    s,
                    f: next.max(T::zero()).min(T::one()),
                    method: TwMethod::Fredholm,
                    est_error: err,
                });
            }
            prev = next;
        }
        Err(Error::NotConverged(format!("Nyström determinant at s = {s} with 256 nodes")))
    }

    /// The alternating series truncated after `order` terms, each term an
    /// `l`-fold Gauss-Legendre cubature on `(s, ∞)` with `nodes` points.
    pub fn fredholm_series(&self, s: T, order: usize, nodes: usize) -> Result<T> {
        Self::check(s)?;
        let a = self.nystrom_matrix(s, nodes)?;
        let mut total = T::one();
        let mut idx = Vec::with_capacity(order);
        fn walk<T: Real>(a: &Matrix<T>, start: usize, order: usize, idx: &mut Vec<usize>, total: &mut T) {
            if !idx.is_empty() {
                let sign = if idx.len() % 2 == 1 { -T::one() } else { T::one() };
                *total = *total + sign * Lu::new(&a.select(idx, idx)).det();
            }
            if idx.len() == order {
                return;
            }
            for i in start..a.rows() {
                idx.push(i);
                walk(a, i + 1, order, idx, total);
                idx.pop();
            }
        }
        walk(&a, 0, order, &mut idx, &mut total);
        Ok(total)
    }

    /// Solution of `q'' = 2q³ + tq` with `q ~ Ai` at `+∞`, carried backward
    /// from `t0` together with `I1 = ∫_t^∞ q²` and `I2 = ∫_t^∞ (u - t) q²`.
    /// Returns `(q, q', I1, I2)` at `s`.
    pub fn painleve_state(&self, s: T) -> Result<[T; 4]> {
        let t0 = self.t0;
        let (q0, dq0) = airy_pair(t0)?;
        let tail = kernel_rule(T::lit(AIRY_NEGLIGIBLE) - t0);
        let mut i1 = T::zero();
        let mut i2 = T::zero();
        for (x, w) in tail {
            let a = self.table.ai(t0 + x)?;
            i1 = i1 + w * a * a;
            i2 = i2 + w * x * a * a;
        }
        let y0 = [q0, dq0, i1, i2];
        if s >= t0 {
            return Err(Error::OutOfRange(format!("s = {s} above the start {t0}")));
        }
        // q is about 1e-10 at the start: control the relative error only
        let ode = DormandPrince {
            atol: T::min_positive_value(),
            ..DormandPrince::default()
        };
        let y = ode.integrate(
            |t, y, dy| {
                dy[0] = y[1];
                dy[1] = T::lit(2.0) * y[0] * y[0] * y[0] + t * y[0];
                dy[2] = -y[0] * y[0];
                dy[3] = -y[2];
            },
            t0,
            &y0,
            s,
            |t, y| {
                if y[0].abs() > T::lit(1e6) {
                    Err(Error::LeftBoundaryTooFar(t.to64()))
                } else {
                    Ok(())
                }
            },
        )?;
        Ok([y[0], y[1], y[2], y[3]])
    }

    /// `F(s) = exp(-∫_s^∞ (t - s) q(t)² dt)`.
    pub fn painleve(&self, s: T) -> Result<TWEval<T>> {
        Self::check(s)?;
        let f = if s >= self.t0 {
            T::one()
        } else {
            (-self.painleve_state(s)?[3]).exp()
        };
        Ok(TWEval {
            s,
            f: f.max(T::zero()).min(T::one()),
            method: TwMethod::Painleve,
            est_error: T::tol(1e-10),
        })
    }

    pub fn eval(&self, s: T, method: TwMethod) -> Result<TWEval<T>> {
        match method {
            TwMethod::Fredholm => self.fredholm(s),
            TwMethod::Painleve => self.painleve(s),
        }
    }
}

pub fn tw_gue_fredholm<T: Real>(s: T) -> Result<TWEval<T>> {
    TracyWidom::new()?.fredholm(s)
}

pub fn tw_gue_painleve<T: Real>(s: T) -> Result<TWEval<T>> {
    TracyWidom::new()?.painleve(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of the Airy equation: Ai = c1 f - c2 g.
    fn ai_series(s: f64) -> f64 {
        let c1 = 0.355_028_053_887_817_2;
        let c2 = 0.258_819_403_792_806_8;
        let (mut f, mut g) = (0.0, 0.0);
        let (mut tf, mut tg) = (1.0, s);
        for k in 0..60 {
            f += tf;
            g += tg;
            let k = k as f64;
            tf *= s * s * s / ((3.0 * k + 2.0) * (3.0 * k + 3.0));
            tg *= s * s * s / ((3.0 * k + 3.0) * (3.0 * k + 4.0));
        }
        c1 * f - c2 * g
    }

    #[test]
    fn airy_at_zero() {
        let want = 3f64.powf(-2.0 / 3.0) / 1.354_117_939_426_400_4;
        assert!((airy(0.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn airy_against_series() {
        for s in [-6.0, -3.5, -1.0, 0.7, 2.0, 4.0] {
            let (a, b) = (airy(s).unwrap(), ai_series(s));
            assert!((a - b).abs() < 1e-12, "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn airy_far_left_is_bounded() {
        // |Ai(s)| ≤ |s|^{-1/4}/√π asymptotically
        let a = airy(-30.0_f64).unwrap();
        assert!(a.abs() < 0.25);
        assert!(airy(31.0).is_err());
    }

    #[test]
    fn table_interpolates() {
        let t = AiryTable::new(-5.0_f64, 5.0, 0.02).unwrap();
        for s in [-4.33, -0.01, 1.234, 4.99] {
            let (a, d) = t.eval(s).unwrap();
            let (ea, ed) = airy_pair(s).unwrap();
            assert!((a - ea).abs() < 1e-12 && (d - ed).abs() < 1e-11);
        }
    }

    #[test]
    fn kernel_is_symmetric_and_nonnegative() {
        let t = AiryTable::new(-12.0_f64, 30.0, 0.02).unwrap();
        let k12 = airy_kernel(&t, -1.0, 0.5).unwrap();
        let k21 = airy_kernel(&t, 0.5, -1.0).unwrap();
        assert!((k12 - k21).abs() < 1e-15);
        assert!(airy_kernel(&t, 0.3, 0.3).unwrap() > 0.0);
    }

    #[test]
    fn kernel_diagonal_identity() {
        // A(s, s) = Ai'(s)² - s Ai(s)², from d/ds A(s, s) = -Ai(s)²
        let t = AiryTable::new(-12.0_f64, 30.0, 0.02).unwrap();
        for s in [-3.0_f64, 0.0, 1.5] {
            let (a, d) = airy_pair(s).unwrap();
            let k = airy_kernel(&t, s, s).unwrap();
            assert!((k - (d * d - s * a * a)).abs() < 1e-11, "{s}");
        }
    }

    #[test]
    fn painleve_tracks_airy_on_the_right() {
        let tw = TracyWidom::<f64>::new().unwrap();
        for s in [6.0, 8.0, 9.5] {
            let q = tw.painleve_state(s).unwrap()[0];
            assert!((q / airy(s).unwrap() - 1.0).abs() < 1e-8);
        }
    }
}
