//! Steepest-descent geometry of the action function
//! `f(z) = -(1/n) Σ log(z - a_i) + (1/n) Σ log(1 - z b_j) + (γ + m/n) log z`
//! around its double critical point `ζ`.
//!
//! `n f(z) + (x - nγ) log z = log F_x(z)`, so the curve `Φ` on which
//! `v = Im f` stays at `v(ζ) = 0` while `u = Re f` decreases carries the
//! kernel integrals with their mass concentrated near `ζ`.

use crate::exactdist::{log_integrand, KernelContext};
use crate::numeric::roots::bisect;
use crate::shape::{empirical_g, empirical_shape, EmpiricalShape};
use crate::{Error, Real, Result};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const STALL: f64 = 1e-13;
const STEP_DV: f64 = 1e-10;
const ORIGIN: f64 = 1e-10;
const EPS_SAMPLES: usize = 720;
const ROMBERG_LEVELS: usize = 14;

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Principal `log(num/den)` for `num = den + w` and `den > 0`, through
/// `log(1 + w/den)` when `w` is small.
fn ln_ratio<T: Real>(num: Complex<T>, den: T, w: Complex<T>) -> Complex<T> {
    let r = w / den;
    if r.norm() > T::lit(0.5) {
        return num.ln() - den.ln();
    }
    let two = T::lit(2.0);
    Complex::new((two * r.re + r.norm_sqr()).ln_1p() / two, r.im.atan2(T::one() + r.re))
}

/// Distinct positive entries with multiplicities, ascending.
fn distinct<T: Real>(v: &[T]) -> Vec<(T, usize)> {
    let mut s: Vec<T> = v.iter().copied().filter(|&x| x > T::zero()).collect();
    s.sort_by(|x, y| x.partial_cmp(y).expect("finite parameters"));
    let mut out: Vec<(T, usize)> = Vec::new();
    for x in s {
        match out.last_mut() {
            Some((y, k)) if *y == x => *k += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn poly_mul<T: Real>(p: &[T], c0: T, c1: T) -> Vec<T> {
    let mut out = vec![T::zero(); p.len() + 1];
    for (k, &pk) in p.iter().enumerate() {
        out[k] = out[k] + pk * c0;
        out[k + 1] = out[k + 1] + pk * c1;
    }
    out
}

/// Horner evaluation of ascending coefficients.
pub fn poly_eval<T: Real>(p: &[T], z: T) -> T {
    p.iter().rev().fold(T::zero(), |acc, &k| acc * z + k)
}

#[derive(Clone, Debug)]
pub struct ActionFunction<T> {
    a: Vec<T>,
    b: Vec<T>,
    shape: EmpiricalShape<T>,
    /// `γ + m/n`
    coef: T,
    inv_n: T,
    da: Vec<(T, usize)>,
    db: Vec<(T, usize)>,
}

impl<T: Real> ActionFunction<T> {
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        let shape = empirical_shape(&a, &b)?;
        let inv_n = T::one() / T::from_usize_lossy(b.len());
        let coef = shape.gamma_mn + T::from_usize_lossy(a.len()) * inv_n;
        let (da, db) = (distinct(&a), distinct(&b));
        Ok(Self { a, b, shape, coef, inv_n, da, db })
    }

    pub fn from_context(ctx: &KernelContext<T>) -> Result<Self> {
        Self::new(ctx.a().to_vec(), ctx.b().to_vec())
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn shape(&self) -> &EmpiricalShape<T> {
        &self.shape
    }

    pub fn zeta(&self) -> T {
        self.shape.zeta_mn
    }

    pub fn gamma(&self) -> T {
        self.shape.gamma_mn
    }

    pub fn f(&self, z: Complex<T>) -> Complex<T> {
        let one = c(T::one());
        let sa: Complex<T> = self.a.iter().map(|&ai| (z - ai).ln()).sum();
        let sb: Complex<T> = self.b.iter().map(|&bj| (one - z * bj).ln()).sum();
        (sb - sa) * self.inv_n + z.ln() * self.coef
    }

    pub fn u(&self, z: Complex<T>) -> T {
        self.f(z).re
    }

    pub fn v(&self, z: Complex<T>) -> T {
        self.f(z).im
    }

    /// `f(z) - f(ζ)` through `log(1 + w)` so that the cubic behaviour near
    /// the saddle is not lost to cancellation.
    pub fn delta(&self, z: Complex<T>) -> Complex<T> {
        let zeta = self.zeta();
        let w = z - zeta;
        let one = T::one();
        let sa: Complex<T> = self.a.iter().map(|&ai| ln_ratio(z - ai, zeta - ai, w)).sum();
        let sb: Complex<T> = self
            .b
            .iter()
            .map(|&bj| ln_ratio(-z * bj + one, one - zeta * bj, -w * bj))
            .sum();
        (sb - sa) * self.inv_n + ln_ratio(z, zeta, w) * self.coef
    }

    pub fn f_prime(&self, z: Complex<T>) -> Complex<T> {
        let one = c(T::one());
        let sa: Complex<T> = self.a.iter().map(|&ai| (z - ai).inv()).sum();
        let sb: Complex<T> = self.b.iter().map(|&bj| c(bj) / (one - z * bj)).sum();
        -(sa + sb) * self.inv_n + z.inv() * self.coef
    }

    pub fn f_second(&self, z: Complex<T>) -> Complex<T> {
        let one = c(T::one());
        let sa: Complex<T> = self.a.iter().map(|&ai| (z - ai).powi(2).inv()).sum();
        let sb: Complex<T> = self.b.iter().map(|&bj| c(bj * bj) / (one - z * bj).powi(2)).sum();
        (sa - sb) * self.inv_n - z.powi(2).inv() * self.coef
    }

    /// `f‴(ζ) = -2σ³/ζ³`.
    pub fn f_third_at_zeta(&self) -> T {
        let s = self.shape.sigma_mn;
        -T::lit(2.0) * s * s * s / self.zeta().powi(3)
    }

    /// `z f'(z)` on the real axis, which is `γ - g_{m,n}(z)`.
    pub fn zf_real(&self, t: T) -> T {
        self.gamma() - empirical_g(&self.a, &self.b, t)
    }

    pub fn distinct_a(&self) -> &[(T, usize)] {
        &self.da
    }

    pub fn distinct_b(&self) -> &[(T, usize)] {
        &self.db
    }

    /// Ascending coefficients of `P(z) = z f'(z) Π (z - ǎ_i) Π (1 - b̌_j z)`
    /// over the distinct positive parameter values.
    pub fn numerator_polynomial(&self) -> Vec<T> {
        let da = self.distinct_a();
        let db = self.distinct_b();
        let one = T::one();
        let zero_b = self.b.iter().filter(|&&bj| bj == T::zero()).count();
        let constant = self.gamma() + one - T::from_usize_lossy(zero_b) * self.inv_n;
        let product = |skip_a: Option<usize>, skip_b: Option<usize>| {
            let mut p = vec![one];
            for (i, &(ai, _)) in da.iter().enumerate() {
                if Some(i) != skip_a {
                    p = poly_mul(&p, -ai, one);
                }
            }
            for (j, &(bj, _)) in db.iter().enumerate() {
                if Some(j) != skip_b {
                    p = poly_mul(&p, one, -bj);
                }
            }
            p
        };
        let mut out: Vec<T> = product(None, None).into_iter().map(|x| x * constant).collect();
        let mut sub = |p: Vec<T>, w: T| {
            for (k, x) in p.into_iter().enumerate() {
                out[k] = out[k] - w * x;
            }
        };
        for (i, &(ai, mult)) in da.iter().enumerate() {
            sub(product(Some(i), None), T::from_usize_lossy(mult) * ai * self.inv_n);
        }
        for (j, &(_, mult)) in db.iter().enumerate() {
            sub(product(None, Some(j)), T::from_usize_lossy(mult) * self.inv_n);
        }
        out
    }

    /// Distance from `z` to the nearest singularity of `f'`.
    pub fn singular_distance(&self, z: Complex<T>) -> T {
        let mut d = z.norm();
        for &(ai, _) in &self.da {
            d = d.min((z - ai).norm());
        }
        for &(bj, _) in &self.db {
            d = d.min((z - T::one() / bj).norm());
        }
        d
    }

    /// Radius of the disc around `ζ` free of other singularities and zeros
    /// of `f'` on the real axis.
    pub fn saddle_gap(&self) -> T {
        let zeta = self.zeta();
        let lo = self.a.iter().copied().fold(T::zero(), T::max);
        let hi = self
            .b
            .iter()
            .filter(|&&bj| bj > T::zero())
            .map(|&bj| T::one() / bj)
            .fold(T::infinity(), T::min);
        (zeta - lo).min(hi - zeta).min(zeta)
    }

    /// `ε₀ = min(r, 1/K₀, 1)/16` with
    /// `K₀ = (2/r)^4 · 3!/|f‴(ζ)| · sup_{|z-ζ| = r/2} (|f - f(ζ)| + r|f'|)`,
    /// the supremum estimated from boundary samples.
    pub fn eps0(&self) -> T {
        let r = self.saddle_gap();
        let half = r / T::lit(2.0);
        let zeta = self.zeta();
        let sup = (0..EPS_SAMPLES)
            .map(|k| {
                let th = T::PI() * T::lit(2.0) * T::from_usize_lossy(k) / T::from_usize_lossy(EPS_SAMPLES);
                let z = c(zeta) + Complex::from_polar(half, th);
                self.delta(z).norm() + r * self.f_prime(z).norm()
            })
            .fold(T::zero(), T::max);
        let k0 = (T::lit(2.0) / r).powi(4) * T::lit(6.0) / self.f_third_at_zeta().abs() * sup;
        r.min(k0.recip()).min(T::one()) / T::lit(16.0)
    }

    /// Length of the analytic first step off the saddle.
    pub fn initial_step(&self) -> T {
        (self.eps0() / T::lit(1024.0)).min(self.saddle_gap() / T::lit(8.0))
    }

    /// `log F_x(z)` for the integer index `x`.
    pub fn log_integrand(&self, x: u64, z: Complex<T>) -> Result<Complex<T>> {
        log_integrand(&self.a, &self.b, x, z)
    }
}

/// Real zeros of `f'`: the simple ones in the parameter gaps and the double
/// zero at `ζ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSet<T> {
    pub simple: Vec<T>,
    pub double: T,
}

impl<T> ZeroSet<T> {
    /// Count with multiplicity.
    pub fn count(&self) -> usize {
        self.simple.len() + 2
    }
}

pub fn locate_zeros<T: Real>(af: &ActionFunction<T>) -> Result<ZeroSet<T>> {
    let mut gaps: Vec<(T, T)> = af.distinct_a().windows(2).map(|w| (w[0].0, w[1].0)).collect();
    let recips: Vec<T> = af.distinct_b().iter().rev().map(|&(bj, _)| T::one() / bj).collect();
    gaps.extend(recips.windows(2).map(|w| (w[0], w[1])));
    let h = |t: T| af.zf_real(t);
    let mut simple = Vec::with_capacity(gaps.len());
    for (lo, hi) in gaps {
        let off = (hi - lo) * T::lit(1e-9);
        let (l, r) = (h(lo + off), h(hi - off));
        if !(l.signum() * r.signum() < T::zero()) {
            return Err(Error::EmptyBracket(format!("no sign change of f' on ({lo}, {hi})")));
        }
        simple.push(bisect(h, lo, hi, l < T::zero())?);
    }
    Ok(ZeroSet { simple, double: af.zeta() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `Φ`, leaving along `e^{2πi/3}`.
    Descent,
    /// `Ψ`, leaving along `e^{πi/3}`.
    Ascent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StopRule<T> {
    /// Descent stops on `|z| ≤ radius` (run to the origin when zero); ascent
    /// on `|z| ≥ radius`.
    pub radius: T,
    pub max_steps: usize,
}

impl<T: Real> StopRule<T> {
    pub const DEFAULT_STEPS: usize = 200_000;

    /// `δ = ζ/10`.
    pub fn descent(af: &ActionFunction<T>) -> Self {
        Self { radius: af.zeta() / T::lit(10.0), max_steps: Self::DEFAULT_STEPS }
    }

    pub fn to_origin() -> Self {
        Self { radius: T::zero(), max_steps: Self::DEFAULT_STEPS }
    }

    /// `R = 3 max 1/b_j`.
    pub fn ascent(af: &ActionFunction<T>) -> Self {
        let r = af
            .b()
            .iter()
            .filter(|&&bj| bj > T::zero())
            .map(|&bj| T::one() / bj)
            .fold(T::zero(), T::max);
        Self { radius: T::lit(3.0) * r, max_steps: Self::DEFAULT_STEPS }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus<T> {
    ReachedOrigin,
    ExitedDiskRadius(T),
    StepLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct TracedContour<T> {
    pub direction: Direction,
    /// Starts at `ζ` with parameter 0.
    pub points: Vec<Complex<T>>,
    pub arclength: Vec<T>,
    pub status: TraceStatus<T>,
    pub zeta: T,
    pub initial_step: T,
}

impl<T: Real> TracedContour<T> {
    fn first_crossing(&self, inside: impl Fn(Complex<T>) -> T) -> Option<T> {
        // `inside` is negative before the crossing and positive after
        let idx = self.points.iter().position(|&z| inside(z) >= T::zero())?;
        if idx == 0 {
            return Some(T::zero());
        }
        let (z0, z1) = (self.points[idx - 1], self.points[idx]);
        let (t0, t1) = (self.arclength[idx - 1], self.arclength[idx]);
        let s = bisect(|s| inside(z0 + (z1 - z0) * s), T::zero(), T::one(), true).ok()?;
        Some(t0 + (t1 - t0) * s)
    }

    /// `τ(ε)`: first parameter with `|Φ(t) - ζ| = ε`.
    pub fn exit_time(&self, eps: T) -> Option<T> {
        let zeta = self.zeta;
        self.first_crossing(|z| (z - zeta).norm() - eps)
    }

    /// `τ′(δ)`: first parameter with `|Φ(t)| = δ`.
    pub fn origin_time(&self, delta: T) -> Option<T> {
        self.first_crossing(|z| delta - z.norm())
    }

    /// Total parameter length.
    pub fn length(&self) -> T {
        self.arclength.last().copied().unwrap_or(T::zero())
    }

    /// Points other than an exact terminal origin.
    pub fn regular_points(&self) -> impl Iterator<Item = &Complex<T>> {
        self.points.iter().filter(|z| z.norm() > T::zero())
    }

    /// `max |v(z) - v(ζ)|` along the trace.
    pub fn v_drift(&self, af: &ActionFunction<T>) -> T {
        self.regular_points().map(|&z| af.delta(z).im.abs()).fold(T::zero(), T::max)
    }
}

/// Newton steps along `∇v = i·conj(f')` back onto `v = v(ζ)`; skipped when
/// the correction would exceed `limit`.
fn project<T: Real>(af: &ActionFunction<T>, mut z: Complex<T>, limit: T) -> Complex<T> {
    for _ in 0..2 {
        let v = af.delta(z).im;
        let d = af.f_prime(z);
        let m2 = d.norm_sqr();
        if m2 == T::zero() {
            break;
        }
        let shift = Complex::new(T::zero(), v) * d.conj() / m2;
        if !(shift.norm() <= limit) {
            break;
        }
        z = z - shift;
    }
    z
}

/// Point on `|z| = r` near `z` with `v = v(ζ)`, by Newton in the angle.
fn snap_to_circle<T: Real>(af: &ActionFunction<T>, z: Complex<T>, r: T) -> Complex<T> {
    let mut th = z.arg();
    for _ in 0..4 {
        let p = Complex::from_polar(r, th);
        let dv = (af.f_prime(p) * p).re;
        if dv == T::zero() {
            break;
        }
        let next = th - af.delta(p).im / dv;
        if !((next - th).abs() < T::lit(0.1)) {
            break;
        }
        th = next;
    }
    Complex::from_polar(r, th)
}

/// Traces `Φ` (descent) or `Ψ` (ascent) from `ζ`. The first step of length
/// `step` (default [`ActionFunction::initial_step`]) follows the cubic model
/// `f(ζ) + f‴(ζ)(z - ζ)³/6`; afterwards unit-speed RK4 on
/// `z' = ∓conj(f')/|f'|` with the step halved whenever a step moves `v` by
/// more than `1e-10`.
pub fn trace_phi<T: Real>(
    af: &ActionFunction<T>,
    direction: Direction,
    step: Option<T>,
    stop: StopRule<T>,
) -> Result<TracedContour<T>> {
    let zeta = af.zeta();
    let eps = step.unwrap_or_else(|| af.initial_step());
    if !(eps > T::zero() && eps < af.saddle_gap()) {
        return Err(Error::OutOfRange(format!("initial step {eps}")));
    }
    let (sign, theta) = match direction {
        Direction::Descent => (-T::one(), T::PI() * T::lit(2.0) / T::lit(3.0)),
        Direction::Ascent => (T::one(), T::PI() / T::lit(3.0)),
    };
    let field = |z: Complex<T>| -> Result<Complex<T>> {
        let d = af.f_prime(z);
        let m = d.norm();
        if m < T::lit(STALL) && (z - zeta).norm() > eps / T::lit(2.0) {
            return Err(Error::TraceStalled { re: z.re.to64(), im: z.im.to64() });
        }
        Ok(d.conj() * (sign / m))
    };
    let escaped = |z: Complex<T>| Error::ContourEscaped { re: z.re.to64(), im: z.im.to64() };
    let start = project(af, c(zeta) + Complex::from_polar(eps, theta), eps * T::lit(0.01));
    let mut points = vec![c(zeta), start];
    let mut arclength = vec![T::zero(), eps];
    let h_max = zeta / T::lit(20.0);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut h = eps;
    let mut z = start;
    let mut t = eps;
    let mut status = TraceStatus::StepLimit;
    let mut taken = 0;
    while taken < stop.max_steps {
        h = h.min(h_max).min(af.singular_distance(z) / T::lit(10.0));
        let k1 = field(z)?;
        let k2 = field(z + k1 * (h / two))?;
        let k3 = field(z + k2 * (h / two))?;
        let k4 = field(z + k3 * h)?;
        let next = z + (k1 + k2 * two + k3 * two + k4) * (h / six);
        if (af.delta(next).im - af.delta(z).im).abs() > T::lit(STEP_DV) {
            h = h / two;
            if h < T::epsilon() * zeta {
                return Err(Error::NotConverged(format!("step underflow at {z}")));
            }
            continue;
        }
        taken += 1;
        let next = project(af, next, h * T::lit(0.01));
        let r = next.norm();
        match direction {
            Direction::Descent => {
                if r >= zeta || next.im <= T::zero() {
                    return Err(escaped(next));
                }
                if stop.radius > T::zero() && r <= stop.radius {
                    let s = bisect(|s| stop.radius - (z + (next - z) * s).norm(), T::zero(), T::one(), true)?;
                    let p = snap_to_circle(af, z + (next - z) * s, stop.radius);
                    points.push(p);
                    arclength.push(t + (p - z).norm());
                    status = TraceStatus::ExitedDiskRadius(stop.radius);
                    break;
                }
                if stop.radius == T::zero() && r < T::lit(ORIGIN) * zeta {
                    points.push(next);
                    arclength.push(t + h);
                    points.push(c(T::zero()));
                    arclength.push(t + h + r);
                    status = TraceStatus::ReachedOrigin;
                    break;
                }
            }
            Direction::Ascent => {
                if next.im <= T::zero() {
                    return Err(escaped(next));
                }
                if r >= stop.radius {
                    let s = bisect(|s| (z + (next - z) * s).norm() - stop.radius, T::zero(), T::one(), true)?;
                    let p = snap_to_circle(af, z + (next - z) * s, stop.radius);
                    points.push(p);
                    arclength.push(t + (p - z).norm());
                    status = TraceStatus::ExitedDiskRadius(stop.radius);
                    break;
                }
            }
        }
        t = t + h;
        z = next;
        points.push(z);
        arclength.push(t);
        h = h * T::lit(1.5);
    }
    Ok(TracedContour { direction, points, arclength, status, zeta, initial_step: eps })
}

/// A closed polygonal contour; the last point repeats the first.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedContour<T> {
    pub points: Vec<Complex<T>>,
}

impl<T: Real> ClosedContour<T> {
    /// `(1/2π) Σ arg((z_{k+1} - p)/(z_k - p))`, exact for the polygon.
    pub fn winding_number(&self, p: Complex<T>) -> T {
        let total: T = self.points.windows(2).map(|w| ((w[1] - p) / (w[0] - p)).arg()).sum();
        total / (T::PI() * T::lit(2.0))
    }

    pub fn closure_gap(&self) -> T {
        match (self.points.first(), self.points.last()) {
            (Some(&f), Some(&l)) => (f - l).norm(),
            _ => T::zero(),
        }
    }

    pub fn length(&self) -> T {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// `max_k |z_k - conj(z_{N-k})|`.
    pub fn conjugation_defect(&self) -> T {
        let n = self.points.len();
        (0..n)
            .map(|k| (self.points[k] - self.points[n - 1 - k].conj()).norm())
            .fold(T::zero(), T::max)
    }
}

fn check_confined<T: Real>(phi: &TracedContour<T>) -> Result<()> {
    let bound = phi.zeta * (T::one() + T::lit(1e-9));
    match phi.points.iter().skip(1).find(|z| z.norm() >= bound) {
        Some(z) => Err(Error::ContourEscaped { re: z.re.to64(), im: z.im.to64() }),
        None => Ok(()),
    }
}

fn close_with_conjugate<T: Real>(mut upper: Vec<Complex<T>>) -> ClosedContour<T> {
    let lower: Vec<Complex<T>> = upper.iter().rev().map(|z| z.conj()).collect();
    let skip = usize::from(upper.last().is_some_and(|z| z.im == T::zero()));
    upper.extend(lower.into_iter().skip(skip));
    ClosedContour { points: upper }
}

/// `Γ`: `Φ` from `ζ` into the origin, then its conjugate back to `ζ`
/// (counter-clockwise). A trace stopped on a disc is joined to the origin by
/// a segment.
pub fn build_gamma<T: Real>(phi: &TracedContour<T>) -> Result<ClosedContour<T>> {
    if phi.direction != Direction::Descent || phi.status == TraceStatus::StepLimit {
        return Err(Error::OutOfRange("Γ needs a descent trace that reached the origin or a disc".into()));
    }
    check_confined(phi)?;
    let mut upper = phi.points.clone();
    if phi.status != TraceStatus::ReachedOrigin {
        upper.push(c(T::zero()));
    }
    Ok(close_with_conjugate(upper))
}

/// `Γ′ + Γ″`: `Φ` up to `τ′(δ)`, the arc of `|z| = δ` through `-δ`, and the
/// conjugate of `Φ` back to `ζ`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaPrime<T> {
    pub delta: T,
    pub upper: Vec<Complex<T>>,
    /// From `Φ(τ′)` to its conjugate, counter-clockwise.
    pub arc: Vec<Complex<T>>,
}

impl<T: Real> GammaPrime<T> {
    pub fn closed(&self) -> ClosedContour<T> {
        let mut pts = self.upper.clone();
        pts.extend(self.arc.iter().skip(1).take(self.arc.len().saturating_sub(2)));
        pts.extend(self.upper.iter().rev().map(|z| z.conj()));
        ClosedContour { points: pts }
    }
}

pub fn build_gamma_prime<T: Real>(af: &ActionFunction<T>, phi: &TracedContour<T>, delta: T) -> Result<GammaPrime<T>> {
    if phi.direction != Direction::Descent || !(delta > T::zero() && delta < phi.zeta) {
        return Err(Error::OutOfRange(format!("δ = {delta} with a {:?} trace", phi.direction)));
    }
    check_confined(phi)?;
    let idx = phi
        .points
        .iter()
        .position(|z| z.norm() <= delta)
        .ok_or_else(|| Error::OutOfRange(format!("trace never reaches |z| = {delta}")))?;
    let mut upper = phi.points[..idx].to_vec();
    let (z0, z1) = (phi.points[idx - 1], phi.points[idx]);
    let s = bisect(|s| delta - (z0 + (z1 - z0) * s).norm(), T::zero(), T::one(), true)?;
    let end = snap_to_circle(af, z0 + (z1 - z0) * s, delta);
    upper.push(end);
    let th0 = end.arg();
    let span = T::PI() * T::lit(2.0) - th0 * T::lit(2.0);
    let pieces = (span / T::lit(0.5f64.to_radians())).ceil().to_usize().unwrap_or(1).max(2);
    let arc = (0..=pieces)
        .map(|k| {
            if k == pieces {
                end.conj()
            } else {
                Complex::from_polar(delta, th0 + span * T::from_usize_lossy(k) / T::from_usize_lossy(pieces))
            }
        })
        .collect();
    Ok(GammaPrime { delta, upper, arc })
}

/// Romberg on one segment of `g` with the running Richardson table.
fn romberg<T: Real, G: Fn(Complex<T>) -> Result<Complex<T>>>(
    g: &G,
    z0: Complex<T>,
    z1: Complex<T>,
    tol: T,
) -> Result<Complex<T>> {
    let d = z1 - z0;
    let two = T::lit(2.0);
    let mut trap = (g(z0)? + g(z1)?) * d / two;
    let mut row = vec![trap];
    for level in 1..=ROMBERG_LEVELS {
        let pieces = 1usize << level;
        let h = T::one() / T::from_usize_lossy(pieces);
        let mut mid = c(T::zero());
        for k in (1..pieces).step_by(2) {
            mid = mid + g(z0 + d * (h * T::from_usize_lossy(k)))?;
        }
        trap = trap / two + mid * d * h;
        let mut next = vec![trap];
        let mut f4 = T::one();
        for j in 0..row.len() {
            f4 = f4 * T::lit(4.0);
            let r = next[j] + (next[j] - row[j]) / (f4 - T::one());
            next.push(r);
        }
        let err = (next[level] - row[level - 1]).norm();
        row = next;
        if level >= 3 && err <= tol {
            return Ok(row[level]);
        }
    }
    Err(Error::QuadratureNotConverged(format!("segment {z0} -> {z1}")))
}

/// `I_x = (1/2πi) ∮_Γ F_x(z) dz` over the polygon `gamma`, segment by
/// segment with Romberg refinement.
pub fn contour_i_descent<T: Real>(ctx: &KernelContext<T>, x: u64, gamma: &ClosedContour<T>) -> Result<T> {
    let log_f = |z: Complex<T>| -> Result<Complex<T>> {
        if z.norm() == T::zero() {
            return Ok(c(T::neg_infinity()));
        }
        log_integrand(ctx.a(), ctx.b(), x, z)
    };
    let mut scale = T::neg_infinity();
    for &z in &gamma.points {
        scale = scale.max(log_f(z)?.re);
    }
    if !scale.is_finite() {
        return Err(Error::OutOfRange("integrand vanishes on the contour".into()));
    }
    let g = |z: Complex<T>| log_f(z).map(|l| (l - scale).exp());
    let parts: Vec<Complex<T>> = gamma
        .points
        .par_windows(2)
        .map(|w| romberg(&g, w[0], w[1], T::tol(1e-15) * (w[1] - w[0]).norm()))
        .collect::<Result<_>>()?;
    let total: Complex<T> = parts.into_iter().sum();
    let two_pi = T::PI() * T::lit(2.0);
    let (re, im) = (total.im / two_pi, -total.re / two_pi);
    if im.abs() > T::tol(1e-9) * gamma.length() {
        return Err(Error::QuadratureNotConverged(format!("imaginary part {im}")));
    }
    Ok(re * scale.exp())
}

/// `max |F_x| / |F_x(ζ)|` over the contour points outside `Disc(ζ, eps)`.
pub fn dominance_ratio<T: Real>(af: &ActionFunction<T>, x: u64, gamma: &ClosedContour<T>, eps: T) -> Result<T> {
    let zeta = c(af.zeta());
    let peak = af.log_integrand(x, zeta)?.re;
    let mut best = T::neg_infinity();
    for &z in &gamma.points {
        if (z - zeta).norm() >= eps && z.norm() > T::zero() {
            best = best.max(af.log_integrand(x, z)?.re);
        }
    }
    Ok((best - peak).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdist::contour_i;

    fn sample() -> (Vec<f64>, Vec<f64>) {
        let a = (0..8).map(|i| 0.3 + 0.04 * i as f64).collect();
        let b = (0..8).map(|j| 0.35 + 0.03 * j as f64).collect();
        (a, b)
    }

    #[test]
    fn derivative_identity() {
        let (a, b) = sample();
        let af = ActionFunction::new(a.clone(), b.clone()).unwrap();
        for z in [Complex::new(0.2, 0.7), Complex::new(-1.3, 0.1), Complex::new(2.5, -0.4)] {
            // z f'(z) = γ - g(z), with g extended to complex z
            let n = b.len() as f64;
            let g: Complex<f64> = a.iter().map(|&ai| ai / (z - ai)).sum::<Complex<f64>>() / n
                + b.iter().map(|&bj| z * bj / (1.0 - z * bj)).sum::<Complex<f64>>() / n;
            let lhs = z * af.f_prime(z) + g - af.gamma();
            assert!(lhs.norm() < 1e-12, "{lhs}");
        }
    }

    #[test]
    fn saddle_is_double_zero() {
        let (a, b) = sample();
        let af = ActionFunction::new(a, b).unwrap();
        let z = c(af.zeta());
        assert!(af.f_prime(z).norm() < 1e-10);
        assert!(af.f_second(z).norm() < 1e-8);
        // third derivative by central differences of f''
        let h = 1e-5;
        let fd = (af.f_second(z + h) - af.f_second(z - h)) / (2.0 * h);
        assert!((fd.re - af.f_third_at_zeta()).abs() < 1e-5 * af.f_third_at_zeta().abs());
        assert!(af.f(z).im.abs() < 1e-15);
        assert!(af.delta(z).norm() == 0.0);
    }

    #[test]
    fn delta_matches_plain_difference() {
        let (a, b) = sample();
        let af = ActionFunction::new(a, b).unwrap();
        let z0 = c(af.zeta());
        for z in [Complex::new(0.4, 0.3), Complex::new(0.05, 0.01), Complex::new(1.5, 0.5)] {
            assert!((af.delta(z) - (af.f(z) - af.f(z0))).norm() < 1e-12);
        }
    }

    #[test]
    fn polynomial_degree_and_roots() {
        let af = ActionFunction::new(vec![0.2f64, 0.2, 0.5, 0.6], vec![0.3, 0.4, 0.4]).unwrap();
        let p = af.numerator_polynomial();
        assert_eq!(p.len() - 1, 3 + 2);
        assert!(p.last().unwrap().abs() > 1e-3);
        let zs = locate_zeros(&af).unwrap();
        assert_eq!(zs.count(), 5);
        let scale: f64 = p.iter().map(|x| x.abs()).sum();
        for &z in zs.simple.iter().chain([zs.double].iter()) {
            assert!(poly_eval(&p, z).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn single_values_have_no_gaps() {
        let af = ActionFunction::new(vec![0.5f64; 3], vec![0.5; 3]).unwrap();
        let zs = locate_zeros(&af).unwrap();
        assert!(zs.simple.is_empty());
        assert!((zs.double - 1.0).abs() < 1e-10);
    }

    #[test]
    fn descent_trace_properties() {
        let (a, b) = sample();
        let af = ActionFunction::new(a, b).unwrap();
        let phi = trace_phi(&af, Direction::Descent, None, StopRule::to_origin()).unwrap();
        assert_eq!(phi.status, TraceStatus::ReachedOrigin);
        assert!(phi.v_drift(&af) < 1e-8);
        let us: Vec<f64> = phi.regular_points().map(|&z| af.delta(z).re).collect();
        assert!(us.windows(2).all(|w| w[1] < w[0]));
        assert!(phi.regular_points().skip(1).all(|z| z.im > 0.0 && z.norm() < af.zeta()));
    }

    #[test]
    fn ascent_leaves_disc() {
        let (a, b) = sample();
        let af = ActionFunction::new(a, b).unwrap();
        let stop = StopRule::ascent(&af);
        let psi = trace_phi(&af, Direction::Ascent, None, stop).unwrap();
        assert_eq!(psi.status, TraceStatus::ExitedDiskRadius(stop.radius));
        assert!(psi.v_drift(&af) < 1e-8);
        let us: Vec<f64> = psi.regular_points().map(|&z| af.delta(z).re).collect();
        assert!(us.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gamma_encloses_poles_only() {
        let (a, b) = sample();
        let af = ActionFunction::new(a.clone(), b.clone()).unwrap();
        let phi = trace_phi(&af, Direction::Descent, None, StopRule::to_origin()).unwrap();
        let g = build_gamma(&phi).unwrap();
        assert!(g.closure_gap() < 1e-10);
        assert!(g.conjugation_defect() < 1e-15);
        for &ai in &a {
            assert!((g.winding_number(c(ai)) - 1.0).abs() < 1e-9);
        }
        for &bj in &b {
            assert!(g.winding_number(c(1.0 / bj)).abs() < 1e-9);
        }
    }

    #[test]
    fn descent_integral_matches_circle() {
        let (a, b) = sample();
        let ctx = KernelContext::new(a.clone(), b.clone()).unwrap();
        let af = ActionFunction::from_context(&ctx).unwrap();
        let phi = trace_phi(&af, Direction::Descent, None, StopRule::to_origin()).unwrap();
        let g = build_gamma(&phi).unwrap();
        let x = (8.0 * af.gamma()).floor() as u64;
        let want = contour_i(&ctx, x).unwrap();
        let got = contour_i_descent(&ctx, x, &g).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        let phi = trace_phi(&af, Direction::Descent, None, StopRule::descent(&af)).unwrap();
        let gp = build_gamma_prime(&af, &phi, af.zeta() / 10.0).unwrap();
        let got = contour_i_descent(&ctx, x, &gp.closed()).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
    }
}
