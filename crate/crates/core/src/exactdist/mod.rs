//! Exact one-point law of the geometric last-passage time `G(m, n)`.
//!
//! The kernel is built from the contour integrals
//! `I_x = (1/2πi) ∮ F_x(z) dz` with
//! `F_x(z) = Π_j (1 - z b_j) / Π_i (z - a_i) · z^{m+x}` and
//! `𝕂(x, y) = Σ_{l≥0} I^{ab}_{x+l} I^{ba}_{y+l}`. The distribution function is
//! the Fredholm determinant `P(G ≤ k) = det(I - 𝕂)` on `ℓ²{k, k+1, ...}`.
//!
//! With saddle contours the `a`-side integrals are divided by `ζ^x` and the
//! `b`-side ones multiplied by `ζ^y` (and both by the value of `F_0` at the
//! saddle). This is a diagonal similarity of the kernel, so determinants are
//! unchanged while the entries near `k ≈ nγ` stay of order one.

mod detform;
mod schur;

pub use detform::{c_inverse, cauchy_matrix, cdf_det_form, cdf_det_form_range};
pub use schur::{
    cauchy_binet_check, cauchy_binet_sides, partition_function, partitions_bounded, schur_by_enumeration,
    schur_measure, schur_polynomial, ssyt_enumerate,
};

use crate::numeric::linalg::{Lu, Matrix};
use crate::shape::{empirical_shape, EmpiricalShape};
use crate::{Error, Real, Result};
use num_complex::Complex;
use serde::Serialize;

const POLE_GAP: f64 = 1e-14;
const MAX_NODES: usize = 1 << 20;
const MAX_INDEX: usize = 100_000;
const BOUND_SAMPLES: usize = 720;
const PROB_SLACK: f64 = 1e-8;

/// `log F_x(z)` for poles `p` and zeros `1/c`:
/// `Σ log(1 - z c_j) - Σ log(z - p_i) + (len(p) + x) log z`.
pub(crate) fn log_integrand<T: Real>(poles: &[T], zeros: &[T], x: u64, z: Complex<T>) -> Result<Complex<T>> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &p in poles {
        let d = z - p;
        if d.norm() < T::lit(POLE_GAP) {
            return Err(Error::NearPole { re: z.re.to64(), im: z.im.to64() });
        }
        acc = acc - d.ln();
    }
    for &c in zeros {
        acc = acc + (Complex::new(T::one(), T::zero()) - z * c).ln();
    }
    let e = poles.len() as u64 + x;
    if e > 0 {
        acc = acc + z.ln() * T::from_u64(e).unwrap();
    }
    Ok(acc)
}

/// `F^{ab}_{m,n,x}(z)` evaluated through complex logarithms.
pub fn integrand_f<T: Real>(a: &[T], b: &[T], x: u64, z: Complex<T>) -> Result<Complex<T>> {
    log_integrand(a, b, x, z).map(Complex::exp)
}

fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::zero(), T::max)
}

fn validate_params<T: Real>(a: &[T], b: &[T]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidSpec("parameter lists must be nonempty".into()));
    }
    for (name, v) in [("a", a), ("b", b)] {
        if let Some((i, x)) = v.iter().enumerate().find(|(_, &x)| !(x >= T::zero() && x < T::one())) {
            return Err(Error::OutOfRange(format!("{name}_{} = {x} outside [0, 1)", i + 1)));
        }
    }
    Ok(())
}

fn angle<T: Real>(k: usize, nodes: usize) -> T {
    T::PI() * T::lit(2.0) * T::from_usize_lossy(k) / T::from_usize_lossy(nodes)
}

/// How the two contours are placed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ContourRadius<T> {
    /// Midpoint of `(max a ∨ max b, 1)`, capped so that `ρ² ≤ 0.97`.
    Default,
    Fixed(T),
    /// `|z| = ζ_{m,n}` on the `a`-side and `|w| = 1/ζ_{m,n}` on the `b`-side.
    Saddle,
}

/// One side of the kernel: the integrals `I[x] / (N · scale^x)`.
#[derive(Clone, Copy, Debug)]
struct Side<'a, T> {
    poles: &'a [T],
    zeros: &'a [T],
    radius: T,
    scale: T,
    log_norm: T,
}

struct Trapezoid<T> {
    values: Vec<T>,
    scale: T,
}

impl<T: Real> Side<'_, T> {
    /// Trapezoid sums for `x = 0..=top` on `nodes` points. Powers of
    /// `z/scale` are carried forward and re-anchored every 64 steps.
    fn trapezoid(&self, top: usize, nodes: usize) -> Result<Trapezoid<T>> {
        let mut acc = vec![Complex::new(T::zero(), T::zero()); top + 1];
        let mut mag = T::zero();
        let rr = self.radius / self.scale;
        for k in 0..nodes {
            let z = Complex::from_polar(self.radius, angle(k, nodes));
            let g = (log_integrand(self.poles, self.zeros, 0, z)? + z.ln() - self.log_norm).exp();
            mag = mag.max(g.norm());
            let step = Complex::from_polar(rr, angle(k, nodes));
            let mut p = g;
            for (x, slot) in acc.iter_mut().enumerate() {
                if x > 0 {
                    p = if x % 64 == 0 {
                        let turn = (x as u128 * k as u128 % nodes as u128) as usize;
                        g * Complex::from_polar(rr.powi(x as i32), angle(turn, nodes))
                    } else {
                        p * step
                    };
                }
                *slot = *slot + p;
            }
        }
        let inv = T::one() / T::from_usize_lossy(nodes);
        let imag = acc.iter().map(|c| c.im.abs()).fold(T::zero(), T::max) * inv;
        if imag > T::tol(1e-12) * mag.max(T::min_positive_value()) * T::lit(16.0) {
            return Err(Error::QuadratureNotConverged(format!(
                "imaginary residue {imag} against scale {mag}"
            )));
        }
        Ok(Trapezoid {
            values: acc.into_iter().map(|c| c.re * inv).collect(),
            scale: mag,
        })
    }

    /// Doubles the node count until two successive tables agree.
    fn integrals(&self, top: usize, min_nodes: usize) -> Result<Vec<T>> {
        let need = 2 * (top + self.poles.len() + self.zeros.len()) + 64;
        let mut nodes = min_nodes.max(need.next_power_of_two());
        let mut prev = self.trapezoid(top, nodes)?;
        loop {
            nodes *= 2;
            if nodes > MAX_NODES {
                return Err(Error::QuadratureNotConverged(format!("more than {MAX_NODES} nodes")));
            }
            let next = self.trapezoid(top, nodes)?;
            let ok = next
                .values
                .iter()
                .zip(&prev.values)
                .all(|(&u, &v)| agree(u, v, next.scale));
            if ok {
                return Ok(next.values);
            }
            prev = next;
        }
    }

    /// `log C` and `θ` with `|I[x] / (N scale^x)| ≤ C θ^x`, from the maximum
    /// of `|F_0|` on a circle between the poles and the contour. Several
    /// circles are tried and the one giving the shortest cut-off is kept.
    fn bound(&self, eps: T) -> Result<SideBound<T>> {
        let inner = max_of(self.poles);
        let mut best: Option<SideBound<T>> = None;
        for frac in [0.5, 0.7, 0.85, 0.95] {
            let r = inner + T::lit(frac) * (self.radius - inner);
            let mut lmax = T::neg_infinity();
            for k in 0..BOUND_SAMPLES {
                let z = Complex::from_polar(r, angle(k, BOUND_SAMPLES));
                lmax = lmax.max(log_integrand(self.poles, self.zeros, 0, z)?.re);
            }
            let cand = SideBound {
                log_c: r.ln() + lmax - self.log_norm,
                theta: r / self.scale,
            };
            let better = match &best {
                None => true,
                Some(b) => cand.steps(eps) < b.steps(eps),
            };
            if better {
                best = Some(cand);
            }
        }
        Ok(best.expect("at least one candidate"))
    }
}

#[derive(Clone, Copy, Debug)]
struct SideBound<T> {
    log_c: T,
    theta: T,
}

impl<T: Real> SideBound<T> {
    /// Steps until this side alone falls below `eps`.
    fn steps(&self, eps: T) -> T {
        ((eps.ln() - self.log_c) / self.theta.ln()).max(T::zero())
    }
}

/// Smallest `j ≥ 0` with `log_c + j·log_theta ≤ log_eps`.
fn cutoff<T: Real>(log_c: T, log_theta: T, log_eps: T) -> Result<usize> {
    let j = ((log_eps - log_c) / log_theta).max(T::zero()).ceil();
    let j = j.to_usize().unwrap_or(usize::MAX);
    if j > MAX_INDEX {
        Err(Error::NonDecaying(MAX_INDEX))
    } else {
        Ok(j)
    }
}

/// Everything needed to evaluate `I`, `𝕂` and the Fredholm CDF for fixed
/// parameter prefixes. Immutable after construction.
#[derive(Clone, Debug)]
pub struct KernelContext<T> {
    a: Vec<T>,
    b: Vec<T>,
    radius: ContourRadius<T>,
    rho_a: T,
    rho_b: T,
    scale: T,
    log_norm_a: T,
    log_norm_b: T,
    quad_nodes: usize,
    tail_eps: T,
    derived: Option<EmpiricalShape<T>>,
}

impl<T: Real> KernelContext<T> {
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        Self::with_radius(a, b, ContourRadius::Default)
    }

    pub fn with_radius(a: Vec<T>, b: Vec<T>, radius: ContourRadius<T>) -> Result<Self> {
        validate_params(&a, &b)?;
        let derived = empirical_shape(&a, &b).ok();
        let inner = max_of(&a).max(max_of(&b));
        let fixed = |rho: T| -> Result<(T, T, T, T, T)> {
            if !(rho > inner && rho < T::one()) {
                return Err(Error::OutOfRange(format!("radius {rho} outside ({inner}, 1)")));
            }
            Ok((rho, rho, T::one(), T::zero(), T::zero()))
        };
        let (rho_a, rho_b, scale, log_norm_a, log_norm_b) = match radius {
            ContourRadius::Default => {
                let cap = T::lit(0.97).sqrt();
                let mid = (inner + T::one()) / T::lit(2.0);
                fixed(if inner < cap { mid.min(cap) } else { mid })?
            }
            ContourRadius::Fixed(rho) => fixed(rho)?,
            ContourRadius::Saddle => {
                let zeta = derived
                    .as_ref()
                    .map(|d| d.zeta_mn)
                    .ok_or_else(|| Error::EmptyBracket("no saddle point for these parameters".into()))?;
                let z = Complex::new(zeta, T::zero());
                let w = Complex::new(T::one() / zeta, T::zero());
                let na = log_integrand(&a, &b, 0, z)?.re;
                let nb = log_integrand(&b, &a, 0, w)?.re;
                (zeta, T::one() / zeta, zeta, na, nb)
            }
        };
        Ok(Self {
            a,
            b,
            radius,
            rho_a,
            rho_b,
            scale,
            log_norm_a,
            log_norm_b,
            quad_nodes: 512,
            tail_eps: T::tol(1e-15),
            derived,
        })
    }

    pub fn with_quad_nodes(mut self, nodes: usize) -> Self {
        self.quad_nodes = nodes.max(8);
        self
    }

    pub fn with_tail_eps(mut self, eps: T) -> Self {
        self.tail_eps = eps;
        self
    }

    /// The context for `(b, a)`: the roles of the two sides swap.
    pub fn swapped(&self) -> Result<Self> {
        Ok(Self::with_radius(self.b.clone(), self.a.clone(), self.radius)?
            .with_quad_nodes(self.quad_nodes)
            .with_tail_eps(self.tail_eps))
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Radii of the `a`-side and `b`-side circles.
    pub fn rho(&self) -> (T, T) {
        (self.rho_a, self.rho_b)
    }

    pub fn quad_nodes(&self) -> usize {
        self.quad_nodes
    }

    pub fn tail_eps(&self) -> T {
        self.tail_eps
    }

    pub fn derived(&self) -> Option<&EmpiricalShape<T>> {
        self.derived.as_ref()
    }

    pub fn integrand(&self, x: u64, z: Complex<T>) -> Result<Complex<T>> {
        integrand_f(&self.a, &self.b, x, z)
    }

    fn side_a(&self) -> Side<'_, T> {
        Side {
            poles: &self.a,
            zeros: &self.b,
            radius: self.rho_a,
            scale: self.scale,
            log_norm: self.log_norm_a,
        }
    }

    fn side_b(&self) -> Side<'_, T> {
        Side {
            poles: &self.b,
            zeros: &self.a,
            radius: self.rho_b,
            scale: T::one() / self.scale,
            log_norm: self.log_norm_b,
        }
    }

    fn bounds(&self) -> Result<(SideBound<T>, SideBound<T>)> {
        let eps = self.tail_eps;
        Ok((self.side_a().bound(eps)?, self.side_b().bound(eps)?))
    }

    /// Scaled integrals for indices `0..=top` on both sides.
    pub fn table(&self, top: usize) -> Result<KernelTable<T>> {
        if top > MAX_INDEX {
            return Err(Error::NonDecaying(MAX_INDEX));
        }
        Ok(KernelTable {
            ia: self.side_a().integrals(top, self.quad_nodes)?,
            ib: self.side_b().integrals(top, self.quad_nodes)?,
            scale: self.scale,
            log_norm: self.log_norm_a + self.log_norm_b,
        })
    }

    /// Number of extra terms `L` so that `Σ_{l ≥ L}` of the scaled series for
    /// `𝕂(x, y)` is below `tail_eps`, for every `x, y ≥ from`.
    fn series_terms(&self, ba: SideBound<T>, bb: SideBound<T>, from: usize) -> Result<usize> {
        let lt = ba.theta.ln() + bb.theta.ln();
        let log_c = ba.log_c + bb.log_c - (T::one() - ba.theta * bb.theta).ln()
            + T::from_usize_lossy(from) * lt;
        cutoff(log_c, lt, self.tail_eps.ln())
    }

    /// Index `X` beyond which all entries of the scaled kernel in rows or
    /// columns `> X` sum to less than `tail_eps`.
    fn fredholm_cutoff(&self, ba: SideBound<T>, bb: SideBound<T>) -> Result<usize> {
        let tmax = ba.theta.max(bb.theta);
        let one = T::one();
        let log_c = ba.log_c + bb.log_c
            - (one - ba.theta * bb.theta).ln()
            - (one - ba.theta).ln()
            - (one - bb.theta).ln()
            - (one - tmax).ln();
        cutoff(log_c, tmax.ln(), self.tail_eps.ln())
    }
}

/// Scaled integrals `Ĩa[x] = I^{ab}_x / (N_a s^x)` and `Ĩb[y] = I^{ba}_y s^y / N_b`.
#[derive(Clone, Debug)]
pub struct KernelTable<T> {
    ia: Vec<T>,
    ib: Vec<T>,
    scale: T,
    log_norm: T,
}

impl<T: Real> KernelTable<T> {
    pub fn top(&self) -> usize {
        self.ia.len() - 1
    }

    /// `𝕂(x, y) = s^{x-y} N_a N_b 𝕂̃(x, y)`.
    fn unscale(&self, x: usize, y: usize, v: T) -> T {
        let d = x as i32 - y as i32;
        v * self.scale.powi(d) * self.log_norm.exp()
    }

    /// Scaled kernel summed up to the end of the table.
    pub fn scaled(&self, x: usize, y: usize) -> T {
        self.ia[x..].iter().zip(&self.ib[y.min(self.ib.len())..]).map(|(&u, &v)| u * v).sum()
    }

    pub fn kernel(&self, x: usize, y: usize) -> T {
        self.unscale(x, y, self.scaled(x, y))
    }

    /// Scaled kernel on `[lo, hi]²`, each diagonal summed backwards from the
    /// end of the table.
    pub fn block(&self, lo: usize, hi: usize) -> Matrix<T> {
        let s = hi - lo + 1;
        let top = self.top() as isize;
        let mut out = Matrix::from_fn(s, s, |_, _| T::zero());
        for d in -(s as isize - 1)..=(s as isize - 1) {
            let x0 = lo as isize + (-d).max(0);
            let x1 = hi as isize - d.max(0);
            let mut acc = T::zero();
            let mut x = top.min(top - d);
            while x > x1 {
                acc = acc + self.ia[x as usize] * self.ib[(x + d) as usize];
                x -= 1;
            }
            for x in (x0..=x1).rev() {
                acc = acc + self.ia[x as usize] * self.ib[(x + d) as usize];
                out[((x as usize) - lo, (x + d) as usize - lo)] = acc;
            }
        }
        out
    }
}

/// `I^{ab}_{m,n,x}` by the trapezoid rule on the `a`-side circle.
pub fn contour_i<T: Real>(ctx: &KernelContext<T>, x: u64) -> Result<T> {
    let side = ctx.side_a();
    let single = |nodes: usize| -> Result<(T, T)> {
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut mag = T::zero();
        for k in 0..nodes {
            let z = Complex::from_polar(side.radius, angle(k, nodes));
            let g = (log_integrand(&ctx.a, &ctx.b, x, z)? + z.ln()).exp();
            mag = mag.max(g.norm());
            acc = acc + g;
        }
        let v = acc / T::from_usize_lossy(nodes);
        if v.im.abs() > T::tol(1e-12) * mag * T::lit(16.0) {
            return Err(Error::QuadratureNotConverged(format!("imaginary residue {}", v.im)));
        }
        Ok((v.re, mag))
    };
    let need = 2 * (x as usize + ctx.m() + ctx.n()) + 64;
    let mut nodes = ctx.quad_nodes.max(need.next_power_of_two().min(MAX_NODES));
    let (mut prev, _) = single(nodes)?;
    loop {
        nodes *= 2;
        if nodes > MAX_NODES {
            return Err(Error::QuadratureNotConverged(format!("more than {MAX_NODES} nodes")));
        }
        let (next, mag) = single(nodes)?;
        if agree(next, prev, mag) {
            return Ok(next);
        }
        prev = next;
    }
}

/// Successive quadrature values agree to `1e-12` relative, or to a few
/// ulps of the integrand scale when cancellation makes the value tiny.
fn agree<T: Real>(u: T, v: T, scale: T) -> bool {
    (u - v).abs() <= (T::tol(1e-12) * u.abs()).max(T::epsilon() * T::lit(64.0) * scale)
}

/// `𝕂_{m,n}(x, y)` as the series of products of contour integrals,
/// truncated by the certified tail bound.
pub fn kernel_series<T: Real>(ctx: &KernelContext<T>, x: u64, y: u64) -> Result<T> {
    let (ba, bb) = ctx.bounds()?;
    let (x, y) = (x as usize, y as usize);
    let terms = ctx.series_terms(ba, bb, x.min(y))?;
    let table = ctx.table(x.max(y) + terms)?;
    Ok(table.kernel(x, y))
}

/// `𝕂_{m,n}(x, y)` as a double contour integral with the factor `1/(1 - zw)`.
pub fn kernel_double_contour<T: Real>(ctx: &KernelContext<T>, x: u64, y: u64) -> Result<T> {
    let (ra, rb) = ctx.rho();
    if ra * rb >= T::one() {
        return Err(Error::OutOfRange(format!("double contour needs ρ_a ρ_b < 1, got {}", ra * rb)));
    }
    let eval = |nodes: usize| -> Result<(T, T)> {
        let side = |poles: &[T], zeros: &[T], r: T, x: u64| -> Result<Vec<(Complex<T>, Complex<T>)>> {
            (0..nodes)
                .map(|k| {
                    let z = Complex::from_polar(r, angle(k, nodes));
                    Ok((z, integrand_f(poles, zeros, x, z)? * z))
                })
                .collect()
        };
        let fa = side(&ctx.a, &ctx.b, ra, x)?;
        let fb = side(&ctx.b, &ctx.a, rb, y)?;
        let one = Complex::new(T::one(), T::zero());
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut mag = T::zero();
        for &(z, gz) in &fa {
            for &(w, gw) in &fb {
                let t = gz * gw / (one - z * w);
                mag = mag.max(t.norm());
                acc = acc + t;
            }
        }
        Ok((acc.re / T::from_usize_lossy(nodes * nodes), mag))
    };
    let need = (2 * (x + y) as usize + 2 * (ctx.m() + ctx.n()) + 64).next_power_of_two();
    let mut nodes = need.max(128);
    let (mut prev, _) = eval(nodes)?;
    while nodes < 1 << 13 {
        nodes *= 2;
        let (next, mag) = eval(nodes)?;
        if agree(next, prev, mag) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged("double contour beyond 8192 nodes".into()))
}

/// The explicit kernel `K_n(x, y)` for injective square parameters, with the
/// parameter products precomputed.
#[derive(Clone, Debug)]
pub struct FiniteSumKernel<T> {
    a: Vec<T>,
    b: Vec<T>,
    coef_a: Vec<T>,
    coef_b: Vec<T>,
}

/// Smallest pairwise gap of a list (infinite for one element).
fn min_gap<T: Real>(v: &[T]) -> T {
    let mut s = v.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).expect("finite parameters"));
    s.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min)
}

pub(crate) fn injective<T: Real>(v: &[T]) -> bool {
    min_gap(v) > T::lit(1e-8)
}

impl<T: Real> FiniteSumKernel<T> {
    pub fn new(a: &[T], b: &[T]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::ShapeMismatch(format!("finite sum needs m = n, got {} and {}", a.len(), b.len())));
        }
        validate_params(a, b)?;
        if !injective(a) || !injective(b) {
            return Err(Error::RepeatedParameters);
        }
        let one = T::one();
        let coef_a = (0..a.len())
            .map(|i| {
                let num: T = b.iter().map(|&bk| one - a[i] * bk).product();
                let den: T = (0..a.len()).filter(|&k| k != i).map(|k| a[k] - a[i]).product();
                num / den
            })
            .collect();
        let coef_b = (0..b.len())
            .map(|j| {
                let num: T = a.iter().map(|&ak| one - ak * b[j]).product();
                let den: T = (0..b.len()).filter(|&k| k != j).map(|k| b[k] - b[j]).product();
                num / den
            })
            .collect();
        Ok(Self {
            a: a.to_vec(),
            b: b.to_vec(),
            coef_a,
            coef_b,
        })
    }

    pub fn eval(&self, x: u64, y: u64) -> T {
        let (x, y) = (x as i32, y as i32);
        let mut acc = T::zero();
        for (&ai, &ca) in self.a.iter().zip(&self.coef_a) {
            for (&bj, &cb) in self.b.iter().zip(&self.coef_b) {
                acc = acc + ai.powi(x) * bj.powi(y) / (T::one() - ai * bj) * ca * cb;
            }
        }
        acc
    }
}

/// `K_n(x, y)` from the explicit double sum over the parameters.
pub fn kernel_finite_sum<T: Real>(a: &[T], b: &[T], x: u64, y: u64) -> Result<T> {
    Ok(FiniteSumKernel::new(a, b)?.eval(x, y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRoute {
    Series,
    DoubleContour,
    /// `K_n(x + n, y + n)`, square injective case only.
    FiniteSum,
}

/// `𝕂(x_i, x_j)` over an index list, with the route that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix<T> {
    pub indices: Vec<u64>,
    pub values: Matrix<T>,
    pub route: KernelRoute,
}

impl<T: Real> KernelMatrix<T> {
    pub fn det(&self) -> T {
        Lu::new(&self.values).det()
    }

    /// Principal minor on positions `subset` of the index list.
    pub fn minor(&self, subset: &[usize]) -> T {
        Lu::new(&self.values.select(subset, subset)).det()
    }
}

pub fn kernel_matrix<T: Real>(ctx: &KernelContext<T>, xs: &[u64], route: KernelRoute) -> Result<KernelMatrix<T>> {
    let k = xs.len();
    let values = match route {
        KernelRoute::Series => {
            let (ba, bb) = ctx.bounds()?;
            let lo = xs.iter().copied().min().unwrap_or(0) as usize;
            let hi = xs.iter().copied().max().unwrap_or(0) as usize;
            let table = ctx.table(hi + ctx.series_terms(ba, bb, lo)?)?;
            Matrix::from_fn(k, k, |i, j| table.kernel(xs[i] as usize, xs[j] as usize))
        }
        KernelRoute::DoubleContour => {
            let mut rows = Vec::with_capacity(k);
            for &x in xs {
                rows.push(xs.iter().map(|&y| kernel_double_contour(ctx, x, y)).collect::<Result<Vec<_>>>()?);
            }
            Matrix::from_rows(rows)
        }
        KernelRoute::FiniteSum => {
            let fin = FiniteSumKernel::new(&ctx.a, &ctx.b)?;
            let off = ctx.n() as u64;
            Matrix::from_fn(k, k, |i, j| fin.eval(xs[i] + off, xs[j] + off))
        }
    };
    Ok(KernelMatrix {
        indices: xs.to_vec(),
        values,
        route,
    })
}

/// A value of the distribution function with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CdfEval<T> {
    pub k: u64,
    pub cdf: T,
    pub est_error: T,
}

/// Rejects values far outside `[0, 1]` and clamps the rest.
pub(crate) fn clamp_probability<T: Real>(p: T) -> Result<T> {
    let slack = T::lit(PROB_SLACK);
    if !p.is_finite() || p < -slack || p > T::one() + slack {
        return Err(Error::TruncationInsufficient(p.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// `P(G(m, n) ≤ k)` as the Fredholm determinant of `𝕂` on `{k, k+1, ...}`.
pub fn cdf_fredholm_series<T: Real>(ctx: &KernelContext<T>, k: u64) -> Result<CdfEval<T>> {
    Ok(cdf_fredholm_range(ctx, &[k])?[0])
}

/// Several `k` sharing one table of integrals.
pub fn cdf_fredholm_range<T: Real>(ctx: &KernelContext<T>, ks: &[u64]) -> Result<Vec<CdfEval<T>>> {
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    let (ba, bb) = ctx.bounds()?;
    let cut = ctx.fredholm_cutoff(ba, bb)?;
    let kmax = ks.iter().copied().max().unwrap() as usize;
    let hi_max = cut.max(kmax);
    let extra = ctx.series_terms(ba, bb, 0)?;
    let table = ctx.table(hi_max + extra)?;
    ks.iter()
        .map(|&k| {
            let lo = k as usize;
            let hi = cut.max(lo);
            let block = table.block(lo, hi);
            let s = block.rows();
            let m = Matrix::from_fn(s, s, |i, j| if i == j { T::one() } else { T::zero() } - block[(i, j)]);
            let cdf = clamp_probability(Lu::new(&m).det())?;
            Ok(CdfEval {
                k,
                cdf,
                est_error: ctx.tail_eps * T::lit(4.0) + T::tol(1e-12) * T::from_usize_lossy(s),
            })
        })
        .collect()
}

/// The alternating series `1 + Σ_l (-1)^l/l! Σ det[𝕂(x_i, x_j)]` summed
/// literally over index sets in `[k, x_max]` of size at most `min(m, n)`.
pub fn cdf_fredholm_literal<T: Real>(ctx: &KernelContext<T>, k: u64, x_max: u64) -> Result<T> {
    if x_max < k {
        return Err(Error::OutOfRange(format!("x_max {x_max} < k {k}")));
    }
    let s = (x_max - k + 1) as usize;
    let order = ctx.m().min(ctx.n()).min(s);
    let count: f64 = (1..=order).map(|l| binomial(s, l)).sum();
    if count > 2e6 {
        return Err(Error::OutOfRange(format!("{count} index sets")));
    }
    let (ba, bb) = ctx.bounds()?;
    let table = ctx.table(x_max as usize + ctx.series_terms(ba, bb, k as usize)?)?;
    let kk = Matrix::from_fn(s, s, |i, j| table.kernel(k as usize + i, k as usize + j));
    let mut total = T::one();
    let mut subset = Vec::with_capacity(order);
    fn walk<T: Real>(kk: &Matrix<T>, start: usize, order: usize, subset: &mut Vec<usize>, total: &mut T) {
        if !subset.is_empty() {
            let sign = if subset.len() % 2 == 1 { -T::one() } else { T::one() };
            *total = *total + sign * Lu::new(&kk.select(subset, subset)).det();
        }
        if subset.len() == order {
            return;
        }
        for i in start..kk.rows() {
            subset.push(i);
            walk(kk, i + 1, order, subset, total);
            subset.pop();
        }
    }
    walk(&kk, 0, order, &mut subset, &mut total);
    clamp_probability(total)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
