//! Parameter laws for the row/column sequences, the model specification,
//! seeded sampling of sequences and weights, and the integral transforms
//! `A`, `Ga`, `Gb` of the laws.

use crate::grid::Grid;
use crate::numeric::quad::adaptive;
use crate::{Error, Real, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Exponential,
    Geometric,
}

/// Where a power density is anchored: `(x - lo)^p` or `x^p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    #[default]
    Lo,
    Zero,
}

/// Law of the inhomogeneity parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamLaw<T> {
    Point(T),
    Uniform(T, T),
    Power {
        p: T,
        lo: T,
        hi: T,
        #[serde(default)]
        anchor: Anchor,
    },
    /// Density proportional to `1/x` on `[lo, hi]`.
    Reciprocal(T, T),
    /// Finite list of `(value, weight)`.
    Atoms(Vec<(T, T)>),
}

impl<T: Real> ParamLaw<T> {
    /// Left endpoint of the support.
    pub fn lower(&self) -> T {
        match self {
            ParamLaw::Point(v) => *v,
            ParamLaw::Uniform(lo, _) | ParamLaw::Reciprocal(lo, _) => *lo,
            ParamLaw::Power { lo, .. } => *lo,
            ParamLaw::Atoms(list) => list.iter().map(|a| a.0).fold(T::infinity(), T::min),
        }
    }

    /// Right endpoint of the support.
    pub fn upper(&self) -> T {
        match self {
            ParamLaw::Point(v) => *v,
            ParamLaw::Uniform(_, hi) | ParamLaw::Reciprocal(_, hi) => *hi,
            ParamLaw::Power { hi, .. } => *hi,
            ParamLaw::Atoms(list) => list.iter().map(|a| a.0).fold(T::neg_infinity(), T::max),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ParamLaw::Point(_) | ParamLaw::Atoms(_))
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLaw(msg));
        let cap = match kind {
            ModelKind::Exponential => T::infinity(),
            ModelKind::Geometric => T::one(),
        };
        let interval = |lo: T, hi: T, open_lo: bool| -> Result<()> {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("need finite lo < hi, got [{lo}, {hi}]"));
            }
            if lo < T::zero() || (open_lo && lo == T::zero()) {
                return bad(format!("support must lie in (0, inf), got lower end {lo}"));
            }
            if hi > cap {
                return bad(format!("geometric support must lie in (0, 1), got upper end {hi}"));
            }
            Ok(())
        };
        let atom = |v: T| -> Result<()> {
            if !(v > T::zero() && v.is_finite()) || v >= cap {
                return bad(format!("atom {v} outside the admissible support"));
            }
            Ok(())
        };
        match self {
            ParamLaw::Point(v) => atom(*v),
            ParamLaw::Uniform(lo, hi) => interval(*lo, *hi, false),
            ParamLaw::Reciprocal(lo, hi) => interval(*lo, *hi, true),
            ParamLaw::Power { p, lo, hi, .. } => {
                if !(p.is_finite() && *p > -T::one()) {
                    return bad(format!("power exponent {p} must exceed -1"));
                }
                interval(*lo, *hi, false)
            }
            ParamLaw::Atoms(list) => {
                if list.is_empty() {
                    return bad("atom list is empty".into());
                }
                for &(v, w) in list {
                    atom(v)?;
                    if !(w > T::zero()) {
                        return bad(format!("atom weight {w} must be positive"));
                    }
                }
                let total: T = list.iter().map(|a| a.1).sum();
                if (total - T::one()).abs() > T::tol(1e-12) {
                    return bad(format!("atom weights sum to {total}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Generalised inverse of the distribution function.
    pub fn quantile(&self, u: T) -> T {
        match self {
            ParamLaw::Point(v) => *v,
            ParamLaw::Uniform(lo, hi) => *lo + (*hi - *lo) * u,
            ParamLaw::Reciprocal(lo, hi) => *lo * (*hi / *lo).powf(u),
            ParamLaw::Power { p, lo, hi, anchor } => {
                let e = *p + T::one();
                match anchor {
                    Anchor::Lo => *lo + (*hi - *lo) * u.powf(e.recip()),
                    Anchor::Zero => {
                        let (a, b) = (lo.powf(e), hi.powf(e));
                        (a + u * (b - a)).powf(e.recip())
                    }
                }
            }
            ParamLaw::Atoms(list) => {
                let mut acc = T::zero();
                for &(v, w) in list {
                    acc = acc + w;
                    if u < acc {
                        return v;
                    }
                }
                list.last().map(|a| a.0).unwrap_or_else(T::nan)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(T::lit(rng.gen::<f64>()))
    }

    /// Density exponents at the two endpoints: the density behaves like
    /// `(x - lo)^e_lo` and `(hi - x)^e_hi` there.
    fn endpoint_exponents(&self) -> (T, T) {
        match self {
            ParamLaw::Power { p, lo, anchor, .. } => match anchor {
                Anchor::Lo => (*p, T::zero()),
                Anchor::Zero if *lo == T::zero() => (*p, T::zero()),
                Anchor::Zero => (T::zero(), T::zero()),
            },
            _ => (T::zero(), T::zero()),
        }
    }

    /// `E[f(x)]` by adaptive Gauss-Legendre quadrature (sums for discrete
    /// laws). Failure to converge, or magnitudes beyond 1e14, are reported
    /// as divergence (`+inf`).
    pub fn expect<F: Fn(T) -> T>(&self, f: F) -> T {
        let rtol = T::tol(1e-12);
        let atol = T::min_positive_value();
        let result = match self {
            ParamLaw::Point(v) => return f(*v),
            ParamLaw::Atoms(list) => return list.iter().map(|&(v, w)| w * f(v)).sum(),
            ParamLaw::Uniform(lo, hi) => {
                adaptive(&f, *lo, *hi, rtol, atol).map(|v| v / (*hi - *lo))
            }
            ParamLaw::Reciprocal(..) => adaptive(|u| f(self.quantile(u)), T::zero(), T::one(), rtol, atol),
            ParamLaw::Power { p, lo, hi, anchor } if *p >= T::zero() => {
                let e = *p + T::one();
                match anchor {
                    Anchor::Lo => {
                        let norm = e / (*hi - *lo).powf(e);
                        adaptive(|x| f(x) * (x - *lo).powf(*p), *lo, *hi, rtol, atol).map(|v| v * norm)
                    }
                    Anchor::Zero => {
                        let norm = e / (hi.powf(e) - lo.powf(e));
                        adaptive(|x| f(x) * x.powf(*p), *lo, *hi, rtol, atol).map(|v| v * norm)
                    }
                }
            }
            ParamLaw::Power { .. } => adaptive(|u| f(self.quantile(u)), T::zero(), T::one(), rtol, atol),
        };
        match result {
            Ok(v) if v.abs() <= T::lit(1e14) => v,
            Ok(v) if v < T::zero() => T::neg_infinity(),
            _ => T::infinity(),
        }
    }

    /// `E[x^j (c + d x)^(-k)]`; `+inf` when `c + d x` vanishes or changes
    /// sign on the support and the integral diverges.
    pub fn moment(&self, j: u32, c: T, d: T, k: u32) -> T {
        let term = |x: T| {
            let y = c + d * x;
            if k > 0 && y <= T::zero() {
                T::infinity()
            } else {
                x.powi(j as i32) * y.powi(-(k as i32))
            }
        };
        match self {
            ParamLaw::Point(v) => return term(*v),
            ParamLaw::Atoms(list) => {
                return list.iter().map(|&(v, w)| w * term(v)).sum();
            }
            _ => {}
        }
        let (lo, hi) = (self.lower(), self.upper());
        let (ylo, yhi) = (c + d * lo, c + d * hi);
        if k > 0 {
            if ylo < T::zero() || yhi < T::zero() {
                return T::infinity();
            }
            if ylo == T::zero() || yhi == T::zero() {
                let (elo, ehi) = self.endpoint_exponents();
                let kf = T::from_u32(k).unwrap();
                let jf = T::from_u32(j).unwrap();
                for (y, x, e) in [(ylo, lo, elo), (yhi, hi, ehi)] {
                    if y == T::zero() {
                        let extra = if x == T::zero() { jf } else { T::zero() };
                        if e + extra - kf <= -T::one() {
                            return T::infinity();
                        }
                    }
                }
                return self.moment_by_quadrature(j, c, d, k);
            }
        }
        if d == T::zero() {
            if k > 0 && c <= T::zero() {
                return T::infinity();
            }
            return c.powi(-(k as i32)) * self.raw_moment(j);
        }
        // Closed forms lose accuracy when the linear factor is nearly flat.
        if (d * (hi - lo)).abs() < T::tol(1e-6) * c.abs() {
            return self.moment_by_quadrature(j, c, d, k);
        }
        match self {
            ParamLaw::Uniform(lo, hi) => definite(j, k, c, d, *lo, *hi) / (*hi - *lo),
            ParamLaw::Reciprocal(lo, hi) => {
                let norm = (*hi / *lo).ln();
                if j >= 1 {
                    definite(j - 1, k, c, d, *lo, *hi) / norm
                } else {
                    reciprocal_base(k, c, d, *lo, *hi) / norm
                }
            }
            _ => self.moment_by_quadrature(j, c, d, k),
        }
    }

    /// `E[x^j]`.
    pub fn raw_moment(&self, j: u32) -> T {
        let e = j as i32 + 1;
        match self {
            ParamLaw::Point(v) => v.powi(j as i32),
            ParamLaw::Atoms(list) => list.iter().map(|&(v, w)| w * v.powi(j as i32)).sum(),
            ParamLaw::Uniform(lo, hi) => {
                (hi.powi(e) - lo.powi(e)) / (T::from_i32(e).unwrap() * (*hi - *lo))
            }
            ParamLaw::Reciprocal(lo, hi) if j > 0 => {
                (hi.powi(j as i32) - lo.powi(j as i32)) / (T::from_u32(j).unwrap() * (*hi / *lo).ln())
            }
            ParamLaw::Reciprocal(..) => T::one(),
            ParamLaw::Power { .. } => self.expect(|x| x.powi(j as i32)),
        }
    }

    pub fn moment_by_quadrature(&self, j: u32, c: T, d: T, k: u32) -> T {
        self.expect(|x| x.powi(j as i32) * (c + d * x).powi(-(k as i32)))
    }
}

fn binomial<T: Real>(n: u32, r: u32) -> T {
    (0..r).fold(T::one(), |acc, i| {
        acc * T::from_u32(n - i).unwrap() / T::from_u32(i + 1).unwrap()
    })
}

/// `∫ y^q dy` between `y0` and `y1` (same sign, nonzero).
fn prim_diff<T: Real>(q: i32, y0: T, y1: T) -> T {
    if q == -1 {
        (y1 / y0).abs().ln()
    } else {
        let e = q + 1;
        (y1.powi(e) - y0.powi(e)) / T::from_i32(e).unwrap()
    }
}

/// `∫_lo^hi x^j (c + d x)^(-k) dx` for `d != 0` via `x = (y - c)/d`.
fn definite<T: Real>(j: u32, k: u32, c: T, d: T, lo: T, hi: T) -> T {
    let (y0, y1) = (c + d * lo, c + d * hi);
    let mut acc = T::zero();
    for l in 0..=j {
        let coeff = binomial::<T>(j, l) * (-c).powi((j - l) as i32);
        acc = acc + coeff * prim_diff(l as i32 - k as i32, y0, y1);
    }
    acc / d.powi(j as i32 + 1)
}

/// `∫_lo^hi dx / (x (c + d x)^k)` by partial fractions.
fn reciprocal_base<T: Real>(k: u32, c: T, d: T, lo: T, hi: T) -> T {
    let kf = T::from_u32(k).unwrap();
    if k == 0 {
        return (hi / lo).ln();
    }
    if c == T::zero() {
        return d.powi(-(k as i32)) * (hi.powi(-(k as i32)) - lo.powi(-(k as i32))) / -kf;
    }
    let (y0, y1) = (c + d * lo, c + d * hi);
    let mut acc = c.powi(-(k as i32)) * (hi / lo).ln();
    for i in 1..=k {
        acc = acc - c.powi(-((k - i + 1) as i32)) * prim_diff(-(i as i32), y0, y1);
    }
    acc
}

fn factorial<T: Real>(k: u32) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * T::from_u32(i).unwrap())
}

fn alternating<T: Real>(order: u32) -> T {
    if order.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

/// `A(z) = E[(a + z)^-1]`.
pub fn transform_a<T: Real>(law: &ParamLaw<T>, z: T) -> T {
    law.moment(0, z, T::one(), 1)
}

/// `E[(a + z)^-2]`.
pub fn transform_a2<T: Real>(law: &ParamLaw<T>, z: T) -> T {
    law.moment(0, z, T::one(), 2)
}

/// `E[(a + z)^-3]`.
pub fn transform_a3<T: Real>(law: &ParamLaw<T>, z: T) -> T {
    law.moment(0, z, T::one(), 3)
}

/// `order`-th derivative of `A`.
pub fn transform_a_deriv<T: Real>(law: &ParamLaw<T>, z: T, order: u32) -> T {
    alternating::<T>(order) * factorial::<T>(order) * law.moment(0, z, T::one(), order + 1)
}

/// `Ga(z) = E[(a/z)/(1 - a/z)] = E[a/(z - a)]`.
pub fn transform_ga<T: Real>(law: &ParamLaw<T>, z: T) -> T {
    law.moment(1, z, -T::one(), 1)
}

pub fn transform_ga_deriv<T: Real>(law: &ParamLaw<T>, z: T, order: u32) -> T {
    alternating::<T>(order) * factorial::<T>(order) * law.moment(1, z, -T::one(), order + 1)
}

/// `Gb(z) = E[b z/(1 - b z)]`.
pub fn transform_gb<T: Real>(law: &ParamLaw<T>, z: T) -> T {
    law.moment(0, T::one(), -z, 1) - T::one()
}

pub fn transform_gb_deriv<T: Real>(law: &ParamLaw<T>, z: T, order: u32) -> T {
    if order == 0 {
        return transform_gb(law, z);
    }
    factorial::<T>(order) * law.moment(order, T::one(), -z, order + 1)
}

/// Model specification; serialises to the config document
/// `{"kind":"geometric","alpha":{"uniform":[0.2,0.4]},"beta":{"point":0.3},"seed":42,"z":null}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec<T> {
    pub kind: ModelKind,
    pub alpha: ParamLaw<T>,
    pub beta: ParamLaw<T>,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "z", default)]
    pub boundary_z: Option<T>,
    /// Accept the degenerate regimes (zero left endpoints for the
    /// exponential model, right endpoints at 1 for the geometric one).
    #[serde(default)]
    pub allow_degenerate: bool,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(kind: ModelKind, alpha: ParamLaw<T>, beta: ParamLaw<T>, seed: u64) -> Result<Self> {
        Self {
            kind,
            alpha,
            beta,
            seed,
            boundary_z: None,
            allow_degenerate: false,
        }
        .validated()
    }

    pub fn exponential(alpha: ParamLaw<T>, beta: ParamLaw<T>, seed: u64) -> Result<Self> {
        Self::new(ModelKind::Exponential, alpha, beta, seed)
    }

    pub fn geometric(alpha: ParamLaw<T>, beta: ParamLaw<T>, seed: u64) -> Result<Self> {
        Self::new(ModelKind::Geometric, alpha, beta, seed)
    }

    pub fn with_boundary_z(mut self, z: T) -> Result<Self> {
        self.boundary_z = Some(z);
        self.validated()
    }

    pub fn with_degenerate(mut self, allow: bool) -> Result<Self> {
        self.allow_degenerate = allow;
        self.validated()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// True when the parameters sit in the degenerate regime.
    pub fn is_degenerate(&self) -> bool {
        match self.kind {
            ModelKind::Exponential => self.alpha.lower() + self.beta.lower() <= T::zero(),
            ModelKind::Geometric => self.alpha.upper() * self.beta.upper() >= T::one(),
        }
    }

    /// Open interval of admissible boundary parameters.
    pub fn boundary_range(&self) -> (T, T) {
        match self.kind {
            ModelKind::Exponential => (-self.alpha.lower(), self.beta.lower()),
            ModelKind::Geometric => (self.alpha.upper(), self.beta.upper().recip()),
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.alpha.validate(self.kind)?;
        self.beta.validate(self.kind)?;
        if self.is_degenerate() && !self.allow_degenerate {
            let msg = match self.kind {
                ModelKind::Exponential => "lower endpoints of alpha and beta sum to 0",
                ModelKind::Geometric => "product of upper endpoints of alpha and beta is not below 1",
            };
            return Err(Error::InvalidSpec(format!(
                "{msg}; set allow_degenerate to use the degenerate branch"
            )));
        }
        if let Some(z) = self.boundary_z {
            let (lo, hi) = self.boundary_range();
            let collapsed = lo == hi && z == lo;
            if !(collapsed || (z > lo && z < hi)) {
                return Err(Error::BoundaryOutOfRange {
                    z: z.to64(),
                    lo: lo.to64(),
                    hi: hi.to64(),
                });
            }
        }
        Ok(self)
    }
}

const STREAM_A: u64 = 1;
const STREAM_B: u64 = 2;
const TAG_INTERIOR: u64 = 1;
const TAG_BOUNDARY_ROW: u64 = 2;
const TAG_BOUNDARY_COL: u64 = 3;

/// Independent ChaCha substream; the weights of row `j` of replica `r` use
/// stream `(r << 40) | (tag << 32) | j`, so grids of different sizes share
/// their common prefix.
fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn weight_stream(replica: u64, tag: u64, row: usize) -> u64 {
    (replica << 40) | (tag << 32) | row as u64
}

pub fn sample_sequences<T: Real>(spec: &ModelSpec<T>, m: usize, n: usize) -> (Vec<T>, Vec<T>) {
    let mut ra = substream(spec.seed, STREAM_A);
    let mut rb = substream(spec.seed, STREAM_B);
    let a = (0..m).map(|_| spec.alpha.sample(&mut ra)).collect();
    let b = (0..n).map(|_| spec.beta.sample(&mut rb)).collect();
    (a, b)
}

/// Exponential weights are reals, geometric weights are counts.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights<T> {
    Exponential(Grid<T>),
    Geometric(Grid<u64>),
}

impl<T: Real> Weights<T> {
    pub fn m(&self) -> usize {
        match self {
            Weights::Exponential(g) => g.m(),
            Weights::Geometric(g) => g.m(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Weights::Exponential(g) => g.n(),
            Weights::Geometric(g) => g.n(),
        }
    }

    pub fn to_real(&self) -> Grid<T> {
        match self {
            Weights::Exponential(g) => g.clone(),
            Weights::Geometric(g) => g.map(|&w| T::from_u64(w).unwrap()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix<T> {
    pub weights: Weights<T>,
    pub a_prefix: Vec<T>,
    pub b_prefix: Vec<T>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn m(&self) -> usize {
        self.weights.m()
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }
}

fn exp_draw<T: Real>(rng: &mut ChaCha8Rng, rate: T) -> T {
    let u: f64 = rng.gen();
    T::lit(-(-u).ln_1p() / rate.to64())
}

fn geom_draw<T: Real>(rng: &mut ChaCha8Rng, q: T) -> u64 {
    let u = 1.0 - rng.gen::<f64>();
    let lq = q.to64().ln();
    if lq == f64::NEG_INFINITY {
        return 0;
    }
    (u.ln() / lq).floor() as u64
}

fn check_rate<T: Real>(rate: T, i: usize, j: usize) -> Result<()> {
    if rate > T::zero() && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("nonpositive rate {rate} at ({i}, {j})")))
    }
}

fn check_param<T: Real>(q: T, i: usize, j: usize) -> Result<()> {
    if q >= T::zero() && q < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameterProduct { i, j, value: q.to64() })
    }
}

/// Row `j` (0-based) of the exponential weights of `replica`, identical to
/// the corresponding row of [`sample_weights_replica`]. Rates are not checked.
pub fn exponential_row<T: Real>(spec: &ModelSpec<T>, a: &[T], bj: T, j: usize, replica: u64) -> Vec<T> {
    let mut rng = substream(spec.seed, weight_stream(replica, TAG_INTERIOR, j));
    a.iter().map(|&ai| exp_draw(&mut rng, ai + bj)).collect()
}

/// Geometric counterpart of [`exponential_row`].
pub fn geometric_row<T: Real>(spec: &ModelSpec<T>, a: &[T], bj: T, j: usize, replica: u64) -> Vec<u64> {
    let mut rng = substream(spec.seed, weight_stream(replica, TAG_INTERIOR, j));
    a.iter().map(|&ai| geom_draw(&mut rng, ai * bj)).collect()
}

/// Weight matrix of replica 0 for the given sequences.
pub fn sample_weights<T: Real>(spec: &ModelSpec<T>, a: &[T], b: &[T]) -> Result<WeightMatrix<T>> {
    sample_weights_replica(spec, a, b, 0)
}

/// Weight matrix of an independent replica sharing the sequences `a`, `b`.
pub fn sample_weights_replica<T: Real>(
    spec: &ModelSpec<T>,
    a: &[T],
    b: &[T],
    replica: u64,
) -> Result<WeightMatrix<T>> {
    let m = a.len();
    let weights = match spec.kind {
        ModelKind::Exponential => {
            for (j, &bj) in b.iter().enumerate() {
                for (i, &ai) in a.iter().enumerate() {
                    check_rate(ai + bj, i + 1, j + 1)?;
                }
            }
            let rows: Vec<Vec<T>> = b
                .par_iter()
                .enumerate()
                .map(|(j, &bj)| exponential_row(spec, a, bj, j, replica))
                .collect();
            Weights::Exponential(Grid::from_rows(m, rows))
        }
        ModelKind::Geometric => {
            for (j, &bj) in b.iter().enumerate() {
                for (i, &ai) in a.iter().enumerate() {
                    check_param(ai * bj, i + 1, j + 1)?;
                }
            }
            let rows: Vec<Vec<u64>> = b
                .par_iter()
                .enumerate()
                .map(|(j, &bj)| geometric_row(spec, a, bj, j, replica))
                .collect();
            Weights::Geometric(Grid::from_rows(m, rows))
        }
    };
    Ok(WeightMatrix {
        weights,
        a_prefix: a.to_vec(),
        b_prefix: b.to_vec(),
    })
}

/// Extended `(m+1) x (n+1)` matrix indexed from 0 for the stationary model.
pub fn sample_boundary_weights<T: Real>(spec: &ModelSpec<T>, m: usize, n: usize) -> Result<WeightMatrix<T>> {
    let (a, b) = sample_sequences(spec, m, n);
    sample_boundary_weights_with(spec, &a, &b, 0)
}

/// Stationary-model weights for given sequences and replica.
pub fn sample_boundary_weights_with<T: Real>(
    spec: &ModelSpec<T>,
    a: &[T],
    b: &[T],
    replica: u64,
) -> Result<WeightMatrix<T>> {
    let z = spec
        .boundary_z
        .ok_or_else(|| Error::InvalidSpec("boundary parameter z is required".into()))?;
    let (m, n) = (a.len(), b.len());
    let interior = sample_weights_replica(spec, a, b, replica)?;
    let mut row_rng = substream(spec.seed, weight_stream(replica, TAG_BOUNDARY_ROW, 0));
    let mut col_rng = substream(spec.seed, weight_stream(replica, TAG_BOUNDARY_COL, 0));
    let weights = match (spec.kind, interior.weights) {
        (ModelKind::Exponential, Weights::Exponential(inner)) => {
            let mut g = Grid::filled(m + 1, n + 1, T::zero());
            for (i, &ai) in a.iter().enumerate() {
                check_rate(ai + z, i + 1, 0)?;
                g[(i + 1, 0)] = exp_draw(&mut row_rng, ai + z);
            }
            for (j, &bj) in b.iter().enumerate() {
                check_rate(bj - z, 0, j + 1)?;
                g[(0, j + 1)] = exp_draw(&mut col_rng, bj - z);
            }
            for ((i, j), &w) in inner.iter() {
                g[(i + 1, j + 1)] = w;
            }
            Weights::Exponential(g)
        }
        (ModelKind::Geometric, Weights::Geometric(inner)) => {
            let mut g = Grid::filled(m + 1, n + 1, 0u64);
            for (i, &ai) in a.iter().enumerate() {
                check_param(ai / z, i + 1, 0)?;
                g[(i + 1, 0)] = geom_draw(&mut row_rng, ai / z);
            }
            for (j, &bj) in b.iter().enumerate() {
                check_param(bj * z, 0, j + 1)?;
                g[(0, j + 1)] = geom_draw(&mut col_rng, bj * z);
            }
            for ((i, j), &w) in inner.iter() {
                g[(i + 1, j + 1)] = w;
            }
            Weights::Geometric(g)
        }
        _ => unreachable!("weight kind follows the spec kind"),
    };
    Ok(WeightMatrix {
        weights,
        a_prefix: a.to_vec(),
        b_prefix: b.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> ParamLaw<f64> {
        ParamLaw::Uniform(0.5, 1.5)
    }

    #[test]
    fn point_mass_sequences_are_constant() {
        let spec = ModelSpec::exponential(ParamLaw::Point(0.5), ParamLaw::Point(0.5), 1).unwrap();
        let (a, b) = sample_sequences(&spec, 3, 2);
        assert_eq!(a, vec![0.5; 3]);
        assert_eq!(b, vec![0.5; 2]);
    }

    #[test]
    fn sequences_are_reproducible_and_supported() {
        let spec = ModelSpec::exponential(uniform(), uniform(), 7).unwrap();
        let (a1, _) = sample_sequences(&spec, 50, 1);
        let (a2, _) = sample_sequences(&spec, 80, 1);
        assert_eq!(a1[..], a2[..50]);
        assert!(a1.iter().all(|&x| (0.5..=1.5).contains(&x)));
    }

    #[test]
    fn weight_grids_share_prefixes() {
        let spec = ModelSpec::exponential(uniform(), uniform(), 3).unwrap();
        let (a, b) = sample_sequences(&spec, 6, 6);
        let big = sample_weights(&spec, &a, &b).unwrap().weights.to_real();
        let small = sample_weights(&spec, &a[..4], &b[..3]).unwrap().weights.to_real();
        for ((i, j), w) in small.iter() {
            assert_eq!(*w, big[(i, j)]);
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let spec = ModelSpec::geometric(ParamLaw::Point(0.5), ParamLaw::Point(0.5), 1).unwrap();
        let w = sample_weights(&spec, &[0.5], &[0.5]).unwrap();
        assert_eq!((w.m(), w.n()), (1, 1));
    }

    #[test]
    fn geometric_product_guard() {
        let spec = ModelSpec::geometric(ParamLaw::Point(0.5), ParamLaw::Point(0.5), 1).unwrap();
        let err = sample_weights(&spec, &[1.5], &[0.9]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameterProduct { .. }));
    }

    #[test]
    fn law_validation() {
        assert!(ParamLaw::Uniform(1.0, 0.5).validate(ModelKind::Exponential).is_err());
        assert!(ParamLaw::Uniform(0.5, 1.5).validate(ModelKind::Geometric).is_err());
        assert!(ParamLaw::Point(0.0).validate(ModelKind::Exponential).is_err());
        assert!(ParamLaw::Atoms(vec![(0.3, 0.5), (0.6, 0.4)]).validate(ModelKind::Geometric).is_err());
        assert!(ParamLaw::Atoms(vec![(0.3, 0.5), (0.6, 0.5)]).validate(ModelKind::Geometric).is_ok());
        assert!(ParamLaw::Reciprocal(0.0, 0.5).validate(ModelKind::Geometric).is_err());
    }

    #[test]
    fn degenerate_requires_opt_in() {
        let u = ParamLaw::Uniform(0.0, 1.0);
        assert!(ModelSpec::exponential(u.clone(), u.clone(), 1).is_err());
        let spec = ModelSpec {
            kind: ModelKind::Exponential,
            alpha: u.clone(),
            beta: u,
            seed: 1,
            boundary_z: None,
            allow_degenerate: true,
        };
        assert!(spec.validated().is_ok());
    }

    #[test]
    fn boundary_range_checks() {
        let spec = ModelSpec::exponential(uniform(), uniform(), 1).unwrap();
        assert!(spec.clone().with_boundary_z(0.0).is_ok());
        assert!(spec.clone().with_boundary_z(0.5).is_err());
        let g = ModelSpec::geometric(ParamLaw::Uniform(0.2, 0.4), ParamLaw::Point(0.3), 1).unwrap();
        assert!(g.clone().with_boundary_z(1.0).is_ok());
        assert!(g.clone().with_boundary_z(0.3).is_err());
        let near = 1.0 / 0.3 - 1e-9;
        let spec = g.with_boundary_z(near).unwrap();
        let w = sample_boundary_weights(&spec, 3, 3).unwrap();
        assert_eq!((w.m(), w.n()), (4, 4));
    }

    #[test]
    fn boundary_substitutions() {
        let spec = ModelSpec::geometric(ParamLaw::Point(0.4), ParamLaw::Point(0.5), 9)
            .unwrap()
            .with_boundary_z(1.0)
            .unwrap();
        let w = sample_boundary_weights(&spec, 2, 2).unwrap();
        match w.weights {
            Weights::Geometric(g) => assert_eq!(g[(0, 0)], 0),
            _ => panic!("geometric weights expected"),
        }
    }

    #[test]
    fn transform_values() {
        let u = uniform();
        assert!((transform_a(&u, 0.0) - 3f64.ln()).abs() < 1e-14);
        assert!((transform_a2(&u, 0.0) - 4.0 / 3.0).abs() < 1e-14);
        assert!((transform_a(&ParamLaw::Point(0.7f64), 0.2) - 1.0 / 0.9).abs() < 1e-15);
        // third inverse moment: (1/2)(x^-2) from 1.5 to .5 = (4 - 4/9)/2
        assert!((transform_a3(&u, 0.0) - (4.0 - 4.0 / 9.0) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn divergence_is_infinite_never_nan() {
        let u = uniform();
        assert_eq!(transform_a(&u, -0.5), f64::INFINITY);
        assert_eq!(transform_a(&u, -1.0), f64::INFINITY);
        assert_eq!(transform_ga(&ParamLaw::Point(0.3), 0.3), f64::INFINITY);
        assert_eq!(transform_gb(&ParamLaw::Uniform(0.2, 0.5), 2.0), f64::INFINITY);
    }

    #[test]
    fn power_density_singular_endpoint_converges() {
        // density 3a^2 on [0,1]: E[a^-2] = 3, E[a^-1] = 3/2, E[a^-3] diverges
        let law = ParamLaw::Power { p: 2.0f64, lo: 0.0, hi: 1.0, anchor: Anchor::Lo };
        assert!((transform_a2(&law, 0.0) - 3.0).abs() < 1e-9);
        assert!((transform_a(&law, 0.0) - 1.5).abs() < 1e-10);
        assert_eq!(transform_a3(&law, 0.0), f64::INFINITY);
    }

    #[test]
    fn derivative_helpers_match_moments() {
        let law = ParamLaw::Reciprocal(0.2f64, 0.6);
        let z = 0.9;
        let h = 1e-5;
        let num = (transform_ga(&law, z + h) - transform_ga(&law, z - h)) / (2.0 * h);
        assert!((num - transform_ga_deriv(&law, z, 1)).abs() < 1e-7);
        let num = (transform_gb(&law, z + h) - transform_gb(&law, z - h)) / (2.0 * h);
        assert!((num - transform_gb_deriv(&law, z, 1)).abs() < 1e-7);
    }

    #[test]
    fn f32_transforms() {
        let u = ParamLaw::Uniform(0.5f32, 1.5);
        assert!((transform_a(&u, 0.0) - 3f32.ln()).abs() < 1e-5);
    }
}
