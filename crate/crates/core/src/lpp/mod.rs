//! Last-passage times: dynamic programming, the path-enumeration oracle,
//! growth sets, the stationary boundary model with its increments, and the
//! Burke map.

mod rsk;

pub use rsk::{rsk, rsk_inverse, Tableau};

use crate::grid::Grid;
use crate::model::{exponential_row, geometric_row, ModelKind, ModelSpec};
use crate::{Error, Real, Result};
use rayon::prelude::*;
use num_traits::Zero;
use std::fmt::Debug;
use std::ops::{Add, Sub};

/// Anything that can be used as a site weight.
pub trait Weight: Copy + PartialOrd + Add<Output = Self> + Zero + Debug + Send + Sync {}
impl<W: Copy + PartialOrd + Add<Output = W> + Zero + Debug + Send + Sync> Weight for W {}

#[inline]
fn max<W: PartialOrd>(x: W, y: W) -> W {
    if y > x {
        y
    } else {
        x
    }
}

#[inline]
fn min<W: PartialOrd>(x: W, y: W) -> W {
    if y < x {
        y
    } else {
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// `G(i,0) = G(0,j) = 0`; the grid holds `G(i,j)` at `(i-1, j-1)`.
    Interior,
    /// Boundary row and column included; the grid is indexed from 0.
    Stationary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LastPassageField<W> {
    pub g: Grid<W>,
    pub kind: FieldKind,
}

impl<W: Weight> LastPassageField<W> {
    /// `G(i, j)` in lattice coordinates (1-based for the interior model,
    /// 0-based for the stationary one); zero outside the grid.
    pub fn at(&self, i: usize, j: usize) -> W {
        match self.kind {
            FieldKind::Interior if i == 0 || j == 0 => W::zero(),
            FieldKind::Interior => self.g.get(i - 1, j - 1).copied().unwrap_or_else(W::zero),
            FieldKind::Stationary => self.g.get(i, j).copied().unwrap_or_else(W::zero),
        }
    }

    /// Value at the far corner.
    pub fn corner(&self) -> W {
        self.g[(self.g.m() - 1, self.g.n() - 1)]
    }
}

/// `G(i,j) = max(G(i-1,j), G(i,j-1)) + W(i,j)` with zero boundary.
pub fn lpp_dp<W: Weight>(w: &Grid<W>) -> LastPassageField<W> {
    let (m, n) = (w.m(), w.n());
    let mut g = Grid::filled(m, n, W::zero());
    for j in 0..n {
        for i in 0..m {
            let left = if i > 0 { g[(i - 1, j)] } else { W::zero() };
            let below = if j > 0 { g[(i, j - 1)] } else { W::zero() };
            g[(i, j)] = max(left, below) + w[(i, j)];
        }
    }
    LastPassageField {
        g,
        kind: FieldKind::Interior,
    }
}

/// Maximum over all up-right paths from the first to the last site, by
/// explicit enumeration.
pub fn lpp_bruteforce<W: Weight>(w: &Grid<W>) -> Result<W> {
    let (m, n) = (w.m(), w.n());
    if m + n > 22 {
        return Err(Error::GridTooLarge(m + n));
    }
    if m == 0 || n == 0 {
        return Ok(W::zero());
    }
    fn walk<W: Weight>(w: &Grid<W>, i: usize, j: usize, acc: W, best: &mut Option<W>) {
        let acc = acc + w[(i, j)];
        if i + 1 == w.m() && j + 1 == w.n() {
            if best.is_none_or(|b| acc > b) {
                *best = Some(acc);
            }
            return;
        }
        if i + 1 < w.m() {
            walk(w, i + 1, j, acc, best);
        }
        if j + 1 < w.n() {
            walk(w, i, j + 1, acc, best);
        }
    }
    let mut best = None;
    walk(w, 0, 0, W::zero(), &mut best);
    Ok(best.unwrap_or_else(W::zero))
}

/// A maximising path from `(1,1)` to `(m,n)` (1-based), ties broken toward
/// the `(i-1, j)` predecessor.
pub fn argmax_path<W: Weight>(field: &LastPassageField<W>) -> Vec<(usize, usize)> {
    let (m, n) = (field.g.m(), field.g.n());
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let (mut i, mut j) = (m, n);
    let mut path = vec![(i, j)];
    while (i, j) != (1, 1) {
        if j == 1 || (i > 1 && field.at(i - 1, j) >= field.at(i, j - 1)) {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    path
}

/// Sites `(i, j)` (1-based) with `G(i, j) <= t`, stored as the column
/// heights `h(i) = max{j : G(i, j) <= t}`; the set is down-left closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthSet {
    pub heights: Vec<usize>,
}

impl GrowthSet {
    pub fn len(&self) -> usize {
        self.heights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && self.heights.get(i - 1).is_some_and(|&h| j <= h)
    }

    pub fn sites(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heights
            .iter()
            .enumerate()
            .flat_map(|(i, &h)| (1..=h).map(move |j| (i + 1, j)))
    }

    /// Outer boundary of the union of unit squares `[i-1,i] x [j-1,j]`, as
    /// an ordered vertex list from the vertical axis to the horizontal one.
    pub fn staircase(&self) -> Vec<(usize, usize)> {
        let k = self.heights.iter().take_while(|&&h| h > 0).count();
        if k == 0 {
            return Vec::new();
        }
        let mut v = vec![(0, self.heights[0])];
        for i in 0..k {
            let h = self.heights[i];
            v.push((i + 1, h));
            let next = if i + 1 < k { self.heights[i + 1] } else { 0 };
            if next != h {
                v.push((i + 1, next));
            }
        }
        v
    }
}

impl GrowthSet {
    /// Largest `r` with `r·scale·(cos θ, sin θ)` inside the union of unit
    /// squares, for `θ ∈ [0, π/2]`.
    pub fn radial_extent(&self, theta: f64, scale: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let inside = |r: f64| {
            let (x, y) = (r * scale * c, r * scale * s);
            let i = (x.ceil() as usize).max(1);
            let j = (y.ceil() as usize).max(1);
            self.contains(i, j)
        };
        if !inside(0.0) {
            return 0.0;
        }
        let reach = self.heights.len() + self.heights.first().copied().unwrap_or(0);
        let (mut lo, mut hi) = (0.0, (reach as f64 + 1.0) / scale);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Growth sets `{G ≤ t}` for each of `times`, computed row by row without
/// storing the field. `row(j)` returns the `m` weights of row `j` (0-based).
/// Rows are consumed until every set has stopped growing; `None` when a set
/// reaches column `m` or more than `max_rows` rows are needed.
pub fn growth_sets_by_rows<W: Weight>(
    m: usize,
    mut row: impl FnMut(usize) -> Vec<W>,
    times: &[W],
    max_rows: usize,
) -> Option<Vec<GrowthSet>> {
    let mut prev = vec![W::zero(); m];
    let mut counts: Vec<Vec<usize>> = vec![Vec::new(); times.len()];
    for j in 0..max_rows {
        let w = row(j);
        let mut left = W::zero();
        for i in 0..m {
            left = max(left, prev[i]) + w[i];
            prev[i] = left;
        }
        let mut alive = false;
        for (t, c) in times.iter().zip(counts.iter_mut()) {
            let k = prev.partition_point(|g| g <= t);
            if k == m {
                return None;
            }
            if k > 0 {
                c.push(k);
                alive = true;
            }
        }
        if !alive {
            let sets = counts
                .into_iter()
                .map(|c| {
                    let width = c.first().copied().unwrap_or(0);
                    let heights = (1..=width).map(|i| c.partition_point(|&k| k >= i)).collect();
                    GrowthSet { heights }
                })
                .collect();
            return Some(sets);
        }
    }
    None
}

/// Growth sets for the model with sequences `a` (columns) and `b` (rows)
/// of replica `replica`; the row weights come from the same substreams as
/// the full weight matrix.
pub fn model_growth_sets<T: Real>(
    spec: &ModelSpec<T>,
    a: &[T],
    b: &[T],
    times: &[T],
    replica: u64,
) -> Option<Vec<GrowthSet>> {
    let m = a.len();
    match spec.kind {
        ModelKind::Exponential => growth_sets_by_rows(
            m,
            |j| exponential_row(spec, a, b[j], j, replica),
            times,
            b.len(),
        ),
        ModelKind::Geometric => {
            let ts: Vec<u64> = times.iter().map(|t| t.floor().to_u64().unwrap_or(0)).collect();
            growth_sets_by_rows(m, |j| geometric_row(spec, a, b[j], j, replica), &ts, b.len())
        }
    }
}

/// `G(m, n)` for `replicas` independent weight matrices sharing `a`, `b`.
pub fn corner_samples<T: Real>(spec: &ModelSpec<T>, a: &[T], b: &[T], replicas: u64) -> Result<Vec<T>> {
    let check = match spec.kind {
        ModelKind::Exponential => a.iter().all(|&ai| b.iter().all(|&bj| ai + bj > T::zero())),
        ModelKind::Geometric => a.iter().all(|&ai| b.iter().all(|&bj| ai * bj < T::one())),
    };
    if !check {
        return Err(Error::InvalidSpec("weights undefined for some site".into()));
    }
    let m = a.len();
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| match spec.kind {
            ModelKind::Exponential => {
                let mut prev = vec![T::zero(); m];
                for (j, &bj) in b.iter().enumerate() {
                    let w = exponential_row(spec, a, bj, j, r);
                    let mut left = T::zero();
                    for i in 0..m {
                        left = left.max(prev[i]) + w[i];
                        prev[i] = left;
                    }
                }
                prev.last().copied().unwrap_or(T::zero())
            }
            ModelKind::Geometric => {
                let mut prev = vec![0u64; m];
                for (j, &bj) in b.iter().enumerate() {
                    let w = geometric_row(spec, a, bj, j, r);
                    let mut left = 0;
                    for i in 0..m {
                        left = left.max(prev[i]) + w[i];
                        prev[i] = left;
                    }
                }
                T::from_u64(prev.last().copied().unwrap_or(0)).unwrap()
            }
        })
        .collect())
}

pub fn growth_set<W: Weight>(field: &LastPassageField<W>, t: W) -> GrowthSet {
    let (m, n) = match field.kind {
        FieldKind::Interior => (field.g.m(), field.g.n()),
        FieldKind::Stationary => (field.g.m() - 1, field.g.n() - 1),
    };
    let heights = (1..=m)
        .map(|i| (1..=n).take_while(|&j| field.at(i, j) <= t).count())
        .collect();
    GrowthSet { heights }
}

/// `Ĝ` on the extended grid indexed from 0, with boundary partial sums.
pub fn stationary_field<W: Weight>(ext: &Grid<W>) -> LastPassageField<W> {
    let (m1, n1) = (ext.m(), ext.n());
    let mut g = Grid::filled(m1, n1, W::zero());
    for j in 0..n1 {
        for i in 0..m1 {
            g[(i, j)] = match (i, j) {
                (0, 0) => ext[(0, 0)],
                (0, _) => g[(0, j - 1)] + ext[(0, j)],
                (_, 0) => g[(i - 1, 0)] + ext[(i, 0)],
                _ => max(g[(i - 1, j)], g[(i, j - 1)]) + ext[(i, j)],
            };
        }
    }
    LastPassageField {
        g,
        kind: FieldKind::Stationary,
    }
}

/// Increments `I(i,j) = Ĝ(i,j) - Ĝ(i-1,j)` for `i >= 1`, `j >= 0`, stored at
/// `(i-1, j)`, and `J(i,j) = Ĝ(i,j) - Ĝ(i,j-1)` for `i >= 0`, `j >= 1`,
/// stored at `(i, j-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementField<W> {
    pub i_inc: Grid<W>,
    pub j_inc: Grid<W>,
}

impl<W: Copy> IncrementField<W> {
    pub fn i_at(&self, i: usize, j: usize) -> W {
        self.i_inc[(i - 1, j)]
    }

    pub fn j_at(&self, i: usize, j: usize) -> W {
        self.j_inc[(i, j - 1)]
    }
}

pub fn increments<W: Weight + Sub<Output = W>>(field: &LastPassageField<W>) -> IncrementField<W> {
    let g = &field.g;
    let (m1, n1) = (g.m(), g.n());
    IncrementField {
        i_inc: Grid::from_fn(m1 - 1, n1, |i, j| g[(i + 1, j)] - g[(i, j)]),
        j_inc: Grid::from_fn(m1, n1 - 1, |i, j| g[(i, j + 1)] - g[(i, j)]),
    }
}

/// Increments from the boundary weights by the local recursion
/// `I(m,n) = I(m,n-1) - I(m,n-1)∧J(m-1,n) + W(m,n)` and its mirror for `J`.
pub fn increments_by_recursion<W: Weight + Sub<Output = W>>(ext: &Grid<W>) -> IncrementField<W> {
    let (m1, n1) = (ext.m(), ext.n());
    let mut ii = Grid::filled(m1 - 1, n1, W::zero());
    let mut jj = Grid::filled(m1, n1 - 1, W::zero());
    for i in 1..m1 {
        ii[(i - 1, 0)] = ext[(i, 0)];
    }
    for j in 1..n1 {
        jj[(0, j - 1)] = ext[(0, j)];
    }
    for j in 1..n1 {
        for i in 1..m1 {
            let left = ii[(i - 1, j - 1)];
            let below = jj[(i - 1, j - 1)];
            let mu = min(left, below);
            ii[(i - 1, j)] = left - mu + ext[(i, j)];
            jj[(i, j - 1)] = below - mu + ext[(i, j)];
        }
    }
    IncrementField { i_inc: ii, j_inc: jj }
}

/// `F(x, y, z) = (x - x∧y + z, y - x∧y + z, x∧y)`.
pub fn burke_map<W: Weight + Sub<Output = W>>(x: W, y: W, z: W) -> (W, W, W) {
    let mu = min(x, y);
    (x - mu + z, y - mu + z, mu)
}
