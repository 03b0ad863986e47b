//! Exact CDF of the rescaled last-passage time against `F_GUE`, and the
//! Monte Carlo right tail.

use crate::config::{grid_points, FluctTask, Numeric};
use cornergrowth::airy::TracyWidom;
use cornergrowth::exactdist::{cdf_det_form_range, cdf_fredholm_range, KernelContext};
use cornergrowth::lpp::corner_samples;
use cornergrowth::model::{sample_sequences, ModelKind, ParamLaw};
use cornergrowth::shape::{empirical_shape, shape_geometric, Regime};
use cornergrowth::stats::linear_fit;
use cornergrowth::{Error, Result, Spec};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctPoint {
    pub s: f64,
    /// `⌊nγ + n^{1/3}σ s⌋`.
    pub k: i64,
    pub cdf: f64,
    pub f_gue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctRow {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub sigma: f64,
    /// `det` for point-mass laws with `m = n`, `series` otherwise.
    pub method: &'static str,
    pub points: Vec<FluctPoint>,
    pub sup_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailPoint {
    pub s: f64,
    /// `n γ + n s`.
    pub threshold: f64,
    pub count: u64,
    /// `log` of the exceedance frequency; absent when nothing exceeded.
    pub log_p: Option<f64>,
    /// `n min(s^{3/2}, s)`.
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctReport {
    pub r: f64,
    pub rows: Vec<FluctRow>,
    /// Sup-distance never increases along the list of `n`.
    pub sup_nonincreasing: bool,
    pub tail_n: usize,
    pub replicas: u64,
    pub tail: Vec<TailPoint>,
    pub tail_fit: Option<TailFit>,
}

fn point_mass(law: &ParamLaw<f64>) -> bool {
    matches!(law, ParamLaw::Point(_))
}

/// Checks the model kind and that `r` lies strictly inside `(c1, c2)`.
pub fn check_direction(spec: &Spec, r: f64) -> Result<()> {
    if spec.kind != ModelKind::Geometric {
        return Err(Error::InvalidSpec("fluctuations need the geometric model".into()));
    }
    let eval = shape_geometric(&spec.alpha, &spec.beta, r, 1.0)?;
    if eval.regime != Regime::StrictlyConcave {
        return Err(Error::OutsideConcaveCone {
            r,
            c1: eval.c1.unwrap_or(f64::NAN),
            c2: eval.c2.unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

pub fn fluct_row(spec: &Spec, task: &FluctTask, numeric: &Numeric, tw: &[f64], n: usize) -> Result<FluctRow> {
    let m = ((task.r * n as f64).round() as usize).max(1);
    let (a, b) = sample_sequences(spec, m, n);
    let shape = empirical_shape(&a, &b)?;
    let ss = grid_points(task.s_range);
    let ks: Vec<i64> = ss.iter().map(|&s| shape.scaling_index(s)).collect();
    let valid: Vec<u64> = ks.iter().filter(|&&k| k >= 0).map(|&k| k as u64).collect();
    let det = point_mass(&spec.alpha) && point_mass(&spec.beta) && m == n;
    let values = if det {
        cdf_det_form_range(&a, &b, &valid)?
    } else {
        let ctx = KernelContext::new(a.clone(), b.clone())?
            .with_quad_nodes(numeric.quad_nodes)
            .with_tail_eps(numeric.tail_eps);
        cdf_fredholm_range(&ctx, &valid)?.into_iter().map(|e| e.cdf).collect()
    };
    let mut it = values.into_iter();
    let points: Vec<FluctPoint> = ss
        .iter()
        .zip(&ks)
        .zip(tw)
        .map(|((&s, &k), &f)| FluctPoint {
            s,
            k,
            cdf: if k >= 0 { it.next().unwrap_or(0.0) } else { 0.0 },
            f_gue: f,
        })
        .collect();
    let sup_distance = points.iter().map(|p| (p.cdf - p.f_gue).abs()).fold(0.0, f64::max);
    Ok(FluctRow {
        n,
        m,
        gamma: shape.gamma_mn,
        sigma: shape.sigma_mn,
        method: if det { "det" } else { "series" },
        points,
        sup_distance,
    })
}

pub fn right_tail(spec: &Spec, task: &FluctTask, replicas: u64) -> Result<(Vec<TailPoint>, Option<TailFit>)> {
    let n = task.tail_n;
    let m = ((task.r * n as f64).round() as usize).max(1);
    let (a, b) = sample_sequences(spec, m, n);
    let shape = empirical_shape(&a, &b)?;
    let samples = corner_samples(spec, &a, &b, replicas)?;
    let nf = n as f64;
    let tail: Vec<TailPoint> = grid_points(task.tail_s)
        .into_iter()
        .map(|s| {
            let threshold = nf * shape.gamma_mn + nf * s;
            let count = samples.iter().filter(|&&g| g >= threshold).count() as u64;
            TailPoint {
                s,
                threshold,
                count,
                log_p: (count > 0).then(|| (count as f64 / replicas as f64).ln()),
                x: nf * s.powf(1.5).min(s),
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().filter_map(|p| p.log_p.map(|y| (p.x, y))).unzip();
    let fit = (xs.len() >= 3).then(|| {
        let f = linear_fit(&xs, &ys);
        TailFit { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, points: xs.len() }
    });
    Ok((tail, fit))
}

pub fn run_fluct(spec: &Spec, task: &FluctTask, numeric: &Numeric) -> Result<FluctReport> {
    check_direction(spec, task.r)?;
    let tw = TracyWidom::<f64>::new()?;
    let f_gue: Vec<f64> = grid_points(task.s_range)
        .into_iter()
        .map(|s| tw.fredholm(s).map(|e| e.f))
        .collect::<Result<_>>()?;
    let rows: Vec<FluctRow> = task
        .ns
        .iter()
        .map(|&n| fluct_row(spec, task, numeric, &f_gue, n))
        .collect::<Result<_>>()?;
    let sup_nonincreasing = rows.windows(2).all(|w| w[1].sup_distance <= w[0].sup_distance);
    let (tail, tail_fit) = if numeric.replicas > 0 && task.tail_n > 0 {
        right_tail(spec, task, numeric.replicas)?
    } else {
        (Vec::new(), None)
    };
    Ok(FluctReport {
        r: task.r,
        rows,
        sup_nonincreasing,
        tail_n: task.tail_n,
        replicas: numeric.replicas,
        tail,
        tail_fit,
    })
}
