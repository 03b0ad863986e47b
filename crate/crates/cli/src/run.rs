//! Execution of a resolved [`RunConfig`] and persistence of its outputs.

use crate::config::{
    grid_points, DistMethod, DistParams, DistTask, Format, RunConfig, ShapeGrid, ShapeTask, SimulateTask, Task,
    TraceTask, TwTask,
};
use crate::fluct::{run_fluct, FluctReport};
use crate::svg::Plot;
use cornergrowth::airy::TracyWidom;
use cornergrowth::descent::{locate_zeros, trace_phi, ActionFunction, Direction, StopRule, TraceStatus};
use cornergrowth::exactdist::{cdf_det_form_range, cdf_fredholm_range, KernelContext};
use cornergrowth::lpp::{corner_samples, growth_set, lpp_dp, model_growth_sets, GrowthSet};
use cornergrowth::model::{sample_sequences, sample_weights_replica, ModelKind, Weights};
use cornergrowth::shape::{level_curve, shape, ShapeEval};
use cornergrowth::{Error, Spec};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for invalid input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(e) if e.is_numeric() => 3,
            CliError::Model(_) => 2,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

const RESOLVED: &str = "resolved_config.json";
const MAX_AUTO_SIZE: usize = 1 << 16;

/// Writes the files of one run into the output directory.
struct Sink<'a> {
    dir: &'a Path,
    cfg: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl Sink<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        if !self.cfg.output.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: &Plot) -> CliResult<()> {
        if !self.cfg.output.wants(Format::Svg) {
            return Ok(());
        }
        let path = self.dir.join(name);
        fs::write(&path, plot.render())?;
        self.written.push(path);
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> CliResult<()> {
        if !self.cfg.output.wants(Format::Json) {
            return Ok(());
        }
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        self.written.push(path);
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn need_model(cfg: &RunConfig) -> CliResult<Spec> {
    let spec = cfg
        .model
        .clone()
        .ok_or_else(|| CliError::Config(format!("task {} needs a model", cfg.task.name())))?;
    Ok(spec.validated()?)
}

/// Runs the task and returns the paths written, the resolved config first.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let resolved = dir.join(RESOLVED);
    fs::write(&resolved, serde_json::to_string_pretty(cfg)? + "\n")?;
    let mut sink = Sink { dir: &dir, cfg, written: vec![resolved] };
    match &cfg.task {
        Task::Simulate(t) => run_simulate(cfg, t, &mut sink)?,
        Task::Shape(t) => run_shape(cfg, t, &mut sink)?,
        Task::Dist(t) => run_dist(cfg, t, &mut sink)?,
        Task::Fluct(t) => {
            let spec = need_model(cfg)?;
            let report = run_fluct(&spec, t, &cfg.numeric)?;
            write_fluct(&report, &mut sink)?;
        }
        Task::Tw(t) => run_tw(t, &mut sink)?,
        Task::Trace(t) => run_trace(cfg, t, &mut sink)?,
    }
    Ok(sink.written)
}

#[derive(Serialize)]
struct SimulateSummary {
    size: usize,
    times: Vec<f64>,
    /// Largest relative deviation from `g = 1` over the rays, per time.
    max_ray_deviation: Vec<f64>,
}

fn g_of(spec: &Spec, s: f64, t: f64) -> cornergrowth::Result<f64> {
    shape(spec.kind, &spec.alpha, &spec.beta, s, t).map(|e| e.g)
}

fn run_simulate(cfg: &RunConfig, task: &SimulateTask, sink: &mut Sink) -> CliResult<()> {
    let spec = need_model(cfg)?;
    if task.times.is_empty() || task.times.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::Config("times must be positive".into()));
    }
    if (task.write_field || task.write_weights) && task.size.is_none() {
        return Err(CliError::Config("write_field and write_weights need an explicit size".into()));
    }
    let (size, sets) = match task.size {
        Some(size) => {
            let (a, b) = sample_sequences(&spec, size, size);
            let wm = sample_weights_replica(&spec, &a, &b, task.replica)?;
            let grid = wm.weights.to_real();
            let field = lpp_dp(&grid);
            if task.write_weights {
                let rows = grid.iter().map(|((i, j), &w)| match &wm.weights {
                    Weights::Geometric(g) => vec![(i + 1).to_string(), (j + 1).to_string(), g[(i, j)].to_string()],
                    Weights::Exponential(_) => vec![(i + 1).to_string(), (j + 1).to_string(), num(w)],
                });
                sink.csv("weights.csv", &["i", "j", "w"], rows)?;
            }
            if task.write_field {
                let rows = field
                    .g
                    .iter()
                    .map(|((i, j), &g)| vec![(i + 1).to_string(), (j + 1).to_string(), num(g)]);
                sink.csv("field.csv", &["i", "j", "G"], rows)?;
            }
            let sets: Vec<GrowthSet> = task.times.iter().map(|&t| growth_set(&field, t)).collect();
            (size, sets)
        }
        None => {
            let mut size = 256;
            loop {
                let (a, b) = sample_sequences(&spec, size, size);
                if let Some(sets) = model_growth_sets(&spec, &a, &b, &task.times, task.replica) {
                    break (size, sets);
                }
                size *= 2;
                if size > MAX_AUTO_SIZE {
                    return Err(Error::NotConverged(format!("growth set exceeds a {MAX_AUTO_SIZE} grid")).into());
                }
            }
        }
    };
    let mut rows = Vec::new();
    for (t, set) in task.times.iter().zip(&sets) {
        for (k, (x, y)) in set.staircase().into_iter().enumerate() {
            rows.push(vec![num(*t), k.to_string(), x.to_string(), y.to_string()]);
        }
    }
    sink.csv("boundary.csv", &["t", "vertex_index", "x", "y"], rows)?;

    let curve = level_curve(|s, t| g_of(&spec, s, t), task.level_points.max(2))?;
    sink.csv("level_curve.csv", &["s", "t"], curve.iter().map(|&(s, t)| vec![num(s), num(t)]))?;

    let rays = task.rays.max(1);
    let thetas: Vec<f64> = (0..rays)
        .map(|k| (k as f64 + 0.5) / rays as f64 * std::f64::consts::FRAC_PI_2)
        .collect();
    let level: Vec<f64> = thetas
        .iter()
        .map(|&th| g_of(&spec, th.cos(), th.sin()).map(|g| 1.0 / g))
        .collect::<cornergrowth::Result<_>>()?;
    let mut ray_rows = Vec::new();
    let mut worst = Vec::new();
    for (t, set) in task.times.iter().zip(&sets) {
        let mut w = 0.0f64;
        for (&th, &rl) in thetas.iter().zip(&level) {
            let rs = set.radial_extent(th, *t);
            let rel = (rs - rl).abs() / rl;
            w = w.max(rel);
            ray_rows.push(vec![num(*t), num(th), num(rs), num(rl), num(rel)]);
        }
        worst.push(w);
    }
    sink.csv("rays.csv", &["t", "theta", "r_sim", "r_level", "rel_err"], ray_rows)?;

    let mut plot = Plot::new("rescaled growth sets and g = 1", "x / t", "y / t");
    plot.square = true;
    for (t, set) in task.times.iter().zip(&sets) {
        let pts = set.staircase().into_iter().map(|(x, y)| (x as f64 / t, y as f64 / t)).collect();
        plot = plot.line(&format!("t = {t}"), pts);
    }
    plot = plot.dashed("g = 1", curve);
    sink.svg("simulate.svg", &plot)?;
    sink.json("simulate.json", &SimulateSummary { size, times: task.times.clone(), max_ray_deviation: worst })
}

#[derive(Serialize)]
struct ShapeSummary {
    c1: Option<f64>,
    c2: Option<f64>,
    rows: Vec<ShapeRow>,
}

#[derive(Serialize)]
struct ShapeRow {
    s: f64,
    t: f64,
    eval: ShapeEval<f64>,
}

fn run_shape(cfg: &RunConfig, task: &ShapeTask, sink: &mut Sink) -> CliResult<()> {
    let spec = need_model(cfg)?;
    let dirs: Vec<(f64, f64)> = match &task.grid {
        ShapeGrid::Ratios(rs) => rs.iter().map(|&r| (r, 1.0)).collect(),
        ShapeGrid::LevelCurve(count) => level_curve(|s, t| g_of(&spec, s, t), (*count).max(2))?,
    };
    let rows: Vec<ShapeRow> = dirs
        .iter()
        .map(|&(s, t)| shape(spec.kind, &spec.alpha, &spec.beta, s, t).map(|eval| ShapeRow { s, t, eval }))
        .collect::<cornergrowth::Result<_>>()?;
    sink.csv(
        "shape.csv",
        &["s", "t", "g", "zeta", "regime"],
        rows.iter()
            .map(|r| vec![num(r.s), num(r.t), num(r.eval.g), num(r.eval.zeta), r.eval.regime.to_string()]),
    )?;
    let cone = shape(spec.kind, &spec.alpha, &spec.beta, 1.0, 1.0)?;
    let curve = level_curve(|s, t| g_of(&spec, s, t), 101)?;
    let reach = curve.iter().map(|&(s, t)| s.max(t)).fold(0.0, f64::max);
    let mut plot = Plot::new("level curve g = 1", "s", "t").line("g = 1", curve);
    plot.square = true;
    for (name, c) in [("c1", cone.c1), ("c2", cone.c2)] {
        // the ray s/t = c
        if let Some(c) = c.filter(|c| c.is_finite() && *c > 0.0) {
            let end = if c >= 1.0 { (reach, reach / c) } else { (reach * c, reach) };
            plot = plot.dashed(&format!("s/t = {name}"), vec![(0.0, 0.0), end]);
        }
    }
    sink.svg("shape.svg", &plot)?;
    sink.json("shape.json", &ShapeSummary { c1: cone.c1, c2: cone.c2, rows })
}

fn run_dist(cfg: &RunConfig, task: &DistTask, sink: &mut Sink) -> CliResult<()> {
    let (a, b) = match &task.params {
        DistParams::Explicit { a, b } => (a.clone(), b.clone()),
        DistParams::Sampled { m, n } => sample_sequences(&need_model(cfg)?, *m, *n),
    };
    let (lo, hi) = task.k_range;
    if hi < lo {
        return Err(CliError::Config(format!("empty k range {lo}..={hi}")));
    }
    let ks: Vec<u64> = (lo..=hi).collect();
    let rows: Vec<(u64, f64, f64)> = match task.method {
        DistMethod::Series => {
            let ctx = KernelContext::new(a, b)?
                .with_quad_nodes(cfg.numeric.quad_nodes)
                .with_tail_eps(cfg.numeric.tail_eps);
            cdf_fredholm_range(&ctx, &ks)?.into_iter().map(|e| (e.k, e.cdf, e.est_error)).collect()
        }
        DistMethod::Det => {
            let p = cdf_det_form_range(&a, &b, &ks)?;
            let round = f64::EPSILON * (a.len() * a.len()) as f64;
            ks.iter().zip(p).map(|(&k, p)| (k, p, round)).collect()
        }
        DistMethod::Mc => {
            let spec = need_model(cfg)?;
            if spec.kind != ModelKind::Geometric {
                return Err(CliError::Config("dist needs the geometric model".into()));
            }
            let reps = cfg.numeric.replicas.max(1);
            let g = corner_samples(&spec, &a, &b, reps)?;
            ks.iter()
                .map(|&k| {
                    let p = g.iter().filter(|&&v| v <= k as f64).count() as f64 / reps as f64;
                    (k, p, (p * (1.0 - p) / reps as f64).sqrt())
                })
                .collect()
        }
    };
    let method = task.method.name();
    sink.csv(
        "dist.csv",
        &["k", "cdf", "method", "est_error"],
        rows.iter().map(|&(k, p, e)| vec![k.to_string(), num(p), method.to_string(), num(e)]),
    )?;
    let steps = rows.iter().flat_map(|&(k, p, _)| [(k as f64, p), (k as f64 + 1.0, p)]).collect();
    sink.svg("dist.svg", &Plot::new("P(G ≤ k)", "k", "cdf").line(method, steps))
}

fn run_tw(task: &TwTask, sink: &mut Sink) -> CliResult<()> {
    let tw = TracyWidom::<f64>::new()?;
    let ss = grid_points(task.s_range);
    let mut rows = Vec::new();
    let mut plot = Plot::new("F_GUE", "s", "F");
    for method in task.method.methods() {
        let evals = ss.iter().map(|&s| tw.eval(s, method)).collect::<cornergrowth::Result<Vec<_>>>()?;
        plot = plot.line(&method.to_string(), evals.iter().map(|e| (e.s, e.f)).collect());
        rows.extend(evals);
    }
    sink.csv(
        "tw.csv",
        &["s", "F", "method", "est_error"],
        rows.iter().map(|e| vec![num(e.s), num(e.f), e.method.to_string(), num(e.est_error)]),
    )?;
    sink.svg("tw.svg", &plot)?;
    sink.json("tw.json", &rows)
}

#[derive(Serialize)]
struct TraceSummary {
    m: usize,
    n: usize,
    zeta: f64,
    gamma: f64,
    sigma: f64,
    simple_zeros: Vec<f64>,
    curves: Vec<CurveSummary>,
}

#[derive(Serialize)]
struct CurveSummary {
    direction: Direction,
    status: TraceStatus<f64>,
    points: usize,
    length: f64,
    initial_step: f64,
    v_drift: f64,
}

fn run_trace(cfg: &RunConfig, task: &TraceTask, sink: &mut Sink) -> CliResult<()> {
    let spec = need_model(cfg)?;
    if spec.kind != ModelKind::Geometric {
        return Err(CliError::Config("trace needs the geometric model".into()));
    }
    let (a, b) = sample_sequences(&spec, task.m, task.n);
    let af = ActionFunction::new(a.clone(), b.clone())?;
    let zeros = locate_zeros(&af)?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut plot = Plot::new("steepest-descent and -ascent curves", "Re z", "Im z");
    plot.square = true;
    for dir in task.direction.directions() {
        let stop = match (dir, task.delta) {
            (Direction::Ascent, _) => StopRule::ascent(&af),
            (Direction::Descent, None) => StopRule::descent(&af),
            (Direction::Descent, Some(0.0)) => StopRule::to_origin(),
            (Direction::Descent, Some(d)) => StopRule { radius: d, max_steps: StopRule::<f64>::DEFAULT_STEPS },
        };
        let tr = trace_phi(&af, dir, None, stop)?;
        let name = match dir {
            Direction::Descent => "descent",
            Direction::Ascent => "ascent",
        };
        for (&z, &t) in tr.points.iter().zip(&tr.arclength) {
            let f = af.f(z);
            rows.push(vec![name.to_string(), num(t), num(z.re), num(z.im), num(f.re), num(f.im)]);
        }
        let upper: Vec<(f64, f64)> = tr.points.iter().map(|z| (z.re, z.im)).collect();
        let lower = upper.iter().map(|&(x, y)| (x, -y)).collect();
        plot = plot.line(name, upper).dashed(&format!("{name} (conjugate)"), lower);
        curves.push(CurveSummary {
            direction: dir,
            status: tr.status,
            points: tr.points.len(),
            length: tr.length(),
            initial_step: tr.initial_step,
            v_drift: tr.v_drift(&af),
        });
    }
    sink.csv("trace.csv", &["curve", "t", "re", "im", "u", "v"], rows)?;
    for &ai in &a {
        plot = plot.marker(&format!("a = {ai}"), (ai, 0.0), true);
    }
    for &bj in b.iter().filter(|&&bj| bj > 0.0) {
        plot = plot.marker(&format!("1/b = {}", 1.0 / bj), (1.0 / bj, 0.0), false);
    }
    plot = plot.marker("zeta", (af.zeta(), 0.0), true);
    sink.svg("trace.svg", &plot)?;
    sink.json(
        "trace.json",
        &TraceSummary {
            m: task.m,
            n: task.n,
            zeta: af.zeta(),
            gamma: af.gamma(),
            sigma: af.shape().sigma_mn,
            simple_zeros: zeros.simple,
            curves,
        },
    )
}

fn write_fluct(report: &FluctReport, sink: &mut Sink) -> CliResult<()> {
    let mut rows = Vec::new();
    for r in &report.rows {
        for p in &r.points {
            rows.push(vec![
                r.n.to_string(),
                num(r.gamma),
                num(r.sigma),
                num(p.s),
                p.k.to_string(),
                num(p.cdf),
                num(p.f_gue),
                num((p.cdf - p.f_gue).abs()),
            ]);
        }
    }
    sink.csv("fluct.csv", &["n", "gamma", "sigma", "s", "k", "cdf", "f_gue", "abs_diff"], rows)?;
    sink.csv(
        "fluct_summary.csv",
        &["n", "m", "gamma", "sigma", "method", "sup_distance"],
        report.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                num(r.gamma),
                num(r.sigma),
                r.method.to_string(),
                num(r.sup_distance),
            ]
        }),
    )?;
    sink.csv(
        "tail.csv",
        &["s", "threshold", "count", "log_p", "x"],
        report.tail.iter().map(|p| {
            vec![
                num(p.s),
                num(p.threshold),
                p.count.to_string(),
                p.log_p.map(num).unwrap_or_default(),
                num(p.x),
            ]
        }),
    )?;
    let mut plot = Plot::new("P(G ≤ nγ + n^(1/3)σs) and F_GUE", "s", "cdf");
    if let Some(first) = report.rows.first() {
        plot = plot.dashed("F_GUE", first.points.iter().map(|p| (p.s, p.f_gue)).collect());
    }
    for r in &report.rows {
        plot = plot.line(&format!("n = {}", r.n), r.points.iter().map(|p| (p.s, p.cdf)).collect());
    }
    sink.svg("fluct.svg", &plot)?;
    sink.json("fluct.json", report)
}
