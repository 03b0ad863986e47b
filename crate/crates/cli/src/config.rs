//! Run configuration. Every field has a default except the task; the
//! resolved document (defaults filled in) is written next to the outputs and
//! can be fed back through `--config`.

use cornergrowth::airy::TwMethod;
use cornergrowth::descent::Direction;
use cornergrowth::Spec;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every task except `tw`.
    #[serde(default)]
    pub model: Option<Spec>,
    #[serde(default)]
    pub numeric: Numeric,
    #[serde(default)]
    pub output: Output,
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numeric {
    /// Minimum trapezoid nodes for the kernel contour integrals.
    pub quad_nodes: usize,
    /// Truncation target for kernel series and Fredholm blocks.
    pub tail_eps: f64,
    /// Monte Carlo replica count.
    pub replicas: u64,
}

impl Default for Numeric {
    fn default() -> Self {
        Self { quad_nodes: 512, tail_eps: 1e-15, replicas: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl Output {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate(SimulateTask),
    Shape(ShapeTask),
    Dist(DistTask),
    Fluct(FluctTask),
    Tw(TwTask),
    Trace(TraceTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Simulate(_) => "simulate",
            Task::Shape(_) => "shape",
            Task::Dist(_) => "dist",
            Task::Fluct(_) => "fluct",
            Task::Tw(_) => "tw",
            Task::Trace(_) => "trace",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateTask {
    pub times: Vec<f64>,
    /// Side of the square grid; sized automatically when absent.
    pub size: Option<usize>,
    /// Directions along which the rescaled boundary is compared with `g = 1`.
    pub rays: usize,
    pub level_points: usize,
    pub replica: u64,
    /// Needs `size`.
    pub write_field: bool,
    /// Needs `size`.
    pub write_weights: bool,
}

impl Default for SimulateTask {
    fn default() -> Self {
        Self {
            times: vec![100.0],
            size: None,
            rays: 50,
            level_points: 101,
            replica: 0,
            write_field: false,
            write_weights: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeGrid {
    /// Directions `(s, t) = (r, 1)`.
    Ratios(Vec<f64>),
    /// Points of the level curve `g = 1` along this many directions.
    LevelCurve(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeTask {
    pub grid: ShapeGrid,
}

impl Default for ShapeTask {
    fn default() -> Self {
        Self { grid: ShapeGrid::LevelCurve(101) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistParams {
    Explicit { a: Vec<f64>, b: Vec<f64> },
    /// Prefixes of the sequences sampled from the model.
    Sampled { m: usize, n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistMethod {
    Series,
    Det,
    Mc,
}

impl DistMethod {
    pub fn name(self) -> &'static str {
        match self {
            DistMethod::Series => "series",
            DistMethod::Det => "det",
            DistMethod::Mc => "mc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistTask {
    pub params: DistParams,
    /// Inclusive.
    pub k_range: (u64, u64),
    pub method: DistMethod,
}

impl Default for DistTask {
    fn default() -> Self {
        Self { params: DistParams::Sampled { m: 4, n: 4 }, k_range: (0, 20), method: DistMethod::Series }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctTask {
    pub ns: Vec<usize>,
    /// Direction `m/n`.
    pub r: f64,
    /// `(lo, hi, step)` of the rescaled variable.
    pub s_range: (f64, f64, f64),
    pub tail_n: usize,
    pub tail_s: (f64, f64, f64),
}

impl Default for FluctTask {
    fn default() -> Self {
        Self {
            ns: vec![32, 64, 128],
            r: 1.0,
            s_range: (-4.0, 2.0, 0.5),
            tail_n: 64,
            tail_s: (0.05, 0.8, 0.05),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwChoice {
    Fredholm,
    Painleve,
    Both,
}

impl TwChoice {
    pub fn methods(self) -> Vec<TwMethod> {
        match self {
            TwChoice::Fredholm => vec![TwMethod::Fredholm],
            TwChoice::Painleve => vec![TwMethod::Painleve],
            TwChoice::Both => vec![TwMethod::Fredholm, TwMethod::Painleve],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwTask {
    pub s_range: (f64, f64, f64),
    pub method: TwChoice,
}

impl Default for TwTask {
    fn default() -> Self {
        Self { s_range: (-6.0, 4.0, 0.25), method: TwChoice::Both }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceChoice {
    Descent,
    Ascent,
    Both,
}

impl TraceChoice {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            TraceChoice::Descent => vec![Direction::Descent],
            TraceChoice::Ascent => vec![Direction::Ascent],
            TraceChoice::Both => vec![Direction::Descent, Direction::Ascent],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceTask {
    pub m: usize,
    pub n: usize,
    pub direction: TraceChoice,
    /// Inner stopping radius of the descent curve; `ζ/10` when absent, `0`
    /// runs into the origin.
    pub delta: Option<f64>,
}

impl Default for TraceTask {
    fn default() -> Self {
        Self { m: 8, n: 8, direction: TraceChoice::Both, delta: None }
    }
}

/// `lo, lo + step, ...` up to `hi` (inclusive up to rounding).
pub fn grid_points((lo, hi, step): (f64, f64, f64)) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return vec![lo];
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| lo + step * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(grid_points((-1.0, 1.0, 0.5)), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(grid_points((0.05, 0.8, 0.05)).len(), 16);
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = r#"{"task":{"tw":{"s_range":[0,1,0.5],"nodes":3}}}"#;
        assert!(serde_json::from_str::<RunConfig>(doc).is_err());
        let doc = r#"{"task":{"tw":{}},"extra":1}"#;
        assert!(serde_json::from_str::<RunConfig>(doc).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: RunConfig = serde_json::from_str(r#"{"task":{"tw":{}}}"#).unwrap();
        assert_eq!(cfg.numeric, Numeric::default());
        assert_eq!(cfg.task, Task::Tw(TwTask::default()));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    proptest! {
        #[test]
        fn grid_points_are_increasing_and_bounded(lo in -10.0f64..10.0, span in 0.0f64..20.0, step in 0.01f64..5.0) {
            let pts = grid_points((lo, lo + span, step));
            prop_assert_eq!(pts[0], lo);
            prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*pts.last().unwrap() <= lo + span + 1e-6);
            prop_assert!(*pts.last().unwrap() + step > lo + span - 1e-6);
        }

        #[test]
        fn dist_config_round_trips(m in 1usize..50, n in 1usize..50, lo in 0u64..100, len in 0u64..100, q in 1e-16f64..1e-3) {
            let cfg = RunConfig {
                model: None,
                numeric: Numeric { tail_eps: q, ..Numeric::default() },
                output: Output::default(),
                task: Task::Dist(DistTask {
                    params: DistParams::Sampled { m, n },
                    k_range: (lo, lo + len),
                    method: DistMethod::Det,
                }),
            };
            let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
