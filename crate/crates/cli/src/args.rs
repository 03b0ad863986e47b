//! Command-line arguments and their merge onto a config document.
//!
//! Precedence: defaults, then the `--config` file, then flags.

use crate::config::{
    DistMethod, DistParams, Format, RunConfig, ShapeGrid, Task, TraceChoice, TwChoice,
};
use crate::run::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};
use cornergrowth::model::{ModelKind, ModelSpec};
use cornergrowth::Law;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "cornergrowth", version, about = "Inhomogeneous corner-growth models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON config document; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv, svg, json.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    pub format: Option<Vec<Format>>,
    /// `exponential` or `geometric`.
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<ModelKind>,
    /// Law of the column parameters as JSON, e.g. `{"uniform":[0.2,0.4]}`.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Law of the row parameters as JSON.
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Boundary parameter of the stationary model.
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long)]
    pub allow_degenerate: bool,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    #[arg(long)]
    pub tail_eps: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample weights, compute last-passage times and growth sets.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        rays: Option<usize>,
        #[arg(long)]
        replica: Option<u64>,
        #[arg(long)]
        write_field: bool,
        #[arg(long)]
        write_weights: bool,
    },
    /// Evaluate the limit shape.
    Shape {
        #[command(flatten)]
        common: Common,
        /// `level:<count>` or a comma-separated list of ratios `s/t`.
        #[arg(long, value_parser = parse_shape_grid)]
        grid: Option<ShapeGrid>,
    },
    /// Exact distribution of the corner last-passage time.
    Dist {
        #[command(flatten)]
        common: Common,
        /// `m,n` to sample the parameters, or JSON `{"a":[..],"b":[..]}`.
        #[arg(long, value_parser = parse_params)]
        params: Option<DistParams>,
        /// Inclusive `lo,hi`.
        #[arg(long, value_parser = parse_k_range)]
        k_range: Option<(u64, u64)>,
        #[arg(long, value_parser = parse_dist_method)]
        method: Option<DistMethod>,
    },
    /// Rescaled fluctuations against the Tracy-Widom law and the right tail.
    Fluct {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long)]
        r: Option<f64>,
        /// `lo,hi,step`.
        #[arg(long, value_parser = parse_triple)]
        s_range: Option<(f64, f64, f64)>,
        #[arg(long)]
        tail_n: Option<usize>,
        /// `lo,hi,step`.
        #[arg(long, value_parser = parse_triple)]
        tail_s: Option<(f64, f64, f64)>,
    },
    /// Tabulate the GUE Tracy-Widom distribution.
    Tw {
        #[command(flatten)]
        common: Common,
        /// `lo,hi,step`.
        #[arg(long, value_parser = parse_triple)]
        s_range: Option<(f64, f64, f64)>,
        /// `fredholm`, `painleve` or `both`.
        #[arg(long, value_parser = parse_tw_choice)]
        method: Option<TwChoice>,
    },
    /// Trace the steepest-descent and -ascent curves through the saddle.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// `descent`, `ascent` or `both`.
        #[arg(long, value_parser = parse_trace_choice)]
        direction: Option<TraceChoice>,
        /// Inner stopping radius of the descent curve; 0 runs into the origin.
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    json_enum(s)
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    json_enum(s)
}

fn parse_dist_method(s: &str) -> Result<DistMethod, String> {
    json_enum(s)
}

fn parse_tw_choice(s: &str) -> Result<TwChoice, String> {
    json_enum(s)
}

fn parse_trace_choice(s: &str) -> Result<TraceChoice, String> {
    json_enum(s)
}

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    match floats(s)?.as_slice() {
        &[lo, hi, step] => Ok((lo, hi, step)),
        _ => Err("expected lo,hi,step".into()),
    }
}

fn parse_k_range(s: &str) -> Result<(u64, u64), String> {
    let parts: Vec<u64> = s.split(',').map(|p| p.trim().parse::<u64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => Err("expected lo,hi".into()),
    }
}

fn parse_shape_grid(s: &str) -> Result<ShapeGrid, String> {
    match s.strip_prefix("level:") {
        Some(c) => c.trim().parse().map(ShapeGrid::LevelCurve).map_err(|e| e.to_string()),
        None => floats(s).map(ShapeGrid::Ratios),
    }
}

fn parse_params(s: &str) -> Result<DistParams, String> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Explicit {
        a: Vec<f64>,
        b: Vec<f64>,
    }
    if s.trim_start().starts_with('{') {
        let e: Explicit = serde_json::from_str(s).map_err(|e| e.to_string())?;
        return Ok(DistParams::Explicit { a: e.a, b: e.b });
    }
    let parts: Vec<usize> = s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[m, n] => Ok(DistParams::Sampled { m, n }),
        _ => Err("expected m,n or a JSON object".into()),
    }
}

fn parse_law(flag: &str, s: &str) -> CliResult<Law> {
    serde_json::from_str(s).map_err(|e| CliError::Config(format!("--{flag}: {e}")))
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Shape { common, .. }
            | Command::Dist { common, .. }
            | Command::Fluct { common, .. }
            | Command::Tw { common, .. }
            | Command::Trace { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Shape { .. } => "shape",
            Command::Dist { .. } => "dist",
            Command::Fluct { .. } => "fluct",
            Command::Tw { .. } => "tw",
            Command::Trace { .. } => "trace",
        }
    }

    fn default_task(&self) -> Task {
        match self {
            Command::Simulate { .. } => Task::Simulate(Default::default()),
            Command::Shape { .. } => Task::Shape(Default::default()),
            Command::Dist { .. } => Task::Dist(Default::default()),
            Command::Fluct { .. } => Task::Fluct(Default::default()),
            Command::Tw { .. } => Task::Tw(Default::default()),
            Command::Trace { .. } => Task::Trace(Default::default()),
        }
    }
}

fn set<T>(slot: &mut T, v: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = v {
        *slot = v.clone();
    }
}

impl Cli {
    /// Merges defaults, the config file and the flags, and validates the model.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let cmd = &self.command;
        let common = cmd.common();
        let mut cfg = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                if cfg.task.name() != cmd.name() {
                    return Err(CliError::Config(format!(
                        "config holds a {} task but the command is {}",
                        cfg.task.name(),
                        cmd.name()
                    )));
                }
                cfg
            }
            None => RunConfig {
                model: None,
                numeric: Default::default(),
                output: Default::default(),
                task: cmd.default_task(),
            },
        };
        set(&mut cfg.output.dir, &common.out);
        set(&mut cfg.output.formats, &common.format);
        set(&mut cfg.numeric.quad_nodes, &common.quad_nodes);
        set(&mut cfg.numeric.tail_eps, &common.tail_eps);
        set(&mut cfg.numeric.replicas, &common.replicas);
        cfg.model = merge_model(cfg.model.take(), common)?;
        apply_task(&mut cfg.task, cmd);
        Ok(cfg)
    }
}

fn merge_model(base: Option<cornergrowth::Spec>, c: &Common) -> CliResult<Option<cornergrowth::Spec>> {
    let alpha = c.alpha.as_deref().map(|s| parse_law("alpha", s)).transpose()?;
    let beta = c.beta.as_deref().map(|s| parse_law("beta", s)).transpose()?;
    let mut spec = match base {
        Some(s) => s,
        None => match (c.model, alpha.clone(), beta.clone()) {
            (Some(kind), Some(alpha), Some(beta)) => ModelSpec {
                kind,
                alpha,
                beta,
                seed: 0,
                boundary_z: None,
                allow_degenerate: false,
            },
            (None, None, None) if c.seed.is_none() && c.z.is_none() && !c.allow_degenerate => return Ok(None),
            _ => {
                return Err(CliError::Config(
                    "a model needs --model, --alpha and --beta (or a config model section)".into(),
                ))
            }
        },
    };
    set(&mut spec.kind, &c.model);
    set(&mut spec.alpha, &alpha);
    set(&mut spec.beta, &beta);
    set(&mut spec.seed, &c.seed);
    if c.z.is_some() {
        spec.boundary_z = c.z;
    }
    spec.allow_degenerate |= c.allow_degenerate;
    Ok(Some(spec.validated()?))
}

fn apply_task(task: &mut Task, cmd: &Command) {
    match (task, cmd) {
        (Task::Simulate(t), Command::Simulate { times, size, rays, replica, write_field, write_weights, .. }) => {
            set(&mut t.times, times);
            if size.is_some() {
                t.size = *size;
            }
            set(&mut t.rays, rays);
            set(&mut t.replica, replica);
            t.write_field |= write_field;
            t.write_weights |= write_weights;
        }
        (Task::Shape(t), Command::Shape { grid, .. }) => set(&mut t.grid, grid),
        (Task::Dist(t), Command::Dist { params, k_range, method, .. }) => {
            set(&mut t.params, params);
            set(&mut t.k_range, k_range);
            set(&mut t.method, method);
        }
        (Task::Fluct(t), Command::Fluct { ns, r, s_range, tail_n, tail_s, .. }) => {
            set(&mut t.ns, ns);
            set(&mut t.r, r);
            set(&mut t.s_range, s_range);
            set(&mut t.tail_n, tail_n);
            set(&mut t.tail_s, tail_s);
        }
        (Task::Tw(t), Command::Tw { s_range, method, .. }) => {
            set(&mut t.s_range, s_range);
            set(&mut t.method, method);
        }
        (Task::Trace(t), Command::Trace { m, n, direction, delta, .. }) => {
            set(&mut t.m, m);
            set(&mut t.n, n);
            set(&mut t.direction, direction);
            if delta.is_some() {
                t.delta = *delta;
            }
        }
        _ => unreachable!("task kind checked against the command"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_triple("-1,2,0.5").unwrap(), (-1.0, 2.0, 0.5));
        assert!(parse_triple("1,2").is_err());
        assert_eq!(parse_k_range("3,9").unwrap(), (3, 9));
        assert_eq!(parse_params("4,5").unwrap(), DistParams::Sampled { m: 4, n: 5 });
        assert_eq!(
            parse_params(r#"{"a":[0.5],"b":[0.5]}"#).unwrap(),
            DistParams::Explicit { a: vec![0.5], b: vec![0.5] }
        );
        assert_eq!(parse_shape_grid("level:7").unwrap(), ShapeGrid::LevelCurve(7));
        assert_eq!(parse_shape_grid("0.5,2").unwrap(), ShapeGrid::Ratios(vec![0.5, 2.0]));
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "cornergrowth",
            "tw",
            "--s-range",
            "0,1,0.5",
            "--method",
            "painleve",
            "--out",
            "x",
        ])
        .unwrap();
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
        match cfg.task {
            Task::Tw(t) => {
                assert_eq!(t.s_range, (0.0, 1.0, 0.5));
                assert_eq!(t.method, TwChoice::Painleve);
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.model.is_none());
    }

    #[test]
    fn partial_model_is_a_config_error() {
        let cli = Cli::try_parse_from(["cornergrowth", "shape", "--model", "geometric"]).unwrap();
        assert_eq!(cli.resolve().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn invalid_law_is_a_config_error() {
        let cli = Cli::try_parse_from([
            "cornergrowth",
            "shape",
            "--model",
            "geometric",
            "--alpha",
            r#"{"point":1.5}"#,
            "--beta",
            r#"{"point":0.5}"#,
        ])
        .unwrap();
        assert_eq!(cli.resolve().unwrap_err().exit_code(), 2);
    }
}
