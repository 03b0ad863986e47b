use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_cornergrowth");
const UNIFORM: &str = r#"{"uniform":[0.2,0.6]}"#;
const EXP_LAW: &str = r#"{"uniform":[0.5,1.0]}"#;

fn run(args: &[&str], out: &Path) -> Output {
    run_env(args, out, &[])
}

fn run_env(args: &[&str], out: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--out").arg(out).env_remove("CORNERGROWTH_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn model(kind: &str) -> Vec<&'static str> {
    let law = if kind == "geometric" { UNIFORM } else { EXP_LAW };
    let kind = if kind == "geometric" { "geometric" } else { "exponential" };
    vec!["--model", kind, "--alpha", law, "--beta", law, "--seed", "11"]
}

fn with<'a>(sub: &'a str, kind: &str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![sub];
    v.extend(model(kind));
    v.extend_from_slice(rest);
    v
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn header(dir: &Path, file: &str) -> String {
    let text = fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
    text.lines().next().unwrap_or_default().to_string()
}

fn rows(dir: &Path, file: &str) -> usize {
    fs::read_to_string(dir.join(file)).unwrap().lines().count() - 1
}

#[test]
fn simulate_writes_every_format_for_both_models() {
    for kind in ["exponential", "geometric"] {
        let tmp = TempDir::new().unwrap();
        let args = with("simulate", kind, &["--size", "48", "--times", "8,16", "--rays", "5", "--format", "csv,svg,json"]);
        ok(&run(&args, tmp.path()));
        let d = tmp.path();
        assert_eq!(header(d, "boundary.csv"), "t,vertex_index,x,y");
        assert_eq!(header(d, "level_curve.csv"), "s,t");
        assert_eq!(header(d, "rays.csv"), "t,theta,r_sim,r_level,rel_err");
        assert_eq!(rows(d, "rays.csv"), 10);
        assert!(fs::read_to_string(d.join("simulate.svg")).unwrap().starts_with("<svg"));
        let json: serde_json::Value = serde_json::from_slice(&fs::read(d.join("simulate.json")).unwrap()).unwrap();
        assert_eq!(json["size"], 48);
        assert!(d.join("resolved_config.json").exists());
    }
}

#[test]
fn simulate_can_dump_weights_and_field() {
    let tmp = TempDir::new().unwrap();
    let args = with("simulate", "geometric", &["--size", "6", "--times", "3", "--write-weights", "--write-field"]);
    ok(&run(&args, tmp.path()));
    assert_eq!(header(tmp.path(), "weights.csv"), "i,j,w");
    assert_eq!(header(tmp.path(), "field.csv"), "i,j,G");
    assert_eq!(rows(tmp.path(), "weights.csv"), 36);
}

#[test]
fn shape_for_both_models() {
    for kind in ["exponential", "geometric"] {
        let tmp = TempDir::new().unwrap();
        ok(&run(&with("shape", kind, &["--grid", "0.25,1,4"]), tmp.path()));
        assert_eq!(header(tmp.path(), "shape.csv"), "s,t,g,zeta,regime");
        assert_eq!(rows(tmp.path(), "shape.csv"), 3);
    }
}

#[test]
fn dist_methods_agree() {
    let tmp = TempDir::new().unwrap();
    let mut cdfs = Vec::new();
    for method in ["series", "det"] {
        let out = tmp.path().join(method);
        ok(&run(&with("dist", "geometric", &["--params", "5,5", "--k-range", "0,12", "--method", method]), &out));
        assert_eq!(header(&out, "dist.csv"), "k,cdf,method,est_error");
        let mut rdr = csv::Reader::from_path(out.join("dist.csv")).unwrap();
        let col: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(col.len(), 13);
        cdfs.push(col);
    }
    for (u, v) in cdfs[0].iter().zip(&cdfs[1]) {
        assert!((u - v).abs() < 1e-9, "{u} vs {v}");
    }
}

#[test]
fn dist_accepts_explicit_parameters() {
    let tmp = TempDir::new().unwrap();
    let params = r#"{"a":[0.5],"b":[0.7]}"#;
    ok(&run(&["dist", "--params", params, "--k-range", "0,3"], tmp.path()));
    let mut rdr = csv::Reader::from_path(tmp.path().join("dist.csv")).unwrap();
    for (k, r) in rdr.records().enumerate() {
        let cdf: f64 = r.unwrap()[1].parse().unwrap();
        assert!((cdf - (1.0 - 0.35f64.powi(k as i32 + 1))).abs() < 1e-12);
    }
}

#[test]
fn fluct_tw_and_trace_smoke() {
    let tmp = TempDir::new().unwrap();
    let f = tmp.path().join("fluct");
    ok(&run(&with("fluct", "geometric", &["--ns", "8,16", "--tail-n", "8", "--replicas", "200"]), &f));
    assert_eq!(header(&f, "fluct.csv"), "n,gamma,sigma,s,k,cdf,f_gue,abs_diff");
    assert_eq!(header(&f, "fluct_summary.csv"), "n,m,gamma,sigma,method,sup_distance");
    assert_eq!(header(&f, "tail.csv"), "s,threshold,count,log_p,x");

    let t = tmp.path().join("tw");
    ok(&run(&["tw", "--s-range=-3,1,1"], &t));
    assert_eq!(header(&t, "tw.csv"), "s,F,method,est_error");
    assert_eq!(rows(&t, "tw.csv"), 10);

    let c = tmp.path().join("trace");
    ok(&run(&with("trace", "geometric", &["--m", "6", "--n", "6", "--format", "csv,json,svg"]), &c));
    assert_eq!(header(&c, "trace.csv"), "curve,t,re,im,u,v");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(c.join("trace.json")).unwrap()).unwrap();
    assert_eq!(json["curves"].as_array().unwrap().len(), 2);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "resolved_config.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let args = with("simulate", "exponential", &["--size", "40", "--times", "10", "--format", "csv,svg,json"]);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&run_env(&args, &a, &[("CORNERGROWTH_THREADS", "1")]));
    ok(&run_env(&args, &b, &[("CORNERGROWTH_THREADS", "1")]));
    ok(&run_env(&args, &c, &[("CORNERGROWTH_THREADS", "4")]));
    assert_eq!(files(&a), files(&b));
    assert_eq!(files(&a), files(&c));

    let mc = with("dist", "geometric", &["--params", "4,4", "--method", "mc", "--replicas", "500"]);
    let (d, e) = (tmp.path().join("d"), tmp.path().join("e"));
    ok(&run_env(&mc, &d, &[("CORNERGROWTH_THREADS", "1")]));
    ok(&run_env(&mc, &e, &[("CORNERGROWTH_THREADS", "3")]));
    assert_eq!(files(&d), files(&e));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    ok(&run(&with("dist", "geometric", &["--params", "3,4", "--k-range", "2,9"]), &first));
    let cfg = first.join("resolved_config.json");
    let second = tmp.path().join("second");
    ok(&run(&["dist", "--config", cfg.to_str().unwrap()], &second));
    assert_eq!(files(&first), files(&second));
    let a: serde_json::Value = serde_json::from_slice(&fs::read(&cfg).unwrap()).unwrap();
    let mut b: serde_json::Value = serde_json::from_slice(&fs::read(second.join("resolved_config.json")).unwrap()).unwrap();
    b["output"]["dir"] = a["output"]["dir"].clone();
    assert_eq!(a, b);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"task":{"tw":{"s_range":[-2,0,1],"method":"fredholm"}}}"#).unwrap();
    let out = tmp.path().join("o");
    ok(&run(&["tw", "--config", cfg.to_str().unwrap(), "--s-range=-1,0,1"], &out));
    assert_eq!(rows(&out, "tw.csv"), 2);
}

#[test]
fn malformed_config_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        r#"{"task":{"tw":{"bogus":1}}}"#,
        r#"{"task":"#,
        r#"{"task":{"shape":{}}}"#,
        r#"{"model":{"kind":"geometric","alpha":{"uniform":[0.2,1.4]},"beta":{"point":0.3}},"task":{"shape":{}}}"#,
    ];
    for (i, doc) in cases.iter().enumerate() {
        let cfg = tmp.path().join(format!("c{i}.json"));
        fs::write(&cfg, doc).unwrap();
        let sub = if i == 0 || i == 1 { "tw" } else { "shape" };
        let o = run(&[sub, "--config", cfg.to_str().unwrap()], &tmp.path().join("o"));
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("cornergrowth: "), "case {i}");
    }
}

#[test]
fn bad_flags_and_environment_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["dist"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));
    let o = run_env(&["tw"], tmp.path(), &[("CORNERGROWTH_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&with("shape", "geometric", &["--alpha", "{\"point\":1.5}"]), tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_three() {
    // a long rectangle defeats the circle contour's cancellation budget
    let tmp = TempDir::new().unwrap();
    let o = run(&with("dist", "geometric", &["--params", "128,32", "--k-range", "20,21"]), tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
