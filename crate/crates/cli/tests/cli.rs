use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn dacd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dacd"))
        .args(args)
        .env_remove("DACD_OUT")
        .output()
        .expect("spawn dacd")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_two_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&dacd(&[
            "simulate",
            "--scenario",
            "mjd_t_no",
            "--seed",
            "1",
            "--out",
            s(out),
        ]));
    }
    let series = lines(&a.join("series.csv"));
    assert_eq!(series[0], "t,value");
    assert_eq!(series.len(), 1001);
    assert_eq!(lines(&a.join("changepoints.csv")).len(), 2);
    for f in ["series.csv", "changepoints.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert!(a.join("manifest.json").exists());
}

#[test]
fn unknown_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dacd(&["simulate", "--scenario", "nope", "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn existing_results_need_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--scenario", "mjd_p_no", "--out", s(dir.path())];
    ok(&dacd(&args));
    let again = dacd(&args);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("--overwrite"));
    let mut forced = args.to_vec();
    forced.push("--overwrite");
    ok(&dacd(&forced));
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dacd"))
        .args(["simulate", "--scenario", "mcp", "--seed", "3"])
        .env("DACD_OUT", dir.path())
        .output()
        .unwrap();
    ok(&out);
    let series = dir.path().join("simulate-mcp-seed3").join("series.csv");
    assert_eq!(lines(&series).len(), 4001);
}

#[test]
fn run_scenario_then_export() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&dacd(&[
        "run",
        "--scenario",
        "mjd_t_inv",
        "--acq",
        "pi:0.075",
        "--budget",
        "20",
        "--seed",
        "7",
        "--out",
        s(&run),
    ]));
    assert_eq!(lines(&run.join("trace.jsonl")).len(), 20);
    assert_eq!(lines(&run.join("samples.csv")).len(), 29);
    let det: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("detection.json")).unwrap()).unwrap();
    assert_eq!(det["indices"].as_array().unwrap().len(), 1);
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("eval.json")).unwrap()).unwrap();
    assert!((0.0..=1.0).contains(&eval["f1"].as_f64().unwrap()));

    ok(&dacd(&["export-plots", s(&run)]));
    let plot = lines(&run.join("plots").join("plot_1d.csv"));
    assert_eq!(plot[0], "x,mean,lower95,upper95,dmean,dvar");
    assert_eq!(plot.len(), 1001);
    for row in &plot[1..] {
        let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(v.len(), 6);
        assert!(v[2] <= v[1] && v[1] <= v[3] && v[5] >= 0.0);
    }
}

#[test]
fn run_on_data_file_reports_k_separated_points() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("well_log.csv");
    let mut f = fs::File::create(&data).unwrap();
    writeln!(f, "value").unwrap();
    for i in 0..4050usize {
        let level = [
            1.1e5, 1.3e5, 1.2e5, 1.35e5, 1.15e5, 1.25e5, 1.05e5, 1.3e5, 1.2e5, 1.1e5,
        ][i * 10 / 4050];
        let wobble = ((i * 7919) % 101) as f64 * 30.0;
        writeln!(f, "{}", level + wobble).unwrap();
    }
    drop(f);
    let run = dir.path().join("run");
    ok(&dacd(&[
        "run",
        "--data",
        s(&data),
        "--acq",
        "ei:0.001",
        "--budget",
        "100",
        "--k",
        "8",
        "--out",
        s(&run),
    ]));
    let det: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("detection.json")).unwrap()).unwrap();
    let mut idx: Vec<u64> = det["indices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    idx.sort_unstable();
    assert_eq!(idx.len(), 8);
    assert!(idx.windows(2).all(|w| w[1] - w[0] >= 200), "{idx:?}");
    assert!(!run.join("eval.json").exists());
}

#[test]
fn malformed_acquisition_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["xyz:1", "ei", "pi:abc", "ucb:-1"] {
        let out = dacd(&[
            "run",
            "--scenario",
            "mjd_t_no",
            "--acq",
            bad,
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn surface_run_exports_grids() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&dacd(&[
        "run",
        "--scenario",
        "surface_2d",
        "--acq",
        "ucb:2",
        "--budget",
        "10",
        "--init",
        "40",
        "--k",
        "3",
        "--out",
        s(&run),
    ]));
    let slopes: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("slopes.json")).unwrap()).unwrap();
    assert_eq!(slopes.as_array().unwrap().len(), 3);
    let plots = dir.path().join("plots");
    ok(&dacd(&["export-plots", s(&run), "--out", s(&plots)]));
    let mean = lines(&plots.join("mean_grid.csv"));
    let norm = lines(&plots.join("dmean_norm_grid.csv"));
    assert_eq!(mean[0], "x1,x2,mean");
    assert_eq!(norm[0], "x1,x2,dmean_norm");
    assert_eq!(mean.len(), norm.len());
    assert!(mean.len() > 1000);
}

#[test]
fn export_needs_a_completed_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dacd(&["export-plots", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));
}

#[test]
fn smoke_bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    fs::write(
        &cfg,
        "scenarios = [\"mjd_t_inv\", \"mjd_p_no\"]\nmethods = [\"ei:0.001\", \"random\"]\nbase_seed = 5\n",
    )
    .unwrap();
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        ok(&dacd(&[
            "bench",
            "--config",
            s(&cfg),
            "--runs",
            "2",
            "--out",
            s(&out),
        ]));
        tables.push(fs::read(out.join("table.csv")).unwrap());
        let runs = lines(&out.join("runs.jsonl"));
        assert_eq!(runs.len(), 8);
        let wide = lines(&out.join("table_wide.csv"));
        assert_eq!(
            wide[0],
            "method,mjd_t_inv,mjd_t_inv_se,mjd_p_no,mjd_p_no_se"
        );
        assert_eq!(wide.len(), 3);
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn default_bench_has_nine_methods_by_seven_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    ok(&dacd(&["bench", "--runs", "1", "--out", s(dir.path())]));
    let wide = lines(&dir.path().join("table_wide.csv"));
    assert_eq!(wide.len(), 10);
    assert_eq!(wide[0].split(',').count(), 1 + 2 * 7);
    let cells: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table.json")).unwrap()).unwrap();
    assert_eq!(cells.as_array().unwrap().len(), 63);
}
