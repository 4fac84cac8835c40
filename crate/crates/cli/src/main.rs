//! `dacd`: simulate scenarios, run the active learner, sweep benchmarks and
//! export plot data.

mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;

use dacd::active_loop::{run_dacd, LoopConfig, LoopOutcome, NoisyFunctionOracle, SeriesOracle};
use dacd::detect::{detect_on_grid, knn_slope_2d};
use dacd::eval::{f1_score, run_benchmark, BenchmarkConfig, Method};
use dacd::format::sig6;
use dacd::gp::PosteriorSlice;
use dacd::simulate::{self, ScenarioSpec};
use output::{default_root, read_manifest, OutputDir};

/// Scenario name selecting the 2-D test surface.
const SURFACE_2D: &str = "surface_2d";

#[derive(Parser)]
#[command(
    name = "dacd",
    version,
    about = "Active-learning change-point detection with Gaussian-process derivatives"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the series and its true change-points.
    Simulate(SimulateArgs),
    /// Run the active learner on a scenario or a data file, then detect.
    Run(RunArgs),
    /// Monte-Carlo F1 benchmark over scenarios and acquisition functions.
    Bench(BenchArgs),
    /// Turn a completed run directory into plot-ready delimited text.
    ExportPlots(ExportArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory [default: $DACD_OUT/<command>-... or ./dacd-out/...]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace existing result files.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    /// TOML file with extra `[scenario.<name>]` definitions.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in or configured scenario, or `surface_2d`.
    #[arg(long, required_unless_present = "data", conflicts_with = "data")]
    scenario: Option<String>,
    /// One- or two-column delimited data file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Acquisition `kind:param[:signed]` (ei, pi, ucb) or `random`.
    #[arg(long, default_value = "ei:0.001")]
    acq: Method,
    /// Active-learning iterations [default: 20, 100 with several change-points, 200 in 2-D]
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of change-points to report [default: true count, 1 for data, 5 in 2-D]
    #[arg(long)]
    k: Option<usize>,
    /// Filtered-derivative window A.
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Scoring margin in grid indices [default: 5% of the grid]
    #[arg(long)]
    margin: Option<f64>,
    /// Initial design size [default: 8, 100 in 2-D]
    #[arg(long)]
    init: Option<usize>,
    /// Refit hyperparameters every n iterations [default: 1, 20 in 2-D]
    #[arg(long)]
    refit_every: Option<usize>,
    #[arg(long, default_value_t = 2)]
    restarts: usize,
    /// Store a posterior snapshot in the trace every n iterations.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Neighbours used for local slopes in 2-D.
    #[arg(long, default_value_t = 10)]
    neighbors: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark TOML; defaults to all scenarios and the nine acquisition settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: logical cores]
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// Directory written by `dacd run`.
    run_dir: PathBuf,
    /// Where to put plot files [default: <run_dir>/plots]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    overwrite: bool,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ExportPlots(a) => cmd_export_plots(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn resolve_scenario(name: &str, config: Option<&Path>) -> Result<ScenarioSpec> {
    if let Some(path) = config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some(spec) = simulate::parse_scenarios(&text)?
            .into_iter()
            .find(|s| s.name == name)
        {
            return Ok(spec);
        }
    }
    Ok(simulate::scenario(name)?)
}

fn out_dir(args: &OutArgs, default_name: String, planned: &[&str]) -> Result<OutputDir> {
    let root = args
        .out
        .clone()
        .unwrap_or_else(|| default_root().join(default_name));
    OutputDir::create(root, args.overwrite, planned)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let spec = resolve_scenario(&a.scenario, a.config.as_deref())?.with_seed(a.seed);
    let series = spec.simulate()?;
    let mut out = out_dir(
        &a.out,
        format!("simulate-{}-seed{}", a.scenario, a.seed),
        &["series.csv", "changepoints.csv"],
    )?;
    out.write_with("series.csv", |w| Ok(series.write_csv(w)?))?;
    out.write_with(
        "changepoints.csv",
        |w| Ok(series.write_changepoints_csv(w)?),
    )?;
    let dir = out.finish(
        "simulate",
        a.config.as_deref(),
        Some(a.seed),
        json!({ "scenario": spec }),
    )?;
    println!(
        "{} points, {} change-points -> {}",
        series.values.len(),
        series.true_changepoints.len(),
        dir.display()
    );
    Ok(())
}

const RUN_FILES: &[&str] = &[
    "trace.jsonl",
    "posterior.json",
    "posterior.csv",
    "samples.csv",
    "detection.json",
    "series.csv",
    "changepoints.csv",
    "eval.json",
    "slopes.json",
];

fn loop_config(
    a: &RunArgs,
    budget: usize,
    init: usize,
    boundary: bool,
    refit: usize,
) -> LoopConfig {
    LoopConfig {
        budget: a.budget.unwrap_or(budget),
        init_count: a.init.unwrap_or(init),
        boundary_init: boundary,
        strategy: a.acq.strategy(),
        refit_every: a.refit_every.unwrap_or(refit),
        restarts: a.restarts,
        seed: a.seed,
        fixed_params: None,
        snapshot_every: a.snapshot_every,
    }
}

fn write_loop_outputs(out: &mut OutputDir, outcome: &LoopOutcome) -> Result<()> {
    out.write_with("trace.jsonl", |w| Ok(outcome.trace.write_jsonl(w)?))?;
    out.write_json("posterior.json", &outcome.posterior)?;
    let post = &outcome.posterior;
    out.write_with("posterior.csv", |w| {
        let dim = post.dim;
        let coords: Vec<String> = (1..=dim)
            .map(|d| {
                if dim == 1 {
                    "x".into()
                } else {
                    format!("x{d}")
                }
            })
            .collect();
        let dcols: Vec<String> = (1..=dim)
            .flat_map(|d| {
                if dim == 1 {
                    ["dmean".into(), "dvar".into()]
                } else {
                    [format!("dmean{d}"), format!("dvar{d}")]
                }
            })
            .collect();
        writeln!(w, "{},mean,var,{}", coords.join(","), dcols.join(","))?;
        for i in 0..post.len() {
            let mut row: Vec<String> = post.grid[i].iter().map(|v| sig6(*v)).collect();
            row.push(sig6(post.mean[i]));
            row.push(sig6(post.var[i]));
            for (m, v) in post.dmean_at(i).iter().zip(post.dvar_at(i)) {
                row.push(sig6(*m));
                row.push(sig6(*v));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    out.write_with("samples.csv", |w| {
        writeln!(
            w,
            "order,index,{},y",
            if post.dim == 1 {
                "x".to_string()
            } else {
                "x1,x2".to_string()
            }
        )?;
        for (order, (&idx, (x, y))) in outcome
            .sampled_indices
            .iter()
            .zip(
                outcome
                    .samples
                    .inputs()
                    .iter()
                    .zip(outcome.samples.targets()),
            )
            .enumerate()
        {
            let xs: Vec<String> = x.iter().map(|v| sig6(*v)).collect();
            writeln!(w, "{order},{idx},{},{}", xs.join(","), sig6(*y))?;
        }
        Ok(())
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    if a.scenario.as_deref() == Some(SURFACE_2D) {
        return run_surface(a);
    }
    let (label, grid, values, truth) = match (&a.scenario, &a.data) {
        (Some(name), _) => {
            let series = resolve_scenario(name, a.config.as_deref())?
                .with_seed(a.seed)
                .simulate()?;
            (
                name.clone(),
                series.grid(),
                series.values.clone(),
                Some(series),
            )
        }
        (None, Some(path)) => {
            let data = simulate::load_welllog(path)?;
            let stem = path
                .file_stem()
                .map_or("data".into(), |s| s.to_string_lossy().into_owned());
            (stem, data.inputs().to_vec(), data.targets().to_vec(), None)
        }
        (None, None) => bail!("either --scenario or --data is required"),
    };
    let n_true = truth
        .as_ref()
        .map_or(1, |s| s.true_changepoints.len().max(1));
    let k = a.k.unwrap_or(n_true);
    let cfg = loop_config(&a, if n_true > 1 { 100 } else { 20 }, 8, true, 1);
    cfg.validate()?;

    let mut out = out_dir(
        &a.out,
        format!("run-{label}-{}-seed{}", a.acq, a.seed),
        RUN_FILES,
    )?;
    let outcome = run_dacd(&mut SeriesOracle::new(values), &grid, &cfg)?;
    let xs: Vec<f64> = grid.iter().map(|p| p[0]).collect();
    let det = detect_on_grid(&outcome.posterior.mean, &xs, a.window, k)?;

    write_loop_outputs(&mut out, &outcome)?;
    out.write_with("detection.json", |w| Ok(det.write_json(w)?))?;
    let mut eval = None;
    if let Some(series) = &truth {
        out.write_with("series.csv", |w| Ok(series.write_csv(w)?))?;
        out.write_with(
            "changepoints.csv",
            |w| Ok(series.write_changepoints_csv(w)?),
        )?;
        let margin = a.margin.unwrap_or(0.05 * grid.len() as f64);
        let pred: Vec<f64> = det.indices.iter().map(|&i| i as f64).collect();
        let tr: Vec<f64> = series
            .changepoint_indices()
            .iter()
            .map(|&i| i as f64)
            .collect();
        let report = f1_score(&pred, &tr, margin);
        out.write_json("eval.json", &report)?;
        eval = Some(report);
    }
    let params = json!({
        "scenario": a.scenario,
        "data": a.data.as_ref().map(|p| p.display().to_string()),
        "acquisition": a.acq.to_string(),
        "loop": cfg,
        "window": a.window,
        "k": k,
    });
    let dir = out.finish("run", a.config.as_deref(), Some(a.seed), params)?;

    let locs: Vec<String> = det.locations.iter().map(|v| sig6(*v)).collect();
    println!("change-points at [{}]", locs.join(", "));
    if let Some(r) = eval {
        println!(
            "F1 {} (precision {}, recall {}, margin {})",
            sig6(r.f1),
            sig6(r.precision),
            sig6(r.recall),
            sig6(r.margin)
        );
    }
    println!("results in {}", dir.display());
    Ok(())
}

fn run_surface(a: RunArgs) -> Result<()> {
    let grid = simulate::candidate_grid_2d();
    let cfg = loop_config(&a, 200, 100, false, 20);
    cfg.validate()?;
    let k = a.k.unwrap_or(5);
    let mut out = out_dir(
        &a.out,
        format!("run-{SURFACE_2D}-{}-seed{}", a.acq, a.seed),
        RUN_FILES,
    )?;
    let mut oracle = NoisyFunctionOracle::new(
        |x: &[f64]| simulate::test_function_2d(x[0], x[1]),
        grid.clone(),
        simulate::TEST_2D_NOISE_STD,
        a.seed,
    )?;
    let outcome = run_dacd(&mut oracle, &grid, &cfg)?;
    let slopes = knn_slope_2d(&outcome.samples, a.neighbors, k)?;
    write_loop_outputs(&mut out, &outcome)?;
    out.write_json("slopes.json", &slopes)?;
    let params = json!({
        "scenario": SURFACE_2D,
        "acquisition": a.acq.to_string(),
        "loop": cfg,
        "neighbors": a.neighbors,
        "k": k,
    });
    let dir = out.finish("run", None, Some(a.seed), params)?;
    for s in &slopes {
        println!(
            "slope {} at ({}, {})",
            sig6(s.slope),
            sig6(s.x[0]),
            sig6(s.x[1])
        );
    }
    println!("results in {}", dir.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            BenchmarkConfig::from_toml(&text)?
        }
        None => BenchmarkConfig::default(),
    };
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    let files = ["table.csv", "table_wide.csv", "table.json", "runs.jsonl"];
    let mut out = out_dir(
        &a.out,
        format!("bench-seed{}-runs{}", cfg.base_seed, cfg.runs),
        &files,
    )?;
    let table = run_benchmark(&cfg, a.workers)?;
    out.write_with("table.csv", |w| Ok(table.write_csv(w)?))?;
    out.write_with("table_wide.csv", |w| Ok(table.write_wide_csv(w)?))?;
    out.write_json("table.json", &table.cells)?;
    out.write_with("runs.jsonl", |w| Ok(table.write_runs_jsonl(w)?))?;
    let dir = out.finish(
        "bench",
        a.config.as_deref(),
        Some(cfg.base_seed),
        json!({ "benchmark": cfg }),
    )?;

    let mut stdout = std::io::stdout().lock();
    table.write_wide_csv(&mut stdout)?;
    writeln!(stdout, "results in {}", dir.display())?;
    Ok(())
}

fn cmd_export_plots(a: ExportArgs) -> Result<()> {
    let manifest = read_manifest(&a.run_dir)?;
    let path = a.run_dir.join("posterior.json");
    if manifest.command != "run" || !path.exists() {
        bail!(
            "{} has no posterior (not a `dacd run` directory)",
            a.run_dir.display()
        );
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let post: PosteriorSlice =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let root = a.out.clone().unwrap_or_else(|| a.run_dir.join("plots"));

    match post.dim {
        1 => {
            let mut out = OutputDir::create(root, a.overwrite, &["plot_1d.csv"])?;
            out.write_with("plot_1d.csv", |w| {
                writeln!(w, "x,mean,lower95,upper95,dmean,dvar")?;
                for i in 0..post.len() {
                    let half = 1.96 * post.var[i].sqrt();
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        sig6(post.grid[i][0]),
                        sig6(post.mean[i]),
                        sig6(post.mean[i] - half),
                        sig6(post.mean[i] + half),
                        sig6(post.dmean[i]),
                        sig6(post.dvar[i])
                    )?;
                }
                Ok(())
            })?;
            let dir = out.finish(
                "export-plots",
                None,
                manifest.seed,
                json!({ "run_dir": a.run_dir }),
            )?;
            println!("plot data in {}", dir.display());
        }
        2 => {
            let files = ["mean_grid.csv", "dmean_norm_grid.csv"];
            let mut out = OutputDir::create(root, a.overwrite, &files)?;
            out.write_with("mean_grid.csv", |w| {
                writeln!(w, "x1,x2,mean")?;
                for i in 0..post.len() {
                    let p = &post.grid[i];
                    writeln!(w, "{},{},{}", sig6(p[0]), sig6(p[1]), sig6(post.mean[i]))?;
                }
                Ok(())
            })?;
            out.write_with("dmean_norm_grid.csv", |w| {
                writeln!(w, "x1,x2,dmean_norm")?;
                for i in 0..post.len() {
                    let p = &post.grid[i];
                    let norm = post.dmean_at(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                    writeln!(w, "{},{},{}", sig6(p[0]), sig6(p[1]), sig6(norm))?;
                }
                Ok(())
            })?;
            let dir = out.finish(
                "export-plots",
                None,
                manifest.seed,
                json!({ "run_dir": a.run_dir }),
            )?;
            println!("plot data in {}", dir.display());
        }
        d => bail!("cannot export {d}-dimensional posterior"),
    }
    Ok(())
}
