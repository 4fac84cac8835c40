//! Margin-based change-point scoring and the Monte-Carlo benchmark harness.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionSpec;
use crate::active_loop::{run_dacd, LoopConfig, QueryStrategy, SeriesOracle};
use crate::detect::{detect_on_grid, min_separation};
use crate::format::sig6;
use crate::simulate::{builtin_scenarios, ScenarioSpec};
use crate::{DacdError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub margin: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Greedy nearest-first one-to-one matching. Returns `(tp, fp, fn)`.
pub fn match_changepoints(predicted: &[f64], truth: &[f64], margin: f64) -> (usize, usize, usize) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = (p - t).abs();
            if d <= margin {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_t = vec![false; truth.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_t[j] {
            used_p[i] = true;
            used_t[j] = true;
            tp += 1;
        }
    }
    (tp, predicted.len() - tp, truth.len() - tp)
}

pub fn f1_score(predicted: &[f64], truth: &[f64], margin: f64) -> EvalReport {
    let (tp, fp, fn_) = match_changepoints(predicted, truth, margin);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalReport {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        margin,
    }
}

/// A benchmark row: the active learner with some acquisition function, or
/// uniform random sampling with the same budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Dacd(AcquisitionSpec),
    Random,
}

impl Method {
    pub fn strategy(&self) -> QueryStrategy {
        match self {
            Method::Dacd(spec) => QueryStrategy::Acquisition(*spec),
            Method::Random => QueryStrategy::Uniform,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Dacd(spec) => write!(f, "{spec}"),
            Method::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Method {
    type Err = DacdError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("random") {
            Ok(Method::Random)
        } else {
            s.parse().map(Method::Dacd)
        }
    }
}

impl TryFrom<String> for Method {
    type Error = DacdError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// The nine acquisition settings compared in the benchmark table.
pub fn default_methods() -> Vec<Method> {
    [
        AcquisitionSpec::ei(0.001),
        AcquisitionSpec::ei(0.1),
        AcquisitionSpec::ei(1.0),
        AcquisitionSpec::pi(0.075),
        AcquisitionSpec::pi(0.5),
        AcquisitionSpec::pi(1.0),
        AcquisitionSpec::ucb(2.0),
        AcquisitionSpec::ucb(4.0),
        AcquisitionSpec::ucb(8.0),
    ]
    .into_iter()
    .map(Method::Dacd)
    .collect()
}

fn default_scenario_names() -> Vec<String> {
    builtin_scenarios().into_iter().map(|s| s.name).collect()
}

fn default_budgets() -> BTreeMap<String, usize> {
    BTreeMap::from([("mcp".to_string(), 100)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub scenarios: Vec<String>,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub base_seed: u64,
    /// Margin in grid indices; `None` means 5% of the grid length.
    pub margin: Option<f64>,
    /// Filtered-derivative window A.
    pub window: usize,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopConfig,
    /// Per-scenario budget overrides.
    pub budgets: BTreeMap<String, usize>,
    /// Scenario definitions that add to or replace the built-in ones.
    pub scenario: BTreeMap<String, ScenarioSpec>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            scenarios: default_scenario_names(),
            methods: default_methods(),
            runs: 100,
            base_seed: 0,
            margin: None,
            window: 100,
            loop_cfg: LoopConfig::default(),
            budgets: default_budgets(),
            scenario: BTreeMap::new(),
        }
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| DacdError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(DacdError::InvalidInput("runs must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(DacdError::InvalidInput("window must be at least 1".into()));
        }
        if self.margin.is_some_and(|m| m.is_nan() || m <= 0.0) {
            return Err(DacdError::InvalidInput("margin must be positive".into()));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(DacdError::InvalidInput(
                "need at least one scenario and one method".into(),
            ));
        }
        for m in &self.methods {
            if let Method::Dacd(spec) = m {
                spec.validate()?;
            }
        }
        self.loop_cfg.validate()?;
        self.resolve_scenarios().map(|_| ())
    }

    pub fn resolve_scenarios(&self) -> Result<Vec<ScenarioSpec>> {
        self.scenarios
            .iter()
            .map(|name| match self.scenario.get(name) {
                Some(spec) => {
                    let mut spec = spec.clone();
                    spec.name = name.clone();
                    spec.validate()?;
                    Ok(spec)
                }
                None => crate::simulate::scenario(name),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub truth: Vec<usize>,
    pub predicted: Vec<usize>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub method: String,
    pub mean_f1: f64,
    pub std_err: f64,
    pub completed: usize,
    pub failed: usize,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub scenarios: Vec<String>,
    pub methods: Vec<String>,
    /// Row-major: method outer, scenario inner.
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
}

impl BenchmarkTable {
    pub fn cell(&self, method: &str, scenario: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.scenario == scenario)
    }

    /// Long format, one row per (method, scenario).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method,scenario,mean_f1,std_err,completed,failed,margin")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.method,
                c.scenario,
                sig6(c.mean_f1),
                sig6(c.std_err),
                c.completed,
                c.failed,
                sig6(c.margin)
            )?;
        }
        Ok(())
    }

    /// Methods as rows, scenarios as columns, mean F1 in each cell.
    pub fn write_wide_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "method")?;
        for s in &self.scenarios {
            write!(w, ",{s},{s}_se")?;
        }
        writeln!(w)?;
        for m in &self.methods {
            write!(w, "{m}")?;
            for s in &self.scenarios {
                let c = self.cell(m, s).expect("every cell is filled");
                write!(w, ",{},{}", sig6(c.mean_f1), sig6(c.std_err))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_runs_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.runs {
            serde_json::to_writer(&mut w, r).map_err(|e| DacdError::Parse(e.to_string()))?;
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Job<'a> {
    scenario: &'a ScenarioSpec,
    method: &'a Method,
    run: usize,
}

fn margin_for(cfg: &BenchmarkConfig, grid_len: usize) -> f64 {
    cfg.margin.unwrap_or(0.05 * grid_len as f64)
}

/// Simulate, run the active learner, detect on the posterior mean and score.
pub fn run_single(
    scenario: &ScenarioSpec,
    method: &Method,
    seed: u64,
    cfg: &BenchmarkConfig,
) -> Result<(Vec<usize>, Vec<usize>, EvalReport)> {
    let series = scenario.clone().with_seed(seed).simulate()?;
    let truth = series.changepoint_indices();
    let grid = series.grid();
    let mut loop_cfg = cfg.loop_cfg.clone();
    loop_cfg.seed = seed;
    loop_cfg.strategy = method.strategy();
    if let Some(&b) = cfg.budgets.get(&scenario.name) {
        loop_cfg.budget = b;
    }
    let mut oracle = SeriesOracle::new(series.values.clone());
    let outcome = run_dacd(&mut oracle, &grid, &loop_cfg)?;
    let k = truth.len().max(1);
    let index_grid: Vec<f64> = (0..grid.len()).map(|i| i as f64).collect();
    let det = detect_on_grid(&outcome.posterior.mean, &index_grid, cfg.window, k)?;
    if let Some(sep) = min_separation(&det.indices) {
        assert!(
            sep >= 2 * cfg.window,
            "detections {:?} closer than 2A = {}",
            det.indices,
            2 * cfg.window
        );
    }
    let pred: Vec<f64> = det.indices.iter().map(|&i| i as f64).collect();
    let tr: Vec<f64> = truth.iter().map(|&i| i as f64).collect();
    let report = f1_score(&pred, &tr, margin_for(cfg, grid.len()));
    Ok((truth, det.indices, report))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every (scenario, method, run) combination on a pool of `workers`
/// threads (`None`: one per logical core). Seeds are `base_seed + run`, so
/// all methods see the same realization within a run.
pub fn run_benchmark(cfg: &BenchmarkConfig, workers: Option<usize>) -> Result<BenchmarkTable> {
    cfg.validate()?;
    let scenarios = cfg.resolve_scenarios()?;
    let mut jobs = Vec::new();
    for method in &cfg.methods {
        for scenario in &scenarios {
            for run in 0..cfg.runs {
                jobs.push(Job {
                    scenario,
                    method,
                    run,
                });
            }
        }
    }

    let exec = |job: &Job| -> RunRecord {
        let seed = cfg.base_seed.wrapping_add(job.run as u64);
        let mut rec = RunRecord {
            scenario: job.scenario.name.clone(),
            method: job.method.to_string(),
            run: job.run,
            seed,
            truth: Vec::new(),
            predicted: Vec::new(),
            report: None,
            error: None,
        };
        match run_single(job.scenario, job.method, seed, cfg) {
            Ok((truth, predicted, report)) => {
                rec.truth = truth;
                rec.predicted = predicted;
                rec.report = Some(report);
            }
            Err(e) => {
                log::warn!("{} / {} run {}: {e}", rec.scenario, rec.method, job.run);
                rec.error = Some(e.to_string());
            }
        }
        rec
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| DacdError::InvalidInput(format!("thread pool: {e}")))?;
    // collect keeps job order whatever the completion order
    let records: Vec<RunRecord> = pool.install(|| jobs.par_iter().map(exec).collect());

    let mut cells = Vec::new();
    for (chunk, (method, scenario)) in records.chunks(cfg.runs).zip(
        cfg.methods
            .iter()
            .flat_map(|m| scenarios.iter().map(move |s| (m, s))),
    ) {
        let scores: Vec<f64> = chunk
            .iter()
            .filter_map(|r| r.report.as_ref().map(|x| x.f1))
            .collect();
        let failed = chunk.len() - scores.len();
        if failed * 5 > chunk.len() {
            return Err(DacdError::TooManyFailures {
                failed,
                total: chunk.len(),
            });
        }
        let (mean_f1, std_err) = mean_and_se(&scores);
        cells.push(CellSummary {
            scenario: scenario.name.clone(),
            method: method.to_string(),
            mean_f1,
            std_err,
            completed: scores.len(),
            failed,
            margin: margin_for(cfg, scenario.grid_len()),
        });
    }

    Ok(BenchmarkTable {
        scenarios: scenarios.iter().map(|s| s.name.clone()).collect(),
        methods: cfg.methods.iter().map(|m| m.to_string()).collect(),
        cells,
        runs: records,
    })
}
