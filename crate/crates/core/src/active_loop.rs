//! The sequential sampling loop: fit → derivative posterior → acquire →
//! query → append, for a fixed budget of queries.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionSpec};
use crate::gp::{GpState, PosteriorSlice, Standardizer};
use crate::kernel::{fit_hyperparams, FitOptions, KernelParams, SampleSet};
use crate::{DacdError, Point, Result};

/// Source of responses for grid indices.
pub trait Oracle {
    fn query(&mut self, index: usize) -> Result<f64>;
}

/// Reads responses off a fixed realization (one value per grid index).
#[derive(Clone, Debug)]
pub struct SeriesOracle {
    values: Vec<f64>,
}

impl SeriesOracle {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl Oracle for SeriesOracle {
    fn query(&mut self, index: usize) -> Result<f64> {
        self.values
            .get(index)
            .copied()
            .ok_or_else(|| DacdError::InvalidInput(format!("oracle index {index} out of range")))
    }
}

/// Evaluates a function at grid points and adds seeded Gaussian noise.
pub struct NoisyFunctionOracle<F> {
    f: F,
    grid: Vec<Point>,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
}

impl<F: Fn(&[f64]) -> f64> NoisyFunctionOracle<F> {
    pub fn new(f: F, grid: Vec<Point>, noise_std: f64, seed: u64) -> Result<Self> {
        let noise = Normal::new(0.0, noise_std)
            .map_err(|e| DacdError::InvalidInput(format!("noise std {noise_std}: {e}")))?;
        Ok(Self {
            f,
            grid,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl<F: Fn(&[f64]) -> f64> Oracle for NoisyFunctionOracle<F> {
    fn query(&mut self, index: usize) -> Result<f64> {
        let x = self
            .grid
            .get(index)
            .ok_or_else(|| DacdError::InvalidInput(format!("oracle index {index} out of range")))?;
        Ok((self.f)(x) + self.noise.sample(&mut self.rng))
    }
}

/// How the next query is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QueryStrategy {
    /// Maximize an acquisition function on the derivative posterior.
    Acquisition(AcquisitionSpec),
    /// Uniformly random unsampled index (baseline).
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub budget: usize,
    pub init_count: usize,
    /// Put two initial samples on the first and last grid index.
    pub boundary_init: bool,
    pub strategy: QueryStrategy,
    /// Refit hyperparameters every this many iterations.
    pub refit_every: usize,
    /// Fresh restarts per refit, in addition to the warm start.
    pub restarts: usize,
    pub seed: u64,
    /// Skip fitting and use these parameters (response units).
    pub fixed_params: Option<KernelParams>,
    /// Keep a posterior snapshot in the trace every this many iterations.
    pub snapshot_every: Option<usize>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            budget: 20,
            init_count: 8,
            boundary_init: true,
            strategy: QueryStrategy::Acquisition(AcquisitionSpec::ei(0.001)),
            refit_every: 1,
            restarts: 2,
            seed: 0,
            fixed_params: None,
            snapshot_every: None,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(DacdError::InvalidInput("budget must be >= 1".into()));
        }
        if self.boundary_init && self.init_count < 2 {
            return Err(DacdError::InvalidInput(
                "boundary initialisation needs init_count >= 2".into(),
            ));
        }
        if self.init_count == 0 {
            return Err(DacdError::InvalidInput("init_count must be >= 1".into()));
        }
        if self.refit_every == 0 || self.restarts == 0 {
            return Err(DacdError::InvalidInput(
                "refit_every and restarts must be >= 1".into(),
            ));
        }
        if let QueryStrategy::Acquisition(spec) = &self.strategy {
            spec.validate()?;
        }
        if let Some(p) = &self.fixed_params {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub index: usize,
    pub x: Point,
    pub response: f64,
    /// Kernel parameters in response units; absent for the uniform baseline.
    pub params: Option<KernelParams>,
    /// Hyperparameter fit or factorization failed and the previous
    /// parameters were reused.
    pub fallback: bool,
    pub acquisition_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snapshot: Option<PosteriorSlice>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    pub records: Vec<IterationRecord>,
}

impl LoopTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per line, one line per iteration.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| DacdError::Parse(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| DacdError::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(Self { records })
    }
}

#[derive(Clone, Debug)]
pub struct LoopOutcome {
    pub samples: SampleSet,
    /// Grid indices in query order, initial design first.
    pub sampled_indices: Vec<usize>,
    pub trace: LoopTrace,
    /// Posterior on the grid after the last query, in response units.
    pub posterior: PosteriorSlice,
    /// Parameters of the final model, in response units.
    pub params: KernelParams,
}

/// Initial design: first and last grid index plus seeded distinct uniform
/// draws (or only uniform draws without boundary initialisation).
pub fn init_design(grid_len: usize, cfg: &LoopConfig) -> Result<Vec<usize>> {
    if grid_len < cfg.init_count || grid_len == 0 {
        return Err(DacdError::GridTooSmall {
            grid: grid_len,
            needed: cfg.init_count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen = Vec::with_capacity(cfg.init_count);
    if cfg.boundary_init {
        chosen.push(0);
        if grid_len > 1 {
            chosen.push(grid_len - 1);
        }
    }
    while chosen.len() < cfg.init_count {
        let i = rng.random_range(0..grid_len);
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    Ok(chosen)
}

fn hyper_seed(seed: u64, iteration: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iteration as u64).wrapping_add(1)
}

struct Model {
    gp: GpState,
    standardizer: Standardizer,
    /// Standardized-unit parameters.
    params: KernelParams,
    fallback: bool,
}

fn build_model(
    data: &SampleSet,
    cfg: &LoopConfig,
    prev: Option<KernelParams>,
    iteration: usize,
    refit: bool,
) -> Result<Model> {
    let standardizer = Standardizer::from_data(data);
    let z = standardizer.apply(data);
    let mut fallback = false;

    let params = match (cfg.fixed_params, prev) {
        (Some(fixed), _) => fixed.rescaled(1.0 / standardizer.scale),
        (None, Some(p)) if !refit => p,
        (None, _) => {
            let opts = FitOptions {
                restarts: cfg.restarts,
                seed: hyper_seed(cfg.seed, iteration),
                warm_start: prev,
                ..Default::default()
            };
            match (fit_hyperparams(&z, &opts), prev) {
                (Ok(fit), _) => fit.params,
                (Err(e), Some(p)) => {
                    log::warn!(
                        "iteration {iteration}: hyperparameter fit failed ({e}); reusing previous"
                    );
                    fallback = true;
                    p
                }
                (Err(e), None) => return Err(e.at_iteration(iteration)),
            }
        }
    };

    let gp = match GpState::fit(&z, params) {
        Ok(gp) => gp,
        Err(e) => match prev.filter(|p| *p != params) {
            Some(p) => {
                log::warn!("iteration {iteration}: factorization failed ({e}); reusing previous");
                fallback = true;
                let gp = GpState::fit(&z, p).map_err(|e| e.at_iteration(iteration))?;
                return Ok(Model {
                    gp,
                    standardizer,
                    params: p,
                    fallback,
                });
            }
            None => return Err(e.at_iteration(iteration)),
        },
    };
    Ok(Model {
        gp,
        standardizer,
        params,
        fallback,
    })
}

/// Runs the loop; see [`run_dacd_observed`].
pub fn run_dacd(oracle: &mut dyn Oracle, grid: &[Point], cfg: &LoopConfig) -> Result<LoopOutcome> {
    run_dacd_observed(oracle, grid, cfg, &mut |_, _, _| {})
}

/// Runs exactly `cfg.budget` query iterations starting from the initial
/// design. `observer` sees the fitted model (on standardized targets) and
/// the response-unit posterior of every acquisition iteration.
pub fn run_dacd_observed(
    oracle: &mut dyn Oracle,
    grid: &[Point],
    cfg: &LoopConfig,
    observer: &mut dyn FnMut(usize, &GpState, &PosteriorSlice),
) -> Result<LoopOutcome> {
    cfg.validate()?;
    let init = init_design(grid.len(), cfg)?;
    if grid.len() < cfg.init_count + cfg.budget {
        return Err(DacdError::GridTooSmall {
            grid: grid.len(),
            needed: cfg.init_count + cfg.budget,
        });
    }

    let mut samples = SampleSet::default();
    let mut sampled = Vec::with_capacity(cfg.init_count + cfg.budget);
    for &i in &init {
        samples.push(grid[i].clone(), oracle.query(i)?)?;
        sampled.push(i);
    }

    // independent stream for the uniform baseline
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66_D1CE_5EED);
    let mut is_sampled = vec![false; grid.len()];
    sampled.iter().for_each(|&i| is_sampled[i] = true);

    let mut prev: Option<KernelParams> = None;
    let mut trace = LoopTrace::default();

    for iteration in 0..cfg.budget {
        let (next, params, fallback, acq_max, snapshot) = match cfg.strategy {
            QueryStrategy::Uniform => {
                let free: Vec<usize> = (0..grid.len()).filter(|&i| !is_sampled[i]).collect();
                if free.is_empty() {
                    return Err(DacdError::BudgetExhausted.at_iteration(iteration));
                }
                (
                    free[rng.random_range(0..free.len())],
                    None,
                    false,
                    None,
                    None,
                )
            }
            QueryStrategy::Acquisition(spec) => {
                let refit = iteration % cfg.refit_every == 0;
                let model = build_model(&samples, cfg, prev, iteration, refit)?;
                prev = Some(model.params);
                let slice = model.standardizer.restore(model.gp.posterior_slice(grid));
                observer(iteration, &model.gp, &slice);

                let inc = acquisition::incumbent(&slice, &sampled, spec.mode)?;
                let scores = acquisition::score(&slice, &spec, inc);
                let next = acquisition::argmax_excluding(&scores, &is_sampled)
                    .ok_or_else(|| DacdError::BudgetExhausted.at_iteration(iteration))?;
                let snapshot = cfg
                    .snapshot_every
                    .filter(|k| *k > 0 && iteration % k == 0)
                    .map(|_| slice.clone());
                (
                    next,
                    Some(model.params.rescaled(model.standardizer.scale)),
                    model.fallback,
                    Some(scores[next]),
                    snapshot,
                )
            }
        };

        let y = oracle.query(next).map_err(|e| e.at_iteration(iteration))?;
        samples
            .push(grid[next].clone(), y)
            .map_err(|e| e.at_iteration(iteration))?;
        sampled.push(next);
        is_sampled[next] = true;
        trace.records.push(IterationRecord {
            iteration,
            index: next,
            x: grid[next].clone(),
            response: y,
            params,
            fallback,
            acquisition_max: acq_max,
            snapshot,
        });
    }

    let final_model = build_model(&samples, cfg, prev, cfg.budget, true)?;
    let posterior = final_model
        .standardizer
        .restore(final_model.gp.posterior_slice(grid));
    Ok(LoopOutcome {
        samples,
        sampled_indices: sampled,
        trace,
        posterior,
        params: final_model.params.rescaled(final_model.standardizer.scale),
    })
}
