//! The Monte Carlo loop: sample predictors, sample an outcome, run
//! inference, repeated `s` times in parallel, plus grids of such runs over
//! outcome models and sample sizes.

pub mod streams;
mod summary;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{OutcomeModel, PredictorModel};
use crate::inference::{CritResult, InferenceModel};
use crate::snr::{estimate_snr, SnrError, SnrEstimate};
use streams::{stream, Purpose};

pub use summary::{power_summary, How, PowerRow, SummaryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorHandling {
    /// Drop failed iterations; only their count is kept.
    #[default]
    Remove,
    /// Keep error records next to the successful iterations.
    Pass,
    /// Abort on the lowest-indexed failing iteration.
    Stop,
}

impl FromStr for ErrorHandling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remove" => Ok(ErrorHandling::Remove),
            "pass" => Ok(ErrorHandling::Pass),
            "stop" => Ok(ErrorHandling::Stop),
            other => Err(format!("unknown error handling `{other}` (expected remove, pass or stop)")),
        }
    }
}

impl fmt::Display for ErrorHandling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorHandling::Remove => "remove",
            ErrorHandling::Pass => "pass",
            ErrorHandling::Stop => "stop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Predictors,
    Outcome,
    Inference,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Predictors => "predictor sampling",
            Stage::Outcome => "outcome sampling",
            Stage::Inference => "inference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationError {
    pub iteration: usize,
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub iteration: usize,
    pub criteria: CritResult,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("SNR estimation for outcome model {ymod}: {source}")]
    Snr {
        ymod: usize,
        #[source]
        source: SnrError,
    },
    #[error("cell {cell}, iteration {}: {} failed: {}", .error.iteration, .error.stage, .error.message)]
    Stopped { cell: usize, error: IterationError },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Run settings shared by every cell of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Monte Carlo iterations per cell.
    pub s: usize,
    /// Predictor draws for the SNR estimate.
    pub snr_iter: usize,
    /// Bootstrap replicates for the SNR standard error.
    pub snr_boot: usize,
    pub cores: usize,
    pub errorhandling: ErrorHandling,
    pub seed: u64,
    /// Report progress on standard error.
    #[serde(skip)]
    pub progress: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            s: 100,
            snr_iter: 10_000,
            snr_boot: 100,
            cores: 1,
            errorhandling: ErrorHandling::Remove,
            seed: 1,
            progress: false,
        }
    }
}

/// One cell of Monte Carlo output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub inference: String,
    pub outcome: String,
    pub family: String,
    pub predictors: String,
    pub s: usize,
    pub n: usize,
    pub seed: u64,
    pub cell: usize,
    pub ymod_index: usize,
    pub n_index: usize,
    pub errorhandling: ErrorHandling,
    pub snr: SnrEstimate,
    /// Successful iterations in index order.
    pub results: Vec<Iteration>,
    /// Failed iterations; populated under `pass` only.
    pub errors: Vec<IterationError>,
    pub n_errors: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SimResult {
    pub fn successes(&self) -> usize {
        self.results.len()
    }
}

impl AsRef<[SimResult]> for SimResult {
    fn as_ref(&self) -> &[SimResult] {
        std::slice::from_ref(self)
    }
}

/// Grid of results over outcome models × sample sizes, n-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub n_values: Vec<usize>,
    pub outcomes: Vec<String>,
    pub snr: Vec<SnrEstimate>,
    pub cells: Vec<SimResult>,
}

impl CurveResult {
    pub fn cell(&self, n_index: usize, ymod_index: usize) -> &SimResult {
        &self.cells[n_index * self.outcomes.len() + ymod_index]
    }
}

impl AsRef<[SimResult]> for CurveResult {
    fn as_ref(&self) -> &[SimResult] {
        &self.cells
    }
}

fn validate(config: &SimConfig, n_values: &[usize], ymods: usize) -> Result<(), EngineError> {
    let bad = |m: &str| Err(EngineError::Config(m.into()));
    if config.s < 1 {
        return bad("s must be at least 1");
    }
    if config.cores < 1 {
        return bad("cores must be at least 1");
    }
    if config.snr_iter < 2 || config.snr_boot < 1 {
        return bad("snr_iter must be at least 2 and snr_boot at least 1");
    }
    if n_values.is_empty() || ymods == 0 {
        return bad("need at least one sample size and one outcome model");
    }
    if let Some(n) = n_values.iter().find(|n| **n < 2) {
        return bad(&format!("sample size {n} is below 2"));
    }
    Ok(())
}

fn snr_for(
    xmod: &PredictorModel,
    ymod: &OutcomeModel,
    ymod_index: usize,
    config: &SimConfig,
) -> Result<SnrEstimate, EngineError> {
    let mut rng = stream(config.seed, ymod_index as u64, 0, Purpose::Snr);
    estimate_snr(xmod, ymod, config.snr_iter, config.snr_boot, &mut rng).map_err(|source| EngineError::Snr {
        ymod: ymod_index,
        source,
    })
}

fn run_iteration(
    xmod: &PredictorModel,
    ymod: &OutcomeModel,
    imod: &InferenceModel,
    n: usize,
    seed: u64,
    cell: usize,
    i: usize,
) -> Result<CritResult, IterationError> {
    let mut rng = stream(seed, cell as u64, i as u64, Purpose::Iteration);
    let fail = |stage: Stage, e: &dyn fmt::Display| IterationError {
        iteration: i,
        stage,
        message: e.to_string(),
    };
    let x = xmod
        .sample_predictors(n, &mut rng)
        .map_err(|e| fail(Stage::Predictors, &e))?;
    let y = ymod.sample_outcome(&x, &mut rng).map_err(|e| fail(Stage::Outcome, &e))?;
    imod.run(&x, &y).map_err(|e| fail(Stage::Inference, &e))
}

struct Cell<'a> {
    ymod: &'a OutcomeModel,
    ymod_index: usize,
    n: usize,
    n_index: usize,
    cell: usize,
    snr: SnrEstimate,
}

fn run_cell(
    pool: &rayon::ThreadPool,
    xmod: &PredictorModel,
    imod: &InferenceModel,
    c: &Cell,
    config: &SimConfig,
) -> Result<SimResult, EngineError> {
    let start = Instant::now();
    let s = config.s;
    let first_error = AtomicUsize::new(usize::MAX);
    let done = AtomicUsize::new(0);
    let step = (s / 10).max(1);
    let stop = config.errorhandling == ErrorHandling::Stop;
    let outcomes: Vec<Option<Result<CritResult, IterationError>>> = pool.install(|| {
        (0..s)
            .into_par_iter()
            .map(|i| {
                // Iterations past a known failure are skipped under `stop`;
                // every lower index still runs, so the reported failure is
                // the lowest-indexed one regardless of scheduling.
                if stop && i > first_error.load(Ordering::Relaxed) {
                    return None;
                }
                let out = run_iteration(xmod, c.ymod, imod, c.n, config.seed, c.cell, i);
                if stop && out.is_err() {
                    first_error.fetch_min(i, Ordering::Relaxed);
                }
                if config.progress {
                    let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if k.is_multiple_of(step) || k == s {
                        eprintln!("[cell {}] n = {}: {k}/{s} iterations", c.cell, c.n);
                    }
                }
                Some(out)
            })
            .collect()
    });
    let mut results = Vec::with_capacity(s);
    let mut errors = Vec::new();
    for (iteration, out) in outcomes.into_iter().enumerate() {
        match out {
            None => {}
            Some(Ok(criteria)) => results.push(Iteration { iteration, criteria }),
            Some(Err(e)) if stop => return Err(EngineError::Stopped { cell: c.cell, error: e }),
            Some(Err(e)) => errors.push(e),
        }
    }
    let n_errors = errors.len();
    if config.errorhandling == ErrorHandling::Remove {
        errors.clear();
    }
    Ok(SimResult {
        inference: imod.name().to_string(),
        outcome: c.ymod.label(),
        family: c.ymod.family().to_string(),
        predictors: xmod.method_name().to_string(),
        s,
        n: c.n,
        seed: config.seed,
        cell: c.cell,
        ymod_index: c.ymod_index,
        n_index: c.n_index,
        errorhandling: config.errorhandling,
        snr: c.snr,
        results,
        errors,
        n_errors,
        elapsed: start.elapsed(),
    })
}

fn pool(cores: usize) -> Result<rayon::ThreadPool, EngineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cores)
        .build()
        .map_err(|e| EngineError::Pool(e.to_string()))
}

/// Power simulation for one outcome model at one sample size.
pub fn sim_power(
    xmod: &PredictorModel,
    ymod: &OutcomeModel,
    imod: &InferenceModel,
    n: usize,
    config: &SimConfig,
) -> Result<SimResult, EngineError> {
    validate(config, &[n], 1)?;
    let snr = snr_for(xmod, ymod, 0, config)?;
    let pool = pool(config.cores)?;
    run_cell(
        &pool,
        xmod,
        imod,
        &Cell {
            ymod,
            ymod_index: 0,
            n,
            n_index: 0,
            cell: 0,
            snr,
        },
        config,
    )
}

/// Power simulations over every (sample size, outcome model) pair. SNR is
/// estimated once per outcome model.
pub fn sim_curve(
    xmod: &PredictorModel,
    ymods: &[OutcomeModel],
    imod: &InferenceModel,
    n_values: &[usize],
    config: &SimConfig,
) -> Result<CurveResult, EngineError> {
    validate(config, n_values, ymods.len())?;
    let snr = ymods
        .iter()
        .enumerate()
        .map(|(j, y)| snr_for(xmod, y, j, config))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = pool(config.cores)?;
    let mut cells = Vec::with_capacity(n_values.len() * ymods.len());
    for (ni, &n) in n_values.iter().enumerate() {
        for (yi, ymod) in ymods.iter().enumerate() {
            let cell = Cell {
                ymod,
                ymod_index: yi,
                n,
                n_index: ni,
                cell: ni * ymods.len() + yi,
                snr: snr[yi],
            };
            cells.push(run_cell(&pool, xmod, imod, &cell, config)?);
        }
    }
    Ok(CurveResult {
        n_values: n_values.to_vec(),
        outcomes: ymods.iter().map(OutcomeModel::label).collect(),
        snr,
        cells,
    })
}
