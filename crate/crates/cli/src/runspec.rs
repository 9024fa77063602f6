//! Run specifications: a JSON or TOML file describing the predictor,
//! outcome and inference models together with run and summary settings.
//!
//! ```toml
//! [predictors]
//! method = "cvine"
//! m = 1000
//! G = [[1, 0], [0, 1]]
//! marginals = { x1 = "qnorm(mean=0, sd=1)", x2 = "qbinom(size=1, prob=0.7)" }
//!
//! [[outcomes]]
//! mean = "0.3 * x1 + 0.3 * x2"
//! family = "gaussian"
//! sigma = 1
//!
//! [inference]
//! builtin = "ftest"
//!
//! [run]
//! s = 1000
//! n = [50, 100]
//!
//! [summary]
//! crit = "pval"
//! thres = 0.05
//! how = "lesser"
//! ```
//!
//! File paths inside the spec are resolved relative to the spec file.
//! Loading validates everything it can and reports every problem found,
//! each prefixed with its field path.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use mixpower::corr_vine::{read_guess_csv, VineSpec};
use mixpower::engine::streams::{stream, Purpose};
use mixpower::engine::{ErrorHandling, How, SimConfig};
use mixpower::expr::Expr;
use mixpower::generators::{Family, MeanFn, OutcomeModel, PredictorModel};
use mixpower::inference::{Formula, InferenceModel, PROBABILITY_CRITERIA};
use mixpower::marginals::{parse_marginal, MarginalSpec};
use mixpower::table::{DType, Table};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One validation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid run spec:\n{}", list(.0))]
    Invalid(Vec<Problem>),
}

impl SpecError {
    pub fn problems(&self) -> &[Problem] {
        match self {
            SpecError::Invalid(p) => p,
            _ => &[],
        }
    }
}

fn list(problems: &[Problem]) -> String {
    problems
        .iter()
        .map(|p| format!("  - {p}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// Multiply the mean function.
    F,
    /// Change the noise standard deviation (gaussian only).
    Sigma,
}

/// An outcome model as written in the spec; also used to echo scaled
/// models back to the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeBlock {
    pub mean: String,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub multiplier: f64,
    /// Coefficient count for the discrete-family SNR, when the additive
    /// term count of `mean` is not appropriate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleMode>,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

impl OutcomeBlock {
    /// Build the outcome model this block describes.
    pub fn model(&self) -> Result<OutcomeModel, String> {
        let expr = Expr::parse(&self.mean).map_err(|e| e.to_string())?;
        let mut model = OutcomeModel::new(MeanFn::Expr(expr), self.family, self.sigma).map_err(|e| e.to_string())?;
        if self.multiplier != 1.0 {
            model = model.with_multiplier(self.multiplier);
        }
        if let Some(p) = self.params {
            model = model.with_param_count(p);
        }
        Ok(model)
    }

    /// Copy of this block carrying the sigma and multiplier of `model`,
    /// with the scaling target removed.
    pub fn scaled_to(&self, model: &OutcomeModel) -> OutcomeBlock {
        OutcomeBlock {
            sigma: model.sigma(),
            multiplier: model.multiplier(),
            target_snr: None,
            scale: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutcomeSpec {
    pub block: OutcomeBlock,
    pub model: OutcomeModel,
}

impl OutcomeSpec {
    /// Requested SNR and scaling mode, if any.
    pub fn target(&self) -> Option<(f64, ScaleMode)> {
        self.block
            .target_snr
            .map(|t| (t, self.block.scale.unwrap_or(ScaleMode::F)))
    }
}

/// How criterion values are turned into power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySpec {
    pub crit: String,
    pub thres: Vec<f64>,
    pub how: How,
}

/// A fully validated run specification.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub path: PathBuf,
    pub predictors: PredictorModel,
    pub outcomes: Vec<OutcomeSpec>,
    pub inference: InferenceModel,
    pub n: Vec<usize>,
    pub config: SimConfig,
    pub summary: SummarySpec,
}

/// Values that take precedence over the spec's run block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cores: Option<usize>,
    pub seed: Option<u64>,
    pub errorhandling: Option<ErrorHandling>,
    pub s: Option<usize>,
    pub n: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GuessSource {
    Inline(Vec<Vec<f64>>),
    File(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    predictors: Option<RawPredictors>,
    outcomes: Option<Vec<RawOutcome>>,
    inference: Option<RawInference>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    summary: RawSummary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPredictors {
    method: Option<String>,
    data: Option<PathBuf>,
    weights: Option<PathBuf>,
    weight_column: Option<String>,
    #[serde(rename = "G", alias = "g")]
    guess: Option<GuessSource>,
    m: Option<f64>,
    marginals: Option<IndexMap<String, String>>,
    #[serde(default)]
    dtypes: IndexMap<String, DType>,
    bootstrap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    mean: Option<String>,
    family: Option<String>,
    sigma: Option<f64>,
    multiplier: Option<f64>,
    params: Option<usize>,
    target_snr: Option<f64>,
    scale: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInference {
    builtin: Option<String>,
    formula: Option<String>,
    family: Option<String>,
    name: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    s: Option<usize>,
    n: Option<OneOrMany<usize>>,
    snr_iter: Option<usize>,
    snr_boot: Option<usize>,
    cores: Option<usize>,
    errorhandling: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSummary {
    crit: Option<String>,
    thres: Option<OneOrMany<f64>>,
    how: Option<String>,
}

/// Load and validate a spec file.
pub fn load_runspec(path: &Path) -> Result<RunSpec, SpecError> {
    load_runspec_with(path, &Overrides::default())
}

/// Load a spec file, replacing run settings with any given overrides
/// before validation.
pub fn load_runspec_with(path: &Path, overrides: &Overrides) -> Result<RunSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let syntax = |message: String| SpecError::Syntax {
        path: path.to_path_buf(),
        message,
    };
    let raw: RawSpec = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => {
            let de = toml::Deserializer::parse(&text).map_err(|e| syntax(e.to_string()))?;
            serde_path_to_error::deserialize(de).map_err(|e| syntax(e.to_string()))?
        }
        _ => {
            let mut de = serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(&mut de).map_err(|e| syntax(e.to_string()))?
        }
    };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Validator::new(base).build(raw, path, overrides)
}

struct Validator {
    base: PathBuf,
    problems: Vec<Problem>,
    /// Predictor names, once known, even if the predictor model is invalid.
    names: Option<Vec<String>>,
}

impl Validator {
    fn new(base: PathBuf) -> Validator {
        Validator {
            base,
            problems: Vec::new(),
            names: None,
        }
    }

    fn problem(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.problems.push(Problem {
            path: path.into(),
            message: message.to_string(),
        });
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn read_table(&mut self, field: &str, p: &Path) -> Option<Table> {
        let full = self.resolve(p);
        if !full.exists() {
            self.problem(field, format!("file not found: {}", full.display()));
            return None;
        }
        match Table::read_csv_path(&full) {
            Ok(t) => Some(t),
            Err(e) => {
                self.problem(field, format!("{}: {e}", full.display()));
                None
            }
        }
    }

    fn build(mut self, raw: RawSpec, path: &Path, overrides: &Overrides) -> Result<RunSpec, SpecError> {
        let (config, n) = self.run(raw.run, overrides);
        let summary = self.summary(raw.summary);
        let predictors = match raw.predictors {
            Some(p) => self.predictors(p, config.seed),
            None => {
                self.problem("predictors", "missing predictors block");
                None
            }
        };
        let names = predictors
            .as_ref()
            .map(|p: &PredictorModel| p.names().to_vec())
            .or_else(|| self.names.clone());
        let outcomes = match raw.outcomes {
            Some(list) if !list.is_empty() => list
                .into_iter()
                .enumerate()
                .filter_map(|(i, o)| self.outcome(i, o, names.as_deref()))
                .collect(),
            _ => {
                self.problem("outcomes", "at least one outcome block is required");
                Vec::new()
            }
        };
        let inference = match raw.inference {
            Some(i) => self.inference(i, names.as_deref()),
            None => {
                self.problem("inference", "missing inference block");
                None
            }
        };
        if !self.problems.is_empty() {
            return Err(SpecError::Invalid(self.problems));
        }
        Ok(RunSpec {
            path: path.to_path_buf(),
            predictors: predictors.expect("validated"),
            outcomes,
            inference: inference.expect("validated"),
            n,
            config,
            summary: summary.expect("validated"),
        })
    }

    fn run(&mut self, raw: RawRun, ov: &Overrides) -> (SimConfig, Vec<usize>) {
        let mut config = SimConfig::default();
        config.s = ov.s.or(raw.s).unwrap_or(config.s);
        config.snr_iter = raw.snr_iter.unwrap_or(config.snr_iter);
        config.snr_boot = raw.snr_boot.unwrap_or(config.snr_boot);
        config.cores = ov.cores.or(raw.cores).unwrap_or(config.cores);
        config.seed = ov.seed.or(raw.seed).unwrap_or(config.seed);
        if let Some(e) = ov.errorhandling {
            config.errorhandling = e;
        } else if let Some(e) = raw.errorhandling {
            match e.parse() {
                Ok(e) => config.errorhandling = e,
                Err(msg) => self.problem("run.errorhandling", msg),
            }
        }
        if config.s == 0 {
            self.problem("run.s", "must be at least 1");
        }
        if config.cores == 0 {
            self.problem("run.cores", "must be at least 1");
        }
        if config.snr_iter < 2 {
            self.problem("run.snr_iter", "must be at least 2");
        }
        if config.snr_boot == 0 {
            self.problem("run.snr_boot", "must be at least 1");
        }
        let n = ov
            .n
            .clone()
            .or_else(|| raw.n.map(OneOrMany::into_vec))
            .unwrap_or_default();
        for (i, v) in n.iter().enumerate() {
            if *v < 2 {
                self.problem(format!("run.n[{i}]"), format!("sample size must be at least 2, got {v}"));
            }
        }
        (config, n)
    }

    fn summary(&mut self, raw: RawSummary) -> Option<SummarySpec> {
        let crit = raw.crit.unwrap_or_else(|| "pval".into());
        let thres = raw.thres.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.05]);
        let before = self.problems.len();
        if crit.trim().is_empty() {
            self.problem("summary.crit", "must not be empty");
        }
        if thres.is_empty() {
            self.problem("summary.thres", "at least one threshold is required");
        }
        let prob = PROBABILITY_CRITERIA.contains(&crit.as_str());
        for (i, t) in thres.iter().enumerate() {
            if !t.is_finite() || (prob && !(0.0..=1.0).contains(t)) {
                self.problem(format!("summary.thres[{i}]"), format!("invalid threshold {t} for `{crit}`"));
            }
        }
        let how = match raw.how.as_deref().unwrap_or("lesser").parse::<How>() {
            Ok(h) => Some(h),
            Err(msg) => {
                self.problem("summary.how", msg);
                None
            }
        };
        (self.problems.len() == before).then(|| SummarySpec {
            crit,
            thres,
            how: how.expect("checked"),
        })
    }

    fn predictors(&mut self, raw: RawPredictors, seed: u64) -> Option<PredictorModel> {
        let method = match raw.method.as_deref() {
            Some(m @ ("resampling" | "cvine" | "estimation")) => m.to_string(),
            Some(other) => {
                self.problem(
                    "predictors.method",
                    format!("unknown method `{other}` (expected resampling, cvine or estimation)"),
                );
                return None;
            }
            None => {
                self.problem("predictors.method", "missing (expected resampling, cvine or estimation)");
                return None;
            }
        };
        let unused = |v: &mut Validator, present: bool, field: &str| {
            if present {
                v.problem(format!("predictors.{field}"), format!("not used by method {method}"));
            }
        };
        match method.as_str() {
            "cvine" => {
                unused(self, raw.data.is_some(), "data");
                unused(self, raw.weights.is_some(), "weights");
                unused(self, raw.weight_column.is_some(), "weight_column");
                unused(self, raw.bootstrap.is_some(), "bootstrap");
                self.cvine(raw)
            }
            "resampling" => {
                unused(self, raw.guess.is_some(), "G");
                unused(self, raw.m.is_some(), "m");
                unused(self, raw.marginals.is_some(), "marginals");
                unused(self, raw.bootstrap.is_some(), "bootstrap");
                self.resampling(raw)
            }
            _ => {
                unused(self, raw.guess.is_some(), "G");
                unused(self, raw.m.is_some(), "m");
                unused(self, raw.marginals.is_some(), "marginals");
                unused(self, raw.weights.is_some(), "weights");
                unused(self, raw.weight_column.is_some(), "weight_column");
                self.estimation(raw, seed)
            }
        }
    }

    fn data_table(&mut self, raw: &RawPredictors) -> Option<Table> {
        let Some(p) = &raw.data else {
            self.problem("predictors.data", "missing data file");
            return None;
        };
        let mut table = self.read_table("predictors.data", p)?;
        self.names = Some(table.names().to_vec());
        for (name, dtype) in &raw.dtypes {
            if !table.set_dtype(name, *dtype) {
                self.problem(format!("predictors.dtypes.{name}"), "no such column in data");
            }
        }
        Some(table)
    }

    fn resampling(&mut self, raw: RawPredictors) -> Option<PredictorModel> {
        let table = self.data_table(&raw)?;
        let (table, weights) = match (&raw.weights, &raw.weight_column) {
            (Some(_), Some(_)) => {
                self.problem("predictors.weights", "give either weights or weight_column, not both");
                return None;
            }
            (Some(p), None) => {
                let w = self.read_table("predictors.weights", p)?;
                if w.nrows() != table.nrows() {
                    self.problem(
                        "predictors.weights",
                        format!("{} weights for {} data rows", w.nrows(), table.nrows()),
                    );
                    return None;
                }
                (table, Some(w.column(0).to_vec()))
            }
            (None, Some(col)) => {
                let Some(w) = table.column_by_name(col).map(<[f64]>::to_vec) else {
                    self.problem("predictors.weight_column", format!("no column `{col}` in data"));
                    return None;
                };
                let keep: Vec<(String, Vec<f64>)> = table
                    .names()
                    .iter()
                    .zip(table.columns())
                    .filter(|(n, _)| *n != col)
                    .map(|(n, c)| (n.clone(), c.clone()))
                    .collect();
                let dtypes = table
                    .names()
                    .iter()
                    .zip(table.dtypes())
                    .filter(|(n, _)| *n != col)
                    .map(|(_, d)| *d)
                    .collect();
                match Table::with_dtypes(keep, dtypes) {
                    Ok(t) => (t, Some(w)),
                    Err(e) => {
                        self.problem("predictors.weight_column", e);
                        return None;
                    }
                }
            }
            (None, None) => (table, None),
        };
        let field = if raw.weight_column.is_some() {
            "predictors.weight_column"
        } else {
            "predictors.weights"
        };
        PredictorModel::resampling(table, weights)
            .map_err(|e| self.problem(field, e))
            .ok()
    }

    fn estimation(&mut self, raw: RawPredictors, seed: u64) -> Option<PredictorModel> {
        let table = self.data_table(&raw)?;
        let reps = raw.bootstrap.unwrap_or(100);
        let mut rng = stream(seed, 0, 0, Purpose::Estimation);
        PredictorModel::estimation(&table, reps, &mut rng)
            .map_err(|e| self.problem("predictors.data", e))
            .ok()
    }

    fn cvine(&mut self, raw: RawPredictors) -> Option<PredictorModel> {
        let before = self.problems.len();
        let m = match raw.m {
            Some(m) if m > 0.0 && m.is_finite() => Some(m),
            Some(m) => {
                self.problem("predictors.m", format!("must be positive, got {m}"));
                None
            }
            None => {
                self.problem("predictors.m", "missing (required by method cvine)");
                None
            }
        };
        let marginals = match raw.marginals {
            Some(map) if !map.is_empty() => map,
            _ => {
                self.problem("predictors.marginals", "at least one marginal is required by method cvine");
                return None;
            }
        };
        self.names = Some(marginals.keys().cloned().collect());
        let mut specs: IndexMap<String, MarginalSpec> = IndexMap::new();
        for (name, text) in &marginals {
            match parse_marginal(text) {
                Ok(mut spec) => {
                    if let Some(d) = raw.dtypes.get(name) {
                        spec = spec.with_dtype(*d);
                    }
                    specs.insert(name.clone(), spec);
                }
                Err(e) => self.problem(format!("predictors.marginals.{name}"), e),
            }
        }
        for name in raw.dtypes.keys() {
            if !marginals.contains_key(name) {
                self.problem(format!("predictors.dtypes.{name}"), "no marginal with this name");
            }
        }
        let p = marginals.len();
        let (names, guess) = match raw.guess {
            None => (marginals.keys().cloned().collect::<Vec<_>>(), DMatrix::identity(p, p)),
            Some(GuessSource::Inline(rows)) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    self.problem("predictors.G", format!("must be a {p}x{p} matrix to match the marginals"));
                    return None;
                }
                (
                    marginals.keys().cloned().collect(),
                    DMatrix::from_fn(p, p, |i, j| rows[i][j]),
                )
            }
            Some(GuessSource::File(file)) => {
                let full = self.resolve(&file);
                let parsed = File::open(&full)
                    .map_err(|e| e.to_string())
                    .and_then(|f| read_guess_csv(f).map_err(|e| e.to_string()));
                match parsed {
                    Ok((names, g)) => {
                        let mut sorted_a = names.clone();
                        let mut sorted_b: Vec<String> = marginals.keys().cloned().collect();
                        sorted_a.sort();
                        sorted_b.sort();
                        if sorted_a != sorted_b {
                            self.problem("predictors.G", "column names do not match the marginal names");
                            return None;
                        }
                        (names, g)
                    }
                    Err(e) => {
                        self.problem("predictors.G", format!("{}: {e}", full.display()));
                        return None;
                    }
                }
            }
        };
        if self.problems.len() != before {
            return None;
        }
        let vine = match VineSpec::new(names, guess, m.expect("checked")) {
            Ok(v) => v,
            Err(e) => {
                self.problem("predictors.G", e);
                return None;
            }
        };
        for w in vine.warnings() {
            log::warn!("{w}");
        }
        PredictorModel::cvine(vine, specs)
            .map_err(|e| self.problem("predictors.marginals", e))
            .ok()
    }

    fn outcome(&mut self, i: usize, raw: RawOutcome, names: Option<&[String]>) -> Option<OutcomeSpec> {
        let at = |field: &str| format!("outcomes[{i}].{field}");
        let before = self.problems.len();
        let family = match raw.family.as_deref().unwrap_or("gaussian") {
            "gaussian" => Some(Family::Gaussian),
            "binomial" => Some(Family::Binomial),
            "poisson" => Some(Family::Poisson),
            other => {
                self.problem(
                    at("family"),
                    format!("unknown family `{other}` (expected gaussian, binomial or poisson)"),
                );
                None
            }
        };
        let expr = match &raw.mean {
            Some(m) => match Expr::parse(m) {
                Ok(e) => Some(e),
                Err(e) => {
                    self.problem(at("mean"), e);
                    None
                }
            },
            None => {
                self.problem(at("mean"), "missing mean function");
                None
            }
        };
        if let (Some(e), Some(names)) = (&expr, names) {
            for v in e.variables() {
                if !names.contains(&v) {
                    self.problem(at("mean"), format!("unknown predictor `{v}`"));
                }
            }
        }
        match (family, raw.sigma) {
            (Some(Family::Gaussian), None) => self.problem(at("sigma"), "required for the gaussian family"),
            (Some(Family::Gaussian), Some(s)) if !(s > 0.0 && s.is_finite()) => {
                self.problem(at("sigma"), format!("must be positive, got {s}"))
            }
            (Some(Family::Binomial | Family::Poisson), Some(_)) => {
                self.problem(at("sigma"), "only allowed for the gaussian family")
            }
            _ => {}
        }
        if let Some(c) = raw.multiplier {
            if !c.is_finite() {
                self.problem(at("multiplier"), format!("must be finite, got {c}"));
            }
        }
        if let Some(t) = raw.target_snr {
            if !(t > 0.0 && t.is_finite()) {
                self.problem(at("target_snr"), format!("must be positive, got {t}"));
            }
        }
        let scale = match raw.scale.as_deref() {
            None => None,
            Some("f") => Some(ScaleMode::F),
            Some("sigma") => Some(ScaleMode::Sigma),
            Some(other) => {
                self.problem(at("scale"), format!("unknown mode `{other}` (expected f or sigma)"));
                None
            }
        };
        if scale.is_some() && raw.target_snr.is_none() {
            self.problem(at("scale"), "requires target_snr");
        }
        if scale == Some(ScaleMode::Sigma) && family.is_some_and(|f| f != Family::Gaussian) {
            self.problem(at("scale"), "sigma scaling needs the gaussian family");
        }
        if self.problems.len() != before {
            return None;
        }
        let block = OutcomeBlock {
            mean: raw.mean.expect("checked"),
            family: family.expect("checked"),
            sigma: raw.sigma,
            multiplier: raw.multiplier.unwrap_or(1.0),
            params: raw.params,
            target_snr: raw.target_snr,
            scale,
        };
        match block.model() {
            Ok(model) => Some(OutcomeSpec { block, model }),
            Err(e) => {
                self.problem(format!("outcomes[{i}]"), e);
                None
            }
        }
    }

    fn inference(&mut self, raw: RawInference, names: Option<&[String]>) -> Option<InferenceModel> {
        let family = match raw.family.as_deref().unwrap_or("gaussian") {
            "gaussian" => Family::Gaussian,
            "binomial" => Family::Binomial,
            "poisson" => Family::Poisson,
            other => {
                self.problem("inference.family", format!("unknown family `{other}`"));
                return None;
            }
        };
        let model = match raw.builtin.as_deref() {
            Some("ftest") => {
                if raw.formula.is_some() {
                    self.problem("inference.formula", "not used by the ftest builtin");
                }
                if raw.family.is_some() {
                    self.problem("inference.family", "not used by the ftest builtin");
                }
                InferenceModel::ftest()
            }
            Some("glm") => {
                let Some(text) = raw.formula.as_deref() else {
                    self.problem("inference.formula", "required by the glm builtin");
                    return None;
                };
                let formula = match Formula::parse(text) {
                    Ok(f) => f,
                    Err(e) => {
                        self.problem("inference.formula", e);
                        return None;
                    }
                };
                if let Some(names) = names {
                    for term in formula.expand_terms(names) {
                        for v in term.predictors() {
                            if !names.contains(&v) {
                                self.problem("inference.formula", format!("unknown predictor `{v}`"));
                            }
                        }
                    }
                }
                InferenceModel::glm(family, text)
                    .map_err(|e| self.problem("inference.formula", e))
                    .ok()?
            }
            Some(other) => {
                self.problem("inference.builtin", format!("unknown builtin `{other}` (expected ftest or glm)"));
                return None;
            }
            None => {
                self.problem("inference.builtin", "missing (expected ftest or glm)");
                return None;
            }
        };
        Some(match raw.name {
            Some(n) => model.with_name(n),
            None => model,
        })
    }
}
