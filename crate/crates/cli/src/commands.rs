//! The five CLI commands. Each writes its artifacts into an output
//! directory and returns the text to print.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mixpower::engine::streams::{stream, Purpose};
use mixpower::engine::{sim_curve, sim_power, EngineError, SummaryError};
use mixpower::generators::{GenError, OutcomeModel};
use mixpower::snr::{estimate_snr, scale_f, scale_sigma, SnrError, SnrEstimate};
use serde::Serialize;
use thiserror::Error;

use crate::report::{
    power_curve_svg, render_text, summarize, threshold_sweep_svg, write_summary_csv, Results, ResultsFile,
};
use crate::runspec::{OutcomeBlock, RunSpec, ScaleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Power,
    Curve,
    Snr,
    Scale,
    Sample,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "power" => Ok(Command::Power),
            "curve" => Ok(Command::Curve),
            "snr" => Ok(Command::Snr),
            "scale" => Ok(Command::Scale),
            "sample" => Ok(Command::Sample),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Power => "power",
            Command::Curve => "curve",
            Command::Snr => "snr",
            Command::Scale => "scale",
            Command::Sample => "sample",
        })
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    /// The spec is valid but unsuitable for the command.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("outcome {index}: {source}")]
    Snr { index: usize, source: SnrError },
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CommandError {
    /// 2 for problems with the request, 3 for failures while running it.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Invalid(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOptions {
    pub out: PathBuf,
    /// Predictor draws for SNR estimation and scaling; defaults to the
    /// spec's `snr_iter`.
    pub m: Option<usize>,
    /// Bootstrap replicates for the SNR standard error; defaults to the
    /// spec's `snr_boot`.
    pub r: Option<usize>,
    pub progress: bool,
}

impl CommandOptions {
    pub fn new(out: impl Into<PathBuf>) -> CommandOptions {
        CommandOptions {
            out: out.into(),
            m: None,
            r: None,
            progress: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    /// Text for standard output.
    pub text: String,
    pub files: Vec<PathBuf>,
}

fn output_err(path: &Path, e: impl fmt::Display) -> CommandError {
    CommandError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Writer, CommandError> {
        fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<(), CommandError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| output_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn with_file<F>(&mut self, name: &str, f: F) -> Result<(), CommandError>
    where
        F: FnOnce(BufWriter<File>) -> Result<(), String>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| output_err(&path, e))?;
        f(BufWriter::new(file)).map_err(|e| output_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run_command(cmd: Command, spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput, CommandError> {
    match cmd {
        Command::Power | Command::Curve => simulate(cmd, spec, opts),
        Command::Snr => snr(spec, opts),
        Command::Scale => scale(spec, opts),
        Command::Sample => sample(spec, opts),
    }
}

fn scaled_model(spec: &RunSpec, index: usize, m: usize) -> Result<Option<OutcomeModel>, CommandError> {
    let o = &spec.outcomes[index];
    let Some((target, mode)) = o.target() else {
        return Ok(None);
    };
    let mut rng = stream(spec.config.seed, index as u64, 0, Purpose::Scale);
    let scaled = match mode {
        ScaleMode::F => scale_f(target, &o.model, &spec.predictors, m, &mut rng),
        ScaleMode::Sigma => scale_sigma(target, &o.model, &spec.predictors, m, &mut rng),
    };
    scaled.map(Some).map_err(|source| CommandError::Snr { index, source })
}

/// Outcome models with any requested SNR scaling applied.
fn outcome_models(spec: &RunSpec, m: usize) -> Result<Vec<OutcomeModel>, CommandError> {
    (0..spec.outcomes.len())
        .map(|i| {
            Ok(match scaled_model(spec, i, m)? {
                Some(model) => {
                    log::info!("outcome {i} scaled to {}", model.label());
                    model
                }
                None => spec.outcomes[i].model.clone(),
            })
        })
        .collect()
}

fn simulate(cmd: Command, spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput, CommandError> {
    if spec.n.is_empty() {
        return Err(CommandError::Invalid(format!("{cmd} needs at least one sample size in run.n")));
    }
    if cmd == Command::Power && (spec.n.len() != 1 || spec.outcomes.len() != 1) {
        return Err(CommandError::Invalid(
            "power takes exactly one outcome block and one sample size; use curve for grids".into(),
        ));
    }
    let mut config = spec.config.clone();
    config.progress = opts.progress;
    if let Some(m) = opts.m {
        config.snr_iter = m;
    }
    if let Some(r) = opts.r {
        config.snr_boot = r;
    }
    let ymods = outcome_models(spec, config.snr_iter)?;
    let result = if cmd == Command::Power {
        Results::Power(sim_power(&spec.predictors, &ymods[0], &spec.inference, spec.n[0], &config)?)
    } else {
        Results::Curve(sim_curve(&spec.predictors, &ymods, &spec.inference, &spec.n, &config)?)
    };
    let table = summarize(&result, &spec.summary)?;
    let text = render_text(&table);

    let mut w = Writer::new(&opts.out)?;
    let file = ResultsFile {
        summary: spec.summary.clone(),
        result,
    };
    w.with_file("results.json", |f| serde_json::to_writer_pretty(f, &file).map_err(|e| e.to_string()))?;
    w.with_file("summary.csv", |f| write_summary_csv(&table, f).map_err(|e| e.to_string()))?;
    w.text("summary.txt", &text)?;
    w.text("power_curve.svg", &power_curve_svg(&table))?;
    if table.thres.len() > 1 {
        w.text("threshold_sweep.svg", &threshold_sweep_svg(&table))?;
    }
    Ok(CommandOutput { text, files: w.files })
}

#[derive(Serialize)]
struct SnrReport<'a> {
    outcome: &'a str,
    #[serde(flatten)]
    estimate: SnrEstimate,
}

fn snr(spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput, CommandError> {
    let m = opts.m.unwrap_or(spec.config.snr_iter);
    let r = opts.r.unwrap_or(spec.config.snr_boot);
    let mut text = String::new();
    let mut reports = Vec::new();
    let labels: Vec<String> = spec.outcomes.iter().map(|o| o.model.label()).collect();
    for (i, o) in spec.outcomes.iter().enumerate() {
        let mut rng = stream(spec.config.seed, i as u64, 0, Purpose::Snr);
        let est = estimate_snr(&spec.predictors, &o.model, m, r, &mut rng)
            .map_err(|source| CommandError::Snr { index: i, source })?;
        text.push_str(&format!(
            "{}: SNR {:.4} ± {:.4} (m = {}, R = {})\n",
            labels[i], est.snr, est.se, est.m, est.r
        ));
        reports.push(est);
    }
    let out: Vec<SnrReport> = labels
        .iter()
        .zip(&reports)
        .map(|(l, e)| SnrReport { outcome: l, estimate: *e })
        .collect();
    let mut w = Writer::new(&opts.out)?;
    w.with_file("snr.json", |f| serde_json::to_writer_pretty(f, &out).map_err(|e| e.to_string()))?;
    Ok(CommandOutput { text, files: w.files })
}

#[derive(Serialize)]
struct ScaledOutcomes {
    outcomes: Vec<OutcomeBlock>,
}

fn scale(spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput, CommandError> {
    if spec.outcomes.iter().all(|o| o.target().is_none()) {
        return Err(CommandError::Invalid(
            "scale needs at least one outcome block with target_snr".into(),
        ));
    }
    let m = opts.m.unwrap_or(spec.config.snr_iter);
    let mut blocks = Vec::with_capacity(spec.outcomes.len());
    for (i, o) in spec.outcomes.iter().enumerate() {
        blocks.push(match scaled_model(spec, i, m)? {
            Some(model) => o.block.scaled_to(&model),
            None => o.block.clone(),
        });
    }
    let echo = ScaledOutcomes { outcomes: blocks };
    let toml_spec = spec.path.extension().is_some_and(|e| e == "toml");
    let (name, text) = if toml_spec {
        (
            "scaled_outcomes.toml",
            toml::to_string(&echo).map_err(|e| output_err(&opts.out, e))?,
        )
    } else {
        (
            "scaled_outcomes.json",
            serde_json::to_string_pretty(&echo).map_err(|e| output_err(&opts.out, e))? + "\n",
        )
    };
    let mut w = Writer::new(&opts.out)?;
    w.text(name, &text)?;
    Ok(CommandOutput { text, files: w.files })
}

fn sample(spec: &RunSpec, opts: &CommandOptions) -> Result<CommandOutput, CommandError> {
    let Some(&n) = spec.n.first() else {
        return Err(CommandError::Invalid("sample needs a row count (run.n or --n)".into()));
    };
    let mut rng = stream(spec.config.seed, 0, 0, Purpose::Sample);
    let table = spec.predictors.sample_predictors(n, &mut rng)?;
    let mut w = Writer::new(&opts.out)?;
    w.with_file("sample.csv", |f| table.write_csv(f).map_err(|e| e.to_string()))?;
    Ok(CommandOutput {
        text: format!("wrote {n} rows to {}\n", w.files[0].display()),
        files: w.files,
    })
}
