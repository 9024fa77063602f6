//! Inference models: fit a simulated dataset and report named significance
//! criteria per effect.

pub mod formula;
pub mod glm;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::Family;
use crate::table::Table;

pub use formula::{Formula, FormulaError};
pub use glm::{fit_glm, ftest, glm_criteria, overall_ftest, FTest, GlmFit};

/// Criterion names whose values are probabilities and must lie in [0, 1].
pub const PROBABILITY_CRITERIA: &[&str] = &[
    "pval",
    "main_pval",
    "int_pval",
    "pip",
    "group_pip",
    "linear_pip",
    "gp_pip",
    "beta",
    "linear_beta",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("design matrix is rank deficient at column `{0}`")]
    RankDeficient(String),
    #[error("{n} observations for {k} coefficients")]
    TooFewObservations { n: usize, k: usize },
    #[error("IRLS did not converge in {0} iterations")]
    NotConverged(usize),
    #[error("fitted probabilities numerically 0 or 1 (separation)")]
    Separation,
    #[error("IRLS diverged (non-finite deviance)")]
    Diverged,
    #[error("invalid outcome: {0}")]
    InvalidResponse(String),
    #[error("F test needs at least one predictor")]
    NoPredictors,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("plugin `{name}`: {msg}")]
    Plugin { name: String, msg: String },
    #[error("criterion `{crit}`, effect `{effect}`: {msg}")]
    InvalidCriterion { crit: String, effect: String, msg: String },
}

/// criterion name → effect label → value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CritResult(pub BTreeMap<String, IndexMap<String, f64>>);

impl CritResult {
    pub fn insert(&mut self, crit: &str, effect: &str, value: f64) {
        self.0
            .entry(crit.to_string())
            .or_default()
            .insert(effect.to_string(), value);
    }

    pub fn get(&self, crit: &str, effect: &str) -> Option<f64> {
        self.0.get(crit).and_then(|m| m.get(effect)).copied()
    }

    pub fn criteria(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Check names are nonempty, values finite, and probability-kind
    /// criteria within [0, 1].
    pub fn validate(&self) -> Result<(), InferenceError> {
        for (crit, effects) in &self.0 {
            let bad = |effect: &str, msg: &str| InferenceError::InvalidCriterion {
                crit: crit.clone(),
                effect: effect.to_string(),
                msg: msg.to_string(),
            };
            if crit.trim().is_empty() {
                return Err(bad("", "empty criterion name"));
            }
            let prob = PROBABILITY_CRITERIA.contains(&crit.as_str());
            for (effect, v) in effects {
                if effect.trim().is_empty() {
                    return Err(bad(effect, "empty effect label"));
                }
                if !v.is_finite() {
                    return Err(bad(effect, &format!("non-finite value {v}")));
                }
                if prob && !(0.0..=1.0).contains(v) {
                    return Err(bad(effect, &format!("value {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// User inference routine: predictors and outcome in, criteria out.
pub type PluginFn = Arc<dyn Fn(&Table, &[f64]) -> Result<CritResult, String> + Send + Sync>;

#[derive(Clone)]
pub enum InferenceKind {
    Glm { family: Family, formula: Formula },
    FTest,
    Plugin(PluginFn),
}

#[derive(Clone)]
pub struct InferenceModel {
    name: String,
    kind: InferenceKind,
}

impl fmt::Debug for InferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            InferenceKind::Glm { family, .. } => format!("glm({family})"),
            InferenceKind::FTest => "ftest".into(),
            InferenceKind::Plugin(_) => "plugin".into(),
        };
        f.debug_struct("InferenceModel")
            .field("name", &self.name)
            .field("kind", &kind)
            .finish()
    }
}

impl InferenceModel {
    pub fn glm(family: Family, formula: &str) -> Result<InferenceModel, InferenceError> {
        Ok(InferenceModel {
            name: "GLM".into(),
            kind: InferenceKind::Glm {
                family,
                formula: Formula::parse(formula)?,
            },
        })
    }

    pub fn ftest() -> InferenceModel {
        InferenceModel {
            name: "F-test".into(),
            kind: InferenceKind::FTest,
        }
    }

    pub fn plugin(name: impl Into<String>, f: PluginFn) -> InferenceModel {
        InferenceModel {
            name: name.into(),
            kind: InferenceKind::Plugin(f),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> InferenceModel {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &InferenceKind {
        &self.kind
    }

    /// Fit one dataset.
    pub fn run(&self, x: &Table, y: &[f64]) -> Result<CritResult, InferenceError> {
        run_inference(self, x, y)
    }
}

pub fn run_inference(model: &InferenceModel, x: &Table, y: &[f64]) -> Result<CritResult, InferenceError> {
    match &model.kind {
        InferenceKind::Glm { family, formula } => {
            let fit = fit_glm(x, y, *family, formula)?;
            Ok(glm_criteria(&fit))
        }
        InferenceKind::FTest => overall_ftest(x, y),
        InferenceKind::Plugin(f) => {
            let out = f(x, y).map_err(|msg| InferenceError::Plugin {
                name: model.name.clone(),
                msg,
            })?;
            out.validate()?;
            Ok(out)
        }
    }
}
