//! Generative models: rows of correlated predictors and outcomes given
//! predictors.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corr_vine::{
    estimate_latent_correlation, sample_cvine, CorrError, CorrelationMatrix, VineSpec,
};
use crate::expr::{Expr, ExprError};
use crate::marginals::{std_normal_cdf, MarginalError, MarginalSpec};
use crate::table::{DType, Table, TableError};

/// Largest Poisson mean accepted when sampling outcomes.
pub const POISSON_MAX_MEAN: f64 = 1e12;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("weights must sum to 1 (got {0})")]
    WeightSum(f64),
    #[error("weights: {0}")]
    Weights(String),
    #[error("marginals do not match the guess matrix: {0}")]
    MarginalNames(String),
    #[error("estimation model needs at least one correlation draw")]
    NoDraws,
    #[error("sigma is required for the gaussian family and only allowed there")]
    Sigma,
    #[error("sigma must be positive and finite, got {0}")]
    SigmaValue(f64),
    #[error("mean function returned {got} values for {want} rows")]
    MeanLength { got: usize, want: usize },
    #[error("mean function: {0}")]
    MeanCallback(String),
    #[error("row {row}: Poisson mean exp({eta}) exceeds {POISSON_MAX_MEAN:e}")]
    PoissonOverflow { row: usize, eta: f64 },
    #[error("n must be at least 1")]
    EmptySample,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
    #[error(transparent)]
    Corr(#[from] CorrError),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone)]
enum Method {
    Resampling {
        data: Table,
        weights: Option<(Vec<f64>, WeightedIndex<f64>)>,
    },
    Cvine {
        spec: VineSpec,
        marginals: Vec<MarginalSpec>,
    },
    Estimation {
        draws: Vec<CorrelationMatrix>,
        marginals: Vec<MarginalSpec>,
    },
}

/// Joint distribution of the predictors.
#[derive(Debug, Clone)]
pub struct PredictorModel {
    names: Vec<String>,
    dtypes: Vec<DType>,
    method: Method,
}

impl PredictorModel {
    /// Rows drawn with replacement from `data`, uniformly or by `weights`.
    pub fn resampling(data: Table, weights: Option<Vec<f64>>) -> Result<PredictorModel, GenError> {
        let weights = match weights {
            None => None,
            Some(w) => {
                if w.len() != data.nrows() {
                    return Err(GenError::Weights(format!(
                        "{} weights for {} rows",
                        w.len(),
                        data.nrows()
                    )));
                }
                if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(GenError::Weights("weights must be nonnegative and finite".into()));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(GenError::WeightSum(sum));
                }
                let index = WeightedIndex::new(&w).map_err(|e| GenError::Weights(e.to_string()))?;
                Some((w, index))
            }
        };
        Ok(PredictorModel {
            names: data.names().to_vec(),
            dtypes: data.dtypes().to_vec(),
            method: Method::Resampling { data, weights },
        })
    }

    /// Gaussian copula with a C-vine correlation prior. Marginal names must
    /// equal the vine's variable names; columns follow the vine's order.
    pub fn cvine(
        spec: VineSpec,
        mut marginals: IndexMap<String, MarginalSpec>,
    ) -> Result<PredictorModel, GenError> {
        let mut ordered = Vec::with_capacity(spec.names().len());
        for name in spec.names() {
            match marginals.shift_remove(name) {
                Some(m) => ordered.push(m),
                None => return Err(GenError::MarginalNames(format!("no marginal for `{name}`"))),
            }
        }
        if let Some(extra) = marginals.keys().next() {
            return Err(GenError::MarginalNames(format!("unknown column `{extra}`")));
        }
        Ok(PredictorModel {
            names: spec.names().to_vec(),
            dtypes: ordered.iter().map(MarginalSpec::dtype).collect(),
            method: Method::Cvine {
                spec,
                marginals: ordered,
            },
        })
    }

    /// Gaussian copula estimated from `data` with empirical marginals. The
    /// correlation used for each generated dataset is drawn uniformly from
    /// `bootstrap_reps` bootstrap estimates, or fixed at the point estimate
    /// when `bootstrap_reps` is zero.
    pub fn estimation<R: Rng + ?Sized>(
        data: &Table,
        bootstrap_reps: usize,
        rng: &mut R,
    ) -> Result<PredictorModel, GenError> {
        let est = estimate_latent_correlation(data, bootstrap_reps, rng)?;
        let draws = if est.draws.is_empty() {
            vec![est.point]
        } else {
            est.draws
        };
        PredictorModel::estimation_from_draws(data, draws)
    }

    pub fn estimation_from_draws(
        data: &Table,
        draws: Vec<CorrelationMatrix>,
    ) -> Result<PredictorModel, GenError> {
        if draws.is_empty() {
            return Err(GenError::NoDraws);
        }
        if let Some(bad) = draws.iter().find(|c| c.dim() != data.ncols()) {
            return Err(GenError::MarginalNames(format!(
                "correlation draw is {0}x{0} but data has {1} columns",
                bad.dim(),
                data.ncols()
            )));
        }
        let marginals = data
            .columns()
            .iter()
            .zip(data.dtypes())
            .map(|(c, d)| MarginalSpec::empirical(c.clone()).map(|m| m.with_dtype(*d)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PredictorModel {
            names: data.names().to_vec(),
            dtypes: data.dtypes().to_vec(),
            method: Method::Estimation { draws, marginals },
        })
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            Method::Resampling { .. } => "resampling",
            Method::Cvine { .. } => "cvine",
            Method::Estimation { .. } => "estimation",
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dtypes(&self) -> &[DType] {
        &self.dtypes
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    /// Draw `n` rows. Copula methods draw one correlation matrix per call.
    pub fn sample_predictors<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Table, GenError> {
        if n == 0 {
            return Err(GenError::EmptySample);
        }
        match &self.method {
            Method::Resampling { data, weights } => {
                let rows: Vec<usize> = match weights {
                    Some((_, index)) => (0..n).map(|_| index.sample(rng)).collect(),
                    None => (0..n).map(|_| rng.random_range(0..data.nrows())).collect(),
                };
                Ok(data.take_rows(&rows))
            }
            Method::Cvine { spec, marginals } => {
                let c = sample_cvine(spec, rng);
                self.copula_rows(&c, marginals, n, rng)
            }
            Method::Estimation { draws, marginals } => {
                let c = &draws[rng.random_range(0..draws.len())];
                self.copula_rows(c, marginals, n, rng)
            }
        }
    }

    fn copula_rows<R: Rng + ?Sized>(
        &self,
        c: &CorrelationMatrix,
        marginals: &[MarginalSpec],
        n: usize,
        rng: &mut R,
    ) -> Result<Table, GenError> {
        let p = c.dim();
        let l = c.cholesky_lower();
        let mut cols = vec![Vec::with_capacity(n); p];
        let mut e = vec![0.0; p];
        for _ in 0..n {
            for v in e.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for (j, col) in cols.iter_mut().enumerate() {
                let z: f64 = (0..=j).map(|k| l[(j, k)] * e[k]).sum();
                col.push(marginals[j].quantile_clamped(std_normal_cdf(z)));
            }
        }
        Ok(Table::with_dtypes(
            self.names.iter().cloned().zip(cols).collect(),
            self.dtypes.clone(),
        )?)
    }
}

/// Outcome distribution family. Binomial uses the logit link and Poisson
/// the log link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Binomial,
    Poisson,
}

impl Family {
    /// Inverse link applied to the linear predictor.
    pub fn inverse_link(self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => eta,
            Family::Binomial => logistic(eta),
            Family::Poisson => eta.exp(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
        })
    }
}

pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Host-provided mean function: full predictor table in, one value per row out.
pub type MeanCallback = Arc<dyn Fn(&Table) -> Result<Vec<f64>, String> + Send + Sync>;

#[derive(Clone)]
pub enum MeanFn {
    Expr(Expr),
    Callback { label: String, f: MeanCallback },
}

impl fmt::Debug for MeanFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanFn::Expr(e) => write!(f, "Expr({e})"),
            MeanFn::Callback { label, .. } => write!(f, "Callback({label})"),
        }
    }
}

impl fmt::Display for MeanFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanFn::Expr(e) => write!(f, "{e}"),
            MeanFn::Callback { label, .. } => f.write_str(label),
        }
    }
}

/// Mean function, family and noise level of the outcome.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    mean: MeanFn,
    family: Family,
    sigma: Option<f64>,
    multiplier: f64,
    param_count: Option<usize>,
}

impl OutcomeModel {
    pub fn new(mean: MeanFn, family: Family, sigma: Option<f64>) -> Result<OutcomeModel, GenError> {
        match (family, sigma) {
            (Family::Gaussian, Some(s)) if !(s > 0.0 && s.is_finite()) => return Err(GenError::SigmaValue(s)),
            (Family::Gaussian, Some(_)) | (Family::Binomial | Family::Poisson, None) => {}
            _ => return Err(GenError::Sigma),
        }
        Ok(OutcomeModel {
            mean,
            family,
            sigma,
            multiplier: 1.0,
            param_count: None,
        })
    }

    pub fn gaussian(mean: &str, sigma: f64) -> Result<OutcomeModel, GenError> {
        OutcomeModel::new(MeanFn::Expr(Expr::parse(mean)?), Family::Gaussian, Some(sigma))
    }

    pub fn binomial(mean: &str) -> Result<OutcomeModel, GenError> {
        OutcomeModel::new(MeanFn::Expr(Expr::parse(mean)?), Family::Binomial, None)
    }

    pub fn poisson(mean: &str) -> Result<OutcomeModel, GenError> {
        OutcomeModel::new(MeanFn::Expr(Expr::parse(mean)?), Family::Poisson, None)
    }

    pub fn from_callback(
        label: impl Into<String>,
        f: MeanCallback,
        family: Family,
        sigma: Option<f64>,
    ) -> Result<OutcomeModel, GenError> {
        OutcomeModel::new(
            MeanFn::Callback {
                label: label.into(),
                f,
            },
            family,
            sigma,
        )
    }

    pub fn mean(&self) -> &MeanFn {
        &self.mean
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<OutcomeModel, GenError> {
        if self.family != Family::Gaussian {
            return Err(GenError::Sigma);
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GenError::SigmaValue(sigma));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Multiply the mean function by `c` (on the linear-predictor scale).
    pub fn with_multiplier(mut self, c: f64) -> OutcomeModel {
        self.multiplier = c;
        self
    }

    /// Override the coefficient count used by the discrete-family SNR.
    pub fn with_param_count(mut self, p: usize) -> OutcomeModel {
        self.param_count = Some(p);
        self
    }

    /// Coefficients in the generative mean. Expressions count their
    /// additive terms; callbacks default to one per predictor plus an
    /// intercept.
    pub fn param_count(&self, n_predictors: usize) -> usize {
        self.param_count.unwrap_or_else(|| match &self.mean {
            MeanFn::Expr(e) => e.coefficient_count(),
            MeanFn::Callback { .. } => n_predictors + 1,
        })
    }

    /// Human-readable mean, including any multiplier.
    pub fn label(&self) -> String {
        if self.multiplier == 1.0 {
            self.mean.to_string()
        } else {
            format!("{}*({})", self.multiplier, self.mean)
        }
    }

    /// Linear predictor f(X), multiplier applied.
    pub fn linear_predictor(&self, x: &Table) -> Result<Vec<f64>, GenError> {
        let mut v = match &self.mean {
            MeanFn::Expr(e) => e.evaluate_batch(x)?,
            MeanFn::Callback { f, .. } => {
                let v = f(x).map_err(GenError::MeanCallback)?;
                if v.len() != x.nrows() {
                    return Err(GenError::MeanLength {
                        got: v.len(),
                        want: x.nrows(),
                    });
                }
                if let Some(row) = v.iter().position(|y| !y.is_finite()) {
                    return Err(GenError::MeanCallback(format!("non-finite value at row {row}")));
                }
                v
            }
        };
        if self.multiplier != 1.0 {
            for y in v.iter_mut() {
                *y *= self.multiplier;
            }
        }
        Ok(v)
    }

    /// Draw one outcome per row of `x`.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, x: &Table, rng: &mut R) -> Result<Vec<f64>, GenError> {
        let eta = self.linear_predictor(x)?;
        match self.family {
            Family::Gaussian => {
                let sigma = self.sigma.expect("gaussian model carries sigma");
                Ok(eta
                    .into_iter()
                    .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect())
            }
            Family::Binomial => Ok(eta
                .into_iter()
                .map(|m| if rng.random::<f64>() < logistic(m) { 1.0 } else { 0.0 })
                .collect()),
            Family::Poisson => {
                let mut out = Vec::with_capacity(eta.len());
                for (row, m) in eta.into_iter().enumerate() {
                    let lambda = m.exp();
                    if !(lambda <= POISSON_MAX_MEAN) {
                        return Err(GenError::PoissonOverflow { row, eta: m });
                    }
                    out.push(if lambda > 0.0 {
                        Poisson::new(lambda).expect("positive finite mean").sample(rng)
                    } else {
                        0.0
                    });
                }
                Ok(out)
            }
        }
    }
}
