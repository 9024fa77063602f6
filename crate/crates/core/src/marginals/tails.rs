//! Distribution functions for test statistics: Student t, central and
//! noncentral F, chi-squared.

#![allow(clippy::excessive_precision)]

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::MarginalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailDist {
    StudentT { df: f64 },
    F { df1: f64, df2: f64 },
    NoncentralF { df1: f64, df2: f64, ncp: f64 },
    ChiSq { df: f64 },
}

fn positive(name: &str, v: f64) -> Result<(), MarginalError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(MarginalError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl TailDist {
    pub fn validate(&self) -> Result<(), MarginalError> {
        match *self {
            TailDist::StudentT { df } | TailDist::ChiSq { df } => positive("df", df),
            TailDist::F { df1, df2 } => {
                positive("df1", df1)?;
                positive("df2", df2)
            }
            TailDist::NoncentralF { df1, df2, ncp } => {
                positive("df1", df1)?;
                positive("df2", df2)?;
                if ncp >= 0.0 && ncp.is_finite() {
                    Ok(())
                } else {
                    Err(MarginalError::InvalidParameter(format!(
                        "noncentrality must be nonnegative, got {ncp}"
                    )))
                }
            }
        }
    }

    fn check_x(&self, x: f64) -> Result<(), MarginalError> {
        self.validate()?;
        if x.is_nan() {
            return Err(MarginalError::InvalidParameter("x is NaN".into()));
        }
        match self {
            TailDist::StudentT { .. } => Ok(()),
            _ if x < 0.0 => Err(MarginalError::InvalidParameter(format!(
                "x must be nonnegative, got {x}"
            ))),
            _ => Ok(()),
        }
    }

    /// P(X ≤ x).
    pub fn lower(&self, x: f64) -> Result<f64, MarginalError> {
        self.check_x(x)?;
        Ok(match *self {
            TailDist::StudentT { df } => {
                let half = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + x * x));
                if x <= 0.0 {
                    half
                } else {
                    1.0 - half
                }
            }
            TailDist::F { df1, df2 } => f_lower(x, df1, df2),
            TailDist::NoncentralF { df1, df2, ncp } => ncf_lower(x, df1, df2, ncp),
            TailDist::ChiSq { df } => {
                if x == 0.0 {
                    0.0
                } else {
                    gamma_lr(df / 2.0, x / 2.0)
                }
            }
        })
    }

    /// P(X > x).
    pub fn upper(&self, x: f64) -> Result<f64, MarginalError> {
        self.check_x(x)?;
        Ok(match *self {
            TailDist::StudentT { df } => {
                let half = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + x * x));
                if x >= 0.0 {
                    half
                } else {
                    1.0 - half
                }
            }
            TailDist::F { df1, df2 } => f_upper(x, df1, df2),
            TailDist::NoncentralF { df1, df2, ncp } => 1.0 - ncf_lower(x, df1, df2, ncp),
            TailDist::ChiSq { df } => {
                if x == 0.0 {
                    1.0
                } else {
                    gamma_ur(df / 2.0, x / 2.0)
                }
            }
        })
    }

    /// Two-sided p-value P(|T| ≥ |t|) for the t distribution.
    pub fn two_sided(&self, t: f64) -> Result<f64, MarginalError> {
        match *self {
            TailDist::StudentT { df } => {
                self.check_x(t)?;
                Ok(beta_reg(df / 2.0, 0.5, df / (df + t * t)))
            }
            _ => Err(MarginalError::InvalidParameter(
                "two-sided tail only defined for the t distribution".into(),
            )),
        }
    }

    /// Smallest x with P(X ≤ x) ≥ p, by bracketing bisection on the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64, MarginalError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(MarginalError::ProbabilityOutOfRange(p));
        }
        self.validate()?;
        let (mut lo, mut hi) = match self {
            TailDist::StudentT { .. } => (-1.0, 1.0),
            _ => (0.0, 1.0),
        };
        while self.lower(hi)? < p {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(MarginalError::InvalidParameter("quantile diverged".into()));
            }
        }
        if matches!(self, TailDist::StudentT { .. }) {
            while self.lower(lo)? > p {
                lo *= 2.0;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.lower(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

fn f_lower(x: f64, df1: f64, df2: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let num = df1 * x;
    beta_reg(df1 / 2.0, df2 / 2.0, num / (num + df2))
}

fn f_upper(x: f64, df1: f64, df2: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))
}

/// Noncentral F CDF as a Poisson(λ/2) mixture of regularized incomplete
/// betas, summed outward from the Poisson mode until the remaining weight
/// is negligible.
fn ncf_lower(x: f64, df1: f64, df2: f64, ncp: f64) -> f64 {
    if ncp == 0.0 {
        return f_lower(x, df1, df2);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let y = df1 * x / (df1 * x + df2);
    let mu = ncp / 2.0;
    let weight = |j: f64| (j * mu.ln() - mu - ln_gamma(j + 1.0)).exp();
    let mode = mu.floor();
    let mut total = 0.0;
    let mut mass = 0.0;
    let mut j = mode;
    loop {
        let w = weight(j);
        total += w * beta_reg(df1 / 2.0 + j, df2 / 2.0, y);
        mass += w;
        if j == 0.0 || (w < 1e-20 && mode - j > 10.0) {
            break;
        }
        j -= 1.0;
    }
    let mut j = mode + 1.0;
    loop {
        let w = weight(j);
        total += w * beta_reg(df1 / 2.0 + j, df2 / 2.0, y);
        mass += w;
        if (w < 1e-20 && j - mode > 10.0) || mass >= 1.0 - 1e-16 && w < 1e-20 {
            break;
        }
        j += 1.0;
    }
    total.clamp(0.0, 1.0)
}
