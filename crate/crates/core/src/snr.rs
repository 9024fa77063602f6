//! Signal-to-noise ratio of a data-generating process, and rescaling of
//! the noise or the mean function to hit a target SNR.
//!
//! Gaussian outcomes use Var(f(X)) / σ². Binomial and Poisson outcomes use
//! the deviance-based ratio
//! (Dev(w, w̄) − Dev(w, h) + 1 − p) / (Dev(w, h) + p),
//! where h is the inverse-link mean, w a draw from the outcome
//! distribution and p the coefficient count of the mean function.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{Family, GenError, OutcomeModel, PredictorModel, POISSON_MAX_MEAN};
use crate::marginals::{MarginalKind, MarginalSpec};

#[derive(Debug, Error)]
pub enum SnrError {
    #[error("need m >= 2 and R >= 1 (got m = {m}, R = {r})")]
    Sizes { m: usize, r: usize },
    #[error("target SNR must be positive and finite, got {0}")]
    Target(f64),
    #[error("noise scaling applies to the gaussian family only")]
    NotGaussian,
    #[error("mean function is constant over the predictor distribution")]
    ConstantMean,
    #[error("target SNR {target} unreachable: multipliers in [1e-4, 1e4] give SNR from {low} to {high}")]
    Unreachable { target: f64, low: f64, high: f64 },
    #[error(transparent)]
    Gen(#[from] GenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub snr: f64,
    /// Bootstrap standard error.
    pub se: f64,
    /// Predictor draws used.
    pub m: usize,
    /// Bootstrap replicates.
    #[serde(rename = "R")]
    pub r: usize,
}

/// Bernoulli deviance of a single observation.
pub fn bernoulli_unit_deviance(w: f64, h: f64) -> f64 {
    2.0 * (xlogy(w, w / h) + xlogy(1.0 - w, (1.0 - w) / (1.0 - h)))
}

/// Poisson deviance of a single observation.
pub fn poisson_unit_deviance(w: f64, h: f64) -> f64 {
    2.0 * (xlogy(w, w / h) - (w - h))
}

/// Total deviance Σ d(w_i, h_i).
pub fn deviance(family: Family, w: &[f64], h: &[f64]) -> f64 {
    let unit = match family {
        Family::Binomial => bernoulli_unit_deviance,
        Family::Poisson => poisson_unit_deviance,
        Family::Gaussian => |w: f64, h: f64| (w - h) * (w - h),
    };
    w.iter().zip(h).map(|(a, b)| unit(*a, *b)).sum()
}

// x·log(y) with 0·log(anything) = 0.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// The discrete-family SNR from observed w and fitted mean h.
pub fn discrete_snr(family: Family, w: &[f64], h: &[f64], p: usize) -> f64 {
    let wbar = w.iter().sum::<f64>() / w.len() as f64;
    let null: Vec<f64> = vec![wbar; w.len()];
    let d_null = deviance(family, w, &null);
    let d_fit = deviance(family, w, h);
    let p = p as f64;
    (d_null - d_fit + 1.0 - p) / (d_fit + p)
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn spread(reps: &[f64]) -> f64 {
    if reps.len() < 2 {
        0.0
    } else {
        sample_var(reps).sqrt()
    }
}

// Bounded away from 0 and 1 so the Bernoulli deviance stays finite.
fn clamp_prob(h: f64) -> f64 {
    h.clamp(1e-15, 1.0 - 1e-15)
}

/// Per-row pieces that let bootstrap replicates of the discrete SNR be
/// computed from index sums alone.
struct DiscreteTerms {
    family: Family,
    w: Vec<f64>,
    unit: Vec<f64>,
    wlogw: Vec<f64>,
    p: f64,
}

impl DiscreteTerms {
    fn new(family: Family, w: Vec<f64>, h: &[f64], p: usize) -> DiscreteTerms {
        let unit = match family {
            Family::Binomial => w.iter().zip(h).map(|(a, b)| bernoulli_unit_deviance(*a, *b)).collect(),
            _ => w.iter().zip(h).map(|(a, b)| poisson_unit_deviance(*a, *b)).collect(),
        };
        let wlogw = w.iter().map(|a| xlogy(*a, *a)).collect();
        DiscreteTerms {
            family,
            w,
            unit,
            wlogw,
            p: p as f64,
        }
    }

    fn snr_from(&self, sum_w: f64, sum_wlogw: f64, d_fit: f64, m: f64) -> f64 {
        let wbar = sum_w / m;
        let d_null = match self.family {
            // Σ w log(w/w̄) + (1−w) log((1−w)/(1−w̄)) with w ∈ {0, 1}
            Family::Binomial => -2.0 * (xlogy(sum_w, wbar) + xlogy(m - sum_w, 1.0 - wbar)),
            // Σ (w − w̄) = 0, leaving Σ w log w − (Σ w) log w̄
            _ => 2.0 * (sum_wlogw - xlogy(sum_w, wbar)),
        };
        (d_null - d_fit + 1.0 - self.p) / (d_fit + self.p)
    }

    fn full(&self) -> f64 {
        self.snr_from(
            self.w.iter().sum(),
            self.wlogw.iter().sum(),
            self.unit.iter().sum(),
            self.w.len() as f64,
        )
    }

    fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.w.len();
        let (mut sw, mut swl, mut sd) = (0.0, 0.0, 0.0);
        for _ in 0..m {
            let i = rng.random_range(0..m);
            sw += self.w[i];
            swl += self.wlogw[i];
            sd += self.unit[i];
        }
        self.snr_from(sw, swl, sd, m as f64)
    }
}

fn check_sizes(m: usize, r: usize) -> Result<(), SnrError> {
    if m < 2 || r < 1 {
        return Err(SnrError::Sizes { m, r });
    }
    Ok(())
}

fn bootstrap_var<R: Rng + ?Sized>(f: &[f64], r: usize, rng: &mut R) -> Vec<f64> {
    let m = f.len();
    (0..r)
        .map(|_| {
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..m {
                let v = f[rng.random_range(0..m)];
                s += v;
                s2 += v * v;
            }
            let mean = s / m as f64;
            ((s2 - m as f64 * mean * mean) / (m as f64 - 1.0)).max(0.0)
        })
        .collect()
}

/// Monte Carlo SNR estimate from `m` predictor draws with an `r`-replicate
/// bootstrap standard error.
pub fn estimate_snr<R: Rng + ?Sized>(
    xmod: &PredictorModel,
    ymod: &OutcomeModel,
    m: usize,
    r: usize,
    rng: &mut R,
) -> Result<SnrEstimate, SnrError> {
    check_sizes(m, r)?;
    let x = xmod.sample_predictors(m, rng)?;
    let eta = ymod.linear_predictor(&x)?;
    match ymod.family() {
        Family::Gaussian => {
            let s2 = ymod.sigma().expect("gaussian model carries sigma").powi(2);
            let snr = sample_var(&eta) / s2;
            let reps: Vec<f64> = bootstrap_var(&eta, r, rng).into_iter().map(|v| v / s2).collect();
            Ok(SnrEstimate {
                snr,
                se: spread(&reps),
                m,
                r,
            })
        }
        family => {
            let w = ymod.sample_outcome(&x, rng)?;
            let h: Vec<f64> = eta
                .iter()
                .map(|e| match family {
                    Family::Binomial => clamp_prob(family.inverse_link(*e)),
                    _ => family.inverse_link(*e),
                })
                .collect();
            let terms = DiscreteTerms::new(family, w, &h, ymod.param_count(xmod.ncols()));
            let snr = terms.full();
            let reps: Vec<f64> = (0..r).map(|_| terms.resample(rng)).collect();
            Ok(SnrEstimate {
                snr,
                se: spread(&reps),
                m,
                r,
            })
        }
    }
}

fn check_target(target: f64) -> Result<(), SnrError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(SnrError::Target(target));
    }
    Ok(())
}

fn signal_variance<R: Rng + ?Sized>(
    xmod: &PredictorModel,
    ymod: &OutcomeModel,
    m: usize,
    rng: &mut R,
) -> Result<f64, SnrError> {
    check_sizes(m, 1)?;
    let x = xmod.sample_predictors(m, rng)?;
    let v = sample_var(&ymod.linear_predictor(&x)?);
    if !(v > 0.0) {
        return Err(SnrError::ConstantMean);
    }
    Ok(v)
}

/// Set σ so that Var(f)/σ² equals `target`.
pub fn scale_sigma<R: Rng + ?Sized>(
    target: f64,
    ymod: &OutcomeModel,
    xmod: &PredictorModel,
    m: usize,
    rng: &mut R,
) -> Result<OutcomeModel, SnrError> {
    check_target(target)?;
    if ymod.family() != Family::Gaussian {
        return Err(SnrError::NotGaussian);
    }
    let v = signal_variance(xmod, ymod, m, rng)?;
    Ok(ymod.clone().with_sigma((v / target).sqrt())?)
}

/// Multiply the mean function so the SNR equals `target`. Gaussian models
/// are scaled in closed form; discrete families by bisection on the
/// multiplier with common random numbers across candidates.
pub fn scale_f<R: Rng + ?Sized>(
    target: f64,
    ymod: &OutcomeModel,
    xmod: &PredictorModel,
    m: usize,
    rng: &mut R,
) -> Result<OutcomeModel, SnrError> {
    check_target(target)?;
    match ymod.family() {
        Family::Gaussian => {
            let v = signal_variance(xmod, ymod, m, rng)?;
            let s2 = ymod.sigma().expect("gaussian model carries sigma").powi(2);
            let k = (target * s2 / v).sqrt();
            Ok(ymod.clone().with_multiplier(ymod.multiplier() * k))
        }
        family => {
            check_sizes(m, 1)?;
            let x = xmod.sample_predictors(m, rng)?;
            let eta = ymod.linear_predictor(&x)?;
            if sample_var(&eta) <= 0.0 {
                return Err(SnrError::ConstantMean);
            }
            let u: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let p = ymod.param_count(xmod.ncols());
            let c = bisect_multiplier(family, &eta, &u, p, target)?;
            Ok(ymod.clone().with_multiplier(ymod.multiplier() * c))
        }
    }
}

const C_LOW: f64 = 1e-4;
const C_HIGH: f64 = 1e4;

// SNR at multiplier c with fixed uniforms; +∞ when a Poisson mean overflows.
fn crn_snr(family: Family, eta: &[f64], u: &[f64], p: usize, c: f64) -> f64 {
    let mut h = Vec::with_capacity(eta.len());
    let mut w = Vec::with_capacity(eta.len());
    for (e, ui) in eta.iter().zip(u) {
        let hi = family.inverse_link(c * e);
        match family {
            Family::Binomial => {
                w.push(if *ui < hi { 1.0 } else { 0.0 });
                h.push(clamp_prob(hi));
            }
            _ => {
                if !(hi <= POISSON_MAX_MEAN) {
                    return f64::INFINITY;
                }
                let wi = if hi > 0.0 {
                    MarginalSpec::new(MarginalKind::Poisson { lambda: hi })
                        .expect("positive finite mean")
                        .quantile_clamped(*ui)
                } else {
                    0.0
                };
                w.push(wi);
                h.push(hi.max(f64::MIN_POSITIVE));
            }
        }
    }
    discrete_snr(family, &w, &h, p)
}

fn bisect_multiplier(family: Family, eta: &[f64], u: &[f64], p: usize, target: f64) -> Result<f64, SnrError> {
    let g = |c: f64| crn_snr(family, eta, u, p, c);
    let (g_lo, g_hi) = (g(C_LOW), g(C_HIGH));
    if !(g_lo <= target && target <= g_hi) {
        return Err(SnrError::Unreachable {
            target,
            low: g_lo,
            high: g_hi,
        });
    }
    let (mut lo, mut hi) = (C_LOW.ln(), C_HIGH.ln());
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..60 {
        mid = 0.5 * (lo + hi);
        let v = g(mid.exp());
        if (v - target).abs() <= 0.02 * target {
            break;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid.exp())
}
