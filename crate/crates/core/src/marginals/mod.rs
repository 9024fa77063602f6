//! Univariate marginal distributions addressed through their quantile
//! functions, plus the distribution functions needed by inference.
//!
//! Marginals are written in config files as quantile-function calls with
//! named arguments, e.g. `qnorm(mean = 0, sd = 1)` or
//! `qmultinom(probs = c(0.5, 0.3, 0.2))`.

mod normal;
mod tails;

use std::fmt;

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use thiserror::Error;

pub use normal::{inv_std_normal, std_normal_cdf, std_normal_sf};
pub use tails::TailDist;

use crate::table::DType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarginalError {
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),
    #[error("malformed marginal `{text}`: {msg}")]
    Malformed { text: String, msg: String },
    #[error("`{dist}`: missing argument `{arg}`")]
    MissingArgument { dist: String, arg: String },
    #[error("`{dist}`: unexpected argument `{arg}`")]
    UnexpectedArgument { dist: String, arg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarginalKind {
    Normal { mean: f64, sd: f64 },
    Uniform { min: f64, max: f64 },
    Binomial { size: u64, prob: f64 },
    Poisson { lambda: f64 },
    /// Category codes 1..=K.
    Multinomial { probs: Vec<f64> },
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, rate: f64 },
    /// Sorted sample; quantiles follow the unsmoothed empirical CDF.
    Empirical { sorted: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSpec {
    kind: MarginalKind,
    dtype: DType,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, MarginalError> {
    Err(MarginalError::InvalidParameter(msg.into()))
}

impl MarginalKind {
    pub fn validate(&self) -> Result<(), MarginalError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be finite"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        match self {
            MarginalKind::Normal { mean, sd } => {
                finite("mean", *mean)?;
                positive("sd", *sd)
            }
            MarginalKind::Uniform { min, max } => {
                finite("min", *min)?;
                finite("max", *max)?;
                if min < max {
                    Ok(())
                } else {
                    invalid(format!("min ({min}) must be below max ({max})"))
                }
            }
            MarginalKind::Binomial { prob, .. } => {
                if (0.0..=1.0).contains(prob) {
                    Ok(())
                } else {
                    invalid(format!("prob must be in [0, 1], got {prob}"))
                }
            }
            MarginalKind::Poisson { lambda } => positive("lambda", *lambda),
            MarginalKind::Multinomial { probs } => {
                if probs.is_empty() {
                    return invalid("probs must be nonempty");
                }
                if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return invalid("probs must all be nonnegative");
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return invalid(format!("probs must sum to 1, got {total}"));
                }
                Ok(())
            }
            MarginalKind::LogNormal { meanlog, sdlog } => {
                finite("meanlog", *meanlog)?;
                positive("sdlog", *sdlog)
            }
            MarginalKind::Gamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            MarginalKind::Empirical { sorted } => {
                if sorted.is_empty() {
                    return invalid("empirical sample must be nonempty");
                }
                if sorted.iter().any(|v| !v.is_finite()) {
                    return invalid("empirical sample must be finite");
                }
                if sorted.windows(2).any(|w| w[0] > w[1]) {
                    return invalid("empirical sample must be sorted ascending");
                }
                Ok(())
            }
        }
    }

    /// Pseudo-inverse F⁻¹(u) = inf{t : F(t) ≥ u}. Caller guarantees
    /// 0 < u < 1 and a validated spec.
    fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            MarginalKind::Normal { mean, sd } => mean + sd * normal_quantile(u),
            MarginalKind::Uniform { min, max } => min + u * (max - min),
            MarginalKind::LogNormal { meanlog, sdlog } => (meanlog + sdlog * normal_quantile(u)).exp(),
            MarginalKind::Gamma { shape, rate } => gamma_quantile(*shape, u) / rate,
            MarginalKind::Binomial { size, prob } => binomial_quantile(*size, *prob, u) as f64,
            MarginalKind::Poisson { lambda } => poisson_quantile(*lambda, u) as f64,
            MarginalKind::Multinomial { probs } => {
                let target = fuzz(u);
                let mut cum = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    cum += p;
                    if cum >= target {
                        return (k + 1) as f64;
                    }
                }
                // cumulative sum fell a rounding error short of u
                probs.iter().rposition(|p| *p > 0.0).map_or(probs.len(), |k| k + 1) as f64
            }
            MarginalKind::Empirical { sorted } => {
                let n = sorted.len();
                let k = ((u * n as f64).ceil() as usize).clamp(1, n);
                sorted[k - 1]
            }
        }
    }
}

fn normal_quantile(u: f64) -> f64 {
    inv_std_normal(u).expect("u checked by caller")
}

// Guards discrete pseudo-inverses against u landing a few ulps above a CDF
// jump point.
fn fuzz(u: f64) -> f64 {
    u * (1.0 - 64.0 * f64::EPSILON)
}

fn discrete_search(u: f64, guess: f64, max: Option<u64>, cdf: impl Fn(u64) -> f64) -> u64 {
    let target = fuzz(u);
    let cap = max.unwrap_or(u64::MAX);
    let mut k = if guess.is_finite() && guess > 0.0 {
        (guess.floor() as u64).min(cap)
    } else {
        0
    };
    if cdf(k) >= target {
        while k > 0 && cdf(k - 1) >= target {
            k -= 1;
        }
    } else {
        while k < cap && cdf(k) < target {
            k += 1;
        }
    }
    k
}

fn binomial_quantile(size: u64, prob: f64, u: f64) -> u64 {
    if prob == 0.0 || size == 0 {
        return 0;
    }
    if prob == 1.0 {
        return size;
    }
    let n = size as f64;
    let guess = n * prob + (n * prob * (1.0 - prob)).sqrt() * normal_quantile(u);
    discrete_search(u, guess, Some(size), |k| {
        if k >= size {
            1.0
        } else {
            beta_reg((size - k) as f64, k as f64 + 1.0, 1.0 - prob)
        }
    })
}

fn poisson_quantile(lambda: f64, u: f64) -> u64 {
    let guess = lambda + lambda.sqrt() * normal_quantile(u);
    discrete_search(u, guess, None, |k| gamma_ur(k as f64 + 1.0, lambda))
}

/// Unit-rate gamma quantile by safeguarded Newton iteration.
fn gamma_quantile(shape: f64, u: f64) -> f64 {
    let ln_norm = ln_gamma(shape);
    let density = |x: f64| ((shape - 1.0) * x.ln() - x - ln_norm).exp();
    // Wilson–Hilferty start, clipped away from zero.
    let z = normal_quantile(u);
    let c = 1.0 / (9.0 * shape);
    let mut x = (shape * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-3);
    if shape < 1.0 {
        // small-shape lower tail: F(x) ≈ x^a / Γ(a+1)
        let approx = (u.ln() + ln_gamma(shape + 1.0)) / shape;
        x = x.min(approx.exp().max(1e-300));
    }
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let f = gamma_lr(shape, x) - u;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = density(x);
        let mut next = x - f / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = if hi.is_finite() {
                if lo > 0.0 {
                    (lo * hi).sqrt()
                } else {
                    0.5 * hi
                }
            } else {
                2.0 * x
            };
        }
        if (next - x).abs() <= 1e-15 * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

impl MarginalSpec {
    pub fn new(kind: MarginalKind) -> Result<MarginalSpec, MarginalError> {
        kind.validate()?;
        Ok(MarginalSpec {
            kind,
            dtype: DType::Numeric,
        })
    }

    pub fn empirical(mut values: Vec<f64>) -> Result<MarginalSpec, MarginalError> {
        values.sort_by(f64::total_cmp);
        MarginalSpec::new(MarginalKind::Empirical { sorted: values })
    }

    pub fn with_dtype(mut self, dtype: DType) -> MarginalSpec {
        self.dtype = dtype;
        self
    }

    pub fn kind(&self) -> &MarginalKind {
        &self.kind
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn quantile(&self, u: f64) -> Result<f64, MarginalError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(MarginalError::ProbabilityOutOfRange(u));
        }
        Ok(self.kind.quantile_unchecked(u))
    }

    /// Like [`quantile`](Self::quantile) but clamps `u` into the open
    /// interval; used when `u` comes from Φ(z) and may round to 0 or 1.
    pub fn quantile_clamped(&self, u: f64) -> f64 {
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        self.kind.quantile_unchecked(u)
    }

    /// The values a discrete marginal can emit, if finite and small.
    pub fn support_codes(&self) -> Option<Vec<f64>> {
        match &self.kind {
            MarginalKind::Multinomial { probs } => Some((1..=probs.len()).map(|k| k as f64).collect()),
            MarginalKind::Binomial { size, .. } if *size <= 10_000 => {
                Some((0..=*size).map(|k| k as f64).collect())
            }
            MarginalKind::Empirical { sorted } => {
                let mut v = sorted.clone();
                v.dedup();
                Some(v)
            }
            _ => None,
        }
    }
}

impl fmt::Display for MarginalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MarginalKind::Normal { mean, sd } => write!(f, "qnorm(mean = {mean}, sd = {sd})"),
            MarginalKind::Uniform { min, max } => write!(f, "qunif(min = {min}, max = {max})"),
            MarginalKind::Binomial { size, prob } => write!(f, "qbinom(size = {size}, prob = {prob})"),
            MarginalKind::Poisson { lambda } => write!(f, "qpois(lambda = {lambda})"),
            MarginalKind::Multinomial { probs } => {
                let p: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
                write!(f, "qmultinom(probs = c({}))", p.join(", "))
            }
            MarginalKind::LogNormal { meanlog, sdlog } => {
                write!(f, "qlnorm(meanlog = {meanlog}, sdlog = {sdlog})")
            }
            MarginalKind::Gamma { shape, rate } => write!(f, "qgamma(shape = {shape}, rate = {rate})"),
            MarginalKind::Empirical { sorted } => write!(f, "empirical(n = {})", sorted.len()),
        }
    }
}

enum ArgValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Parse a `q<name>(<named args>)` marginal string.
pub fn parse_marginal(text: &str) -> Result<MarginalSpec, MarginalError> {
    let malformed = |msg: &str| MarginalError::Malformed {
        text: text.to_string(),
        msg: msg.to_string(),
    };
    let t = text.trim();
    let open = t.find('(').ok_or_else(|| malformed("expected `(`"))?;
    if !t.ends_with(')') {
        return Err(malformed("expected closing `)`"));
    }
    let name = t[..open].trim();
    let body = &t[open + 1..t.len() - 1];
    let mut args: Vec<(String, ArgValue)> = Vec::new();
    if !body.trim().is_empty() {
        for piece in split_top_level(body) {
            let (key, val) = piece
                .split_once('=')
                .ok_or_else(|| malformed("arguments must be named (`name = value`)"))?;
            let key = key.trim().to_string();
            let val = val.trim();
            let value = if let Some(inner) = val.strip_prefix("c(").and_then(|v| v.strip_suffix(')')) {
                let nums = inner
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| malformed("non-numeric entry in c(...)"))?;
                ArgValue::Vector(nums)
            } else {
                ArgValue::Scalar(
                    val.parse::<f64>()
                        .map_err(|_| malformed(&format!("argument `{key}` is not numeric")))?,
                )
            };
            if args.iter().any(|(k, _)| *k == key) {
                return Err(malformed(&format!("argument `{key}` given twice")));
            }
            args.push((key, value));
        }
    }

    let expected: &[&str] = match name {
        "qnorm" => &["mean", "sd"],
        "qunif" => &["min", "max"],
        "qbinom" => &["size", "prob"],
        "qpois" => &["lambda"],
        "qmultinom" => &["probs"],
        "qlnorm" => &["meanlog", "sdlog"],
        "qgamma" => &["shape", "rate"],
        other => return Err(MarginalError::UnknownDistribution(other.to_string())),
    };
    for (k, _) in &args {
        if !expected.contains(&k.as_str()) {
            return Err(MarginalError::UnexpectedArgument {
                dist: name.to_string(),
                arg: k.clone(),
            });
        }
    }
    let get = |arg: &str| -> Result<&ArgValue, MarginalError> {
        args.iter()
            .find(|(k, _)| k == arg)
            .map(|(_, v)| v)
            .ok_or_else(|| MarginalError::MissingArgument {
                dist: name.to_string(),
                arg: arg.to_string(),
            })
    };
    let scalar = |arg: &str| -> Result<f64, MarginalError> {
        match get(arg)? {
            ArgValue::Scalar(v) => Ok(*v),
            ArgValue::Vector(_) => invalid(format!("`{arg}` must be a scalar")),
        }
    };

    let kind = match name {
        "qnorm" => MarginalKind::Normal {
            mean: scalar("mean")?,
            sd: scalar("sd")?,
        },
        "qunif" => MarginalKind::Uniform {
            min: scalar("min")?,
            max: scalar("max")?,
        },
        "qbinom" => {
            let size = scalar("size")?;
            if size < 0.0 || size.fract() != 0.0 {
                return invalid(format!("size must be a nonnegative integer, got {size}"));
            }
            MarginalKind::Binomial {
                size: size as u64,
                prob: scalar("prob")?,
            }
        }
        "qpois" => MarginalKind::Poisson {
            lambda: scalar("lambda")?,
        },
        "qmultinom" => match get("probs")? {
            ArgValue::Vector(v) => MarginalKind::Multinomial { probs: v.clone() },
            ArgValue::Scalar(v) => MarginalKind::Multinomial { probs: vec![*v] },
        },
        "qlnorm" => MarginalKind::LogNormal {
            meanlog: scalar("meanlog")?,
            sdlog: scalar("sdlog")?,
        },
        "qgamma" => MarginalKind::Gamma {
            shape: scalar("shape")?,
            rate: scalar("rate")?,
        },
        _ => unreachable!("name matched above"),
    };
    MarginalSpec::new(kind)
}
