//! Power estimates from criterion values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SimResult;
use crate::inference::PROBABILITY_CRITERIA;

/// Direction of the significance comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum How {
    /// value ≤ threshold (p-values).
    #[default]
    Lesser,
    /// value ≥ threshold (inclusion probabilities).
    Greater,
}

impl FromStr for How {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lesser" => Ok(How::Lesser),
            "greater" => Ok(How::Greater),
            other => Err(format!("unknown comparison `{other}` (expected lesser or greater)")),
        }
    }
}

impl fmt::Display for How {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            How::Lesser => "lesser",
            How::Greater => "greater",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummaryError {
    #[error("criterion `{0}` does not appear in the results")]
    UnknownCriterion(String),
    #[error("cell {0} has no successful iterations")]
    NoSuccesses(usize),
    #[error("threshold {value} is invalid for criterion `{crit}`")]
    Threshold { crit: String, value: f64 },
    #[error("at least one threshold is required")]
    NoThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub inference: String,
    pub effect: String,
    pub outcome: String,
    pub cell: usize,
    pub n: usize,
    pub snr: f64,
    pub threshold: f64,
    pub power: f64,
    /// √(p(1 − p)/successes).
    pub se: f64,
    pub successes: usize,
}

/// Fraction of successful iterations whose criterion value meets each
/// threshold, per cell and effect. Iterations that lack an effect count as
/// not meeting it.
pub fn power_summary<S>(results: &S, crit: &str, thres: &[f64], how: How) -> Result<Vec<PowerRow>, SummaryError>
where
    S: AsRef<[SimResult]> + ?Sized,
{
    let cells = results.as_ref();
    if thres.is_empty() {
        return Err(SummaryError::NoThresholds);
    }
    let prob = PROBABILITY_CRITERIA.contains(&crit);
    if let Some(t) = thres
        .iter()
        .find(|t| !t.is_finite() || (prob && !(0.0..=1.0).contains(*t)))
    {
        return Err(SummaryError::Threshold {
            crit: crit.to_string(),
            value: *t,
        });
    }
    let present = cells
        .iter()
        .any(|c| c.results.iter().any(|it| it.criteria.0.contains_key(crit)));
    if !present {
        return Err(SummaryError::UnknownCriterion(crit.to_string()));
    }
    let mut rows = Vec::new();
    for cell in cells {
        let s = cell.successes();
        if s == 0 {
            return Err(SummaryError::NoSuccesses(cell.cell));
        }
        let mut effects: Vec<&str> = Vec::new();
        for it in &cell.results {
            if let Some(m) = it.criteria.0.get(crit) {
                for k in m.keys() {
                    if !effects.contains(&k.as_str()) {
                        effects.push(k);
                    }
                }
            }
        }
        for effect in effects {
            let values: Vec<Option<f64>> = cell
                .results
                .iter()
                .map(|it| it.criteria.get(crit, effect))
                .collect();
            for &t in thres {
                let hits = values
                    .iter()
                    .filter(|v| match (v, how) {
                        (Some(v), How::Lesser) => *v <= t,
                        (Some(v), How::Greater) => *v >= t,
                        (None, _) => false,
                    })
                    .count();
                let power = hits as f64 / s as f64;
                rows.push(PowerRow {
                    inference: cell.inference.clone(),
                    effect: effect.to_string(),
                    outcome: cell.outcome.clone(),
                    cell: cell.cell,
                    n: cell.n,
                    snr: cell.snr.snr,
                    threshold: t,
                    power,
                    se: (power * (1.0 - power) / s as f64).sqrt(),
                    successes: s,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ErrorHandling, Iteration};
    use crate::inference::CritResult;
    use crate::snr::SnrEstimate;
    use proptest::prelude::*;
    use std::time::Duration;

    fn result(values: &[f64], crit: &str) -> SimResult {
        SimResult {
            inference: "test".into(),
            outcome: "f".into(),
            family: "gaussian".into(),
            predictors: "resampling".into(),
            s: values.len(),
            n: 10,
            seed: 0,
            cell: 0,
            ymod_index: 0,
            n_index: 0,
            errorhandling: ErrorHandling::Remove,
            snr: SnrEstimate {
                snr: 0.1,
                se: 0.0,
                m: 2,
                r: 1,
            },
            results: values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut c = CritResult::default();
                    c.insert(crit, "x", *v);
                    Iteration {
                        iteration: i,
                        criteria: c,
                    }
                })
                .collect(),
            errors: vec![],
            n_errors: 0,
            elapsed: Duration::ZERO,
        }
    }

    #[test]
    fn counts_lesser() {
        let r = result(&[0.01, 0.2, 0.04, 0.07], "pval");
        let rows = power_summary(&r, "pval", &[0.05], How::Lesser).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].power, 0.5);
        assert!((rows[0].se - (0.25f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn threshold_sweep_greater() {
        let r = result(&[0.55, 0.65, 0.75, 0.85, 0.95, 0.3], "pip");
        let rows = power_summary(&r, "pip", &[0.5, 0.6, 0.7, 0.8], How::Greater).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[1].power <= w[0].power));
    }

    #[test]
    fn errors() {
        let r = result(&[0.01], "pval");
        assert!(matches!(
            power_summary(&r, "pip", &[0.5], How::Greater),
            Err(SummaryError::UnknownCriterion(_))
        ));
        assert!(matches!(
            power_summary(&r, "pval", &[1.5], How::Lesser),
            Err(SummaryError::Threshold { .. })
        ));
        let empty = result(&[], "pval");
        assert!(power_summary(&[r, empty][..], "pval", &[0.05], How::Lesser).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_threshold(values in prop::collection::vec(0.0f64..1.0, 1..50),
                                 mut ts in prop::collection::vec(0.0f64..1.0, 2..8)) {
            ts.sort_by(f64::total_cmp);
            let r = result(&values, "pval");
            let lesser = power_summary(&r, "pval", &ts, How::Lesser).unwrap();
            prop_assert!(lesser.windows(2).all(|w| w[0].power <= w[1].power));
            let greater = power_summary(&r, "pval", &ts, How::Greater).unwrap();
            prop_assert!(greater.windows(2).all(|w| w[0].power >= w[1].power));
        }
    }
}
