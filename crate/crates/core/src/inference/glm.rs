//! Generalized linear model fitting and per-predictor p-value criteria.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use super::formula::{Design, Formula, Term};
use super::{CritResult, InferenceError};
use crate::generators::{logistic, Family};
use crate::marginals::{std_normal_sf, TailDist};
use crate::table::Table;

const MAX_IRLS_ITER: usize = 25;
const IRLS_TOL: f64 = 1e-8;

/// Fitted coefficients with their Wald/t inference.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub family: Family,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// t statistics (gaussian) or z statistics (binomial/poisson).
    pub statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub df_residual: usize,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Term index of each coefficient; `None` for the intercept.
    pub column_term: Vec<Option<usize>>,
    pub terms: Vec<Term>,
}

pub(crate) fn design_matrix(d: &Design) -> DMatrix<f64> {
    DMatrix::from_fn(d.nrows, d.ncols(), |i, j| d.columns[j][i])
}

/// Least squares through a thin QR factorization. Returns β and (XᵀX)⁻¹.
pub(crate) fn least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    labels: &[String],
) -> Result<(DVector<f64>, DMatrix<f64>), InferenceError> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(InferenceError::TooFewObservations { n, k });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = x.column(j).norm();
        if !(r[(j, j)].abs() > 1e-9 * norm.max(f64::MIN_POSITIVE)) {
            return Err(InferenceError::RankDeficient(labels[j].clone()));
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| InferenceError::RankDeficient(labels[k - 1].clone()))?;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| InferenceError::RankDeficient(labels[k - 1].clone()))?;
    let cov = &rinv * rinv.transpose();
    Ok((beta, cov))
}

fn weighted_least_squares(
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    w: &DVector<f64>,
    labels: &[String],
) -> Result<(DVector<f64>, DMatrix<f64>), InferenceError> {
    let sw = w.map(f64::sqrt);
    let xw = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * sw[i]);
    let zw = z.component_mul(&sw);
    least_squares(&xw, &zw, labels)
}

fn check_response(family: Family, y: &[f64], n: usize) -> Result<(), InferenceError> {
    if y.len() != n {
        return Err(InferenceError::InvalidResponse(format!(
            "{} outcomes for {n} rows",
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(InferenceError::InvalidResponse(format!("non-finite outcome {v}")));
    }
    match family {
        Family::Binomial if y.iter().any(|v| *v != 0.0 && *v != 1.0) => Err(
            InferenceError::InvalidResponse("binomial outcomes must be 0 or 1".into()),
        ),
        Family::Poisson if y.iter().any(|v| *v < 0.0) => Err(InferenceError::InvalidResponse(
            "poisson outcomes must be nonnegative".into(),
        )),
        _ => Ok(()),
    }
}

fn unit_deviance(family: Family, y: f64, mu: f64) -> f64 {
    let ylog = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    match family {
        Family::Gaussian => (y - mu) * (y - mu),
        Family::Binomial => 2.0 * (ylog(y, mu) + ylog(1.0 - y, 1.0 - mu)),
        Family::Poisson => 2.0 * (ylog(y, mu) - (y - mu)),
    }
}

fn link_inverse(family: Family, eta: f64) -> f64 {
    match family {
        Family::Gaussian => eta,
        Family::Binomial => logistic(eta).clamp(f64::EPSILON, 1.0 - f64::EPSILON),
        Family::Poisson => eta.exp().max(f64::EPSILON),
    }
}

/// Raw IRLS iterations. Gaussian is accepted so the single-iteration
/// equivalence with least squares can be checked.
pub(crate) struct Irls {
    pub beta: DVector<f64>,
    pub cov_unscaled: DMatrix<f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mu: DVector<f64>,
}

pub(crate) fn irls(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    family: Family,
    labels: &[String],
    max_iter: usize,
) -> Result<Irls, InferenceError> {
    let n = y.len();
    let mut mu = y.map(|v| match family {
        Family::Gaussian => v,
        Family::Binomial => (v + 0.5) / 2.0,
        Family::Poisson => v + 0.1,
    });
    let mut eta = mu.map(|m| match family {
        Family::Gaussian => m,
        Family::Binomial => (m / (1.0 - m)).ln(),
        Family::Poisson => m.ln(),
    });
    let dev_of = |mu: &DVector<f64>| (0..n).map(|i| unit_deviance(family, y[i], mu[i])).sum::<f64>();
    let mut dev_old = dev_of(&mu);
    let mut out = None;
    for it in 1..=max_iter {
        // dμ/dη equals the variance function for both canonical links
        let dmu = mu.map(|m| match family {
            Family::Gaussian => 1.0,
            Family::Binomial => m * (1.0 - m),
            Family::Poisson => m,
        });
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / dmu[i]);
        let (beta, cov) = weighted_least_squares(x, &z, &dmu, labels)?;
        eta = x * &beta;
        mu = eta.map(|e| link_inverse(family, e));
        let dev = dev_of(&mu);
        if !dev.is_finite() {
            return Err(InferenceError::Diverged);
        }
        let converged = (dev - dev_old).abs() / (dev.abs() + 0.1) < IRLS_TOL;
        out = Some(Irls {
            beta,
            cov_unscaled: cov,
            deviance: dev,
            iterations: it,
            converged,
            mu: mu.clone(),
        });
        if converged {
            break;
        }
        dev_old = dev;
    }
    Ok(out.expect("at least one iteration"))
}

/// Fit `formula` to predictors `x` and outcome `y`. Gaussian models are
/// solved directly by least squares with t tests; binomial (logit) and
/// poisson (log) models by IRLS with Wald z tests.
pub fn fit_glm(x: &Table, y: &[f64], family: Family, formula: &Formula) -> Result<GlmFit, InferenceError> {
    let design = formula.design(x)?;
    check_response(family, y, design.nrows)?;
    let xm = design_matrix(&design);
    let yv = DVector::from_column_slice(y);
    let (n, k) = xm.shape();
    let (beta, covariance, deviance, iterations, converged, df, tests): (_, _, _, _, _, _, TailKind) = match family {
        Family::Gaussian => {
            let (beta, unscaled) = least_squares(&xm, &yv, &design.labels)?;
            let resid = &yv - &xm * &beta;
            let rss = resid.norm_squared();
            let df = n - k;
            let cov = unscaled * (rss / df as f64);
            (beta, cov, rss, 1, true, df, TailKind::T)
        }
        _ => {
            let fit = irls(&xm, &yv, family, &design.labels, MAX_IRLS_ITER)?;
            if !fit.converged {
                return Err(InferenceError::NotConverged(fit.iterations));
            }
            if family == Family::Binomial
                && fit.mu.iter().any(|m| *m <= 10.0 * f64::EPSILON || *m >= 1.0 - 10.0 * f64::EPSILON)
            {
                return Err(InferenceError::Separation);
            }
            (fit.beta, fit.cov_unscaled, fit.deviance, fit.iterations, true, n - k, TailKind::Z)
        }
    };
    let std_errors: Vec<f64> = (0..k).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    let statistics: Vec<f64> = (0..k).map(|j| beta[j] / std_errors[j]).collect();
    let p_values = statistics
        .iter()
        .zip(beta.iter())
        .map(|(t, b)| {
            if t.is_nan() {
                // zero standard error: exact fit
                return Ok(if *b == 0.0 { 1.0 } else { 0.0 });
            }
            match tests {
                TailKind::T => TailDist::StudentT { df: df as f64 }
                    .two_sided(*t)
                    .map_err(|e| InferenceError::Numeric(e.to_string())),
                TailKind::Z => Ok((2.0 * std_normal_sf(t.abs())).min(1.0)),
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(GlmFit {
        family,
        labels: design.labels,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        statistics,
        p_values,
        covariance,
        df_residual: df,
        deviance,
        converged,
        iterations,
        column_term: design.column_term,
        terms: design.terms,
    })
}

#[derive(Clone, Copy)]
enum TailKind {
    T,
    Z,
}

/// Overall regression F test of y on every predictor (with intercept).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest {
    pub statistic: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
    pub rss: f64,
}

pub fn ftest(x: &Table, y: &[f64]) -> Result<FTest, InferenceError> {
    let design = Formula::all_predictors().design(x)?;
    check_response(Family::Gaussian, y, design.nrows)?;
    let xm = design_matrix(&design);
    let (n, k) = xm.shape();
    if k < 2 {
        return Err(InferenceError::NoPredictors);
    }
    let yv = DVector::from_column_slice(y);
    let (beta, _) = least_squares(&xm, &yv, &design.labels)?;
    let rss = (&yv - &xm * &beta).norm_squared();
    let mean = yv.mean();
    let tss: f64 = yv.iter().map(|v| (v - mean) * (v - mean)).sum();
    let (df1, df2) = (k - 1, n - k);
    let statistic = ((tss - rss).max(0.0) / df1 as f64) / (rss / df2 as f64);
    let p_value = if statistic.is_finite() {
        TailDist::F {
            df1: df1 as f64,
            df2: df2 as f64,
        }
        .upper(statistic)
        .map_err(|e| InferenceError::Numeric(e.to_string()))?
    } else if tss > 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(FTest {
        statistic,
        df1,
        df2,
        p_value,
        rss,
    })
}

/// `{"pval": {"F-test": p}}`.
pub fn overall_ftest(x: &Table, y: &[f64]) -> Result<CritResult, InferenceError> {
    let f = ftest(x, y)?;
    let mut out = CritResult::default();
    out.insert("pval", "F-test", f.p_value);
    Ok(out)
}

/// Per-predictor minimum p-values: `pval` over every coefficient whose term
/// involves the predictor, `main_pval` over main-effect terms only and
/// `int_pval` over interaction terms only.
pub fn glm_criteria(fit: &GlmFit) -> CritResult {
    let mut order: Vec<String> = Vec::new();
    for t in &fit.terms {
        for p in t.predictors() {
            if !order.contains(&p) {
                order.push(p);
            }
        }
    }
    let mut all: IndexMap<String, f64> = IndexMap::new();
    let mut main: IndexMap<String, f64> = IndexMap::new();
    let mut int: IndexMap<String, f64> = IndexMap::new();
    for pred in &order {
        for (j, term) in fit.column_term.iter().enumerate() {
            let Some(t) = term else { continue };
            let term = &fit.terms[*t];
            if !term.predictors().contains(pred) {
                continue;
            }
            let p = fit.p_values[j];
            let slot = if term.is_interaction() { &mut int } else { &mut main };
            for map in [&mut all, slot] {
                map.entry(pred.clone())
                    .and_modify(|v| *v = v.min(p))
                    .or_insert(p);
            }
        }
    }
    let mut out = CritResult::default();
    out.0.insert("pval".into(), all);
    out.0.insert("main_pval".into(), main);
    out.0.insert("int_pval".into(), int);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::TailDist;
    use crate::table::DType;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal_table(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Table {
        Table::from_columns(
            (1..=p)
                .map(|j| (format!("x{j}"), (0..n).map(|_| rng.sample(StandardNormal)).collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_gaussian_fit() {
        let x = Table::from_columns(vec![("x1".into(), (0..20).map(|i| i as f64 * 0.37 - 2.0).collect())]).unwrap();
        let y: Vec<f64> = x.column(0).iter().map(|v| 2.0 * v).collect();
        let fit = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ x1").unwrap()).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-10);
        assert!(fit.p_values[1] < 1e-12);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn gaussian_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = normal_table(50, 3, &mut rng);
        let y: Vec<f64> = (0..50)
            .map(|i| 1.0 + 0.5 * x.column(0)[i] - x.column(2)[i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ x1 + x2 + x3").unwrap()).unwrap();
        // (XᵀX)⁻¹ Xᵀy by explicit inversion
        let xm = DMatrix::from_fn(50, 4, |i, j| if j == 0 { 1.0 } else { x.column(j - 1)[i] });
        let xtx_inv = (xm.transpose() * &xm).try_inverse().unwrap();
        let beta = xtx_inv * xm.transpose() * DVector::from_column_slice(&y);
        for j in 0..4 {
            assert!((fit.coefficients[j] - beta[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn binomial_matches_likelihood_maximization() {
        // six points, no separation
        let xs = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0];
        let ys = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let x = Table::from_columns(vec![("x".into(), xs.to_vec())]).unwrap();
        let fit = fit_glm(&x, &ys, Family::Binomial, &Formula::parse("y ~ x").unwrap()).unwrap();
        // independent oracle: coordinate grid refinement of the log-likelihood
        let ll = |a: f64, b: f64| -> f64 {
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let p = 1.0 / (1.0 + (-(a + b * x)).exp());
                    y * p.ln() + (1.0 - y) * (1.0 - p).ln()
                })
                .sum()
        };
        let (mut a, mut b, mut step) = (0.0, 0.0, 1.0);
        while step > 1e-7 {
            let mut best = (ll(a, b), a, b);
            for da in [-1.0, 0.0, 1.0] {
                for db in [-1.0, 0.0, 1.0] {
                    let v = ll(a + da * step, b + db * step);
                    if v > best.0 {
                        best = (v, a + da * step, b + db * step);
                    }
                }
            }
            if best.1 == a && best.2 == b {
                step /= 2.0;
            } else {
                a = best.1;
                b = best.2;
            }
        }
        assert!((fit.coefficients[0] - a).abs() < 1e-4, "{} {a}", fit.coefficients[0]);
        assert!((fit.coefficients[1] - b).abs() < 1e-4, "{} {b}", fit.coefficients[1]);
        assert!(fit.converged);
    }

    #[test]
    fn poisson_fit_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = normal_table(4000, 1, &mut rng);
        let y: Vec<f64> = x
            .column(0)
            .iter()
            .map(|v| {
                let lam: f64 = (0.5 + 0.3 * v).exp();
                rand_distr::Poisson::new(lam).unwrap().sample(&mut rng)
            })
            .collect();
        let fit = fit_glm(&x, &y, Family::Poisson, &Formula::parse("y ~ x1").unwrap()).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 0.05);
        assert!((fit.coefficients[1] - 0.3).abs() < 0.05);
    }

    use rand_distr::Distribution;

    #[test]
    fn separation_and_rank_errors() {
        let x = Table::from_columns(vec![("x".into(), vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])]).unwrap();
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let err = fit_glm(&x, &y, Family::Binomial, &Formula::parse("y ~ x").unwrap()).unwrap_err();
        assert!(
            matches!(err, InferenceError::Separation | InferenceError::NotConverged(_)),
            "{err}"
        );
        let x = Table::from_columns(vec![
            ("a".into(), vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("b".into(), vec![2.0, 4.0, 6.0, 8.0, 10.0]),
        ])
        .unwrap();
        let y = [1.0, 0.0, 2.0, 1.0, 3.0];
        assert!(matches!(
            fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ a + b").unwrap()),
            Err(InferenceError::RankDeficient(_))
        ));
        assert!(matches!(
            fit_glm(&x, &[1.0, 0.0, 2.0, 1.0, 0.5], Family::Binomial, &Formula::parse("y ~ a").unwrap()),
            Err(InferenceError::InvalidResponse(_))
        ));
    }

    #[test]
    fn gaussian_irls_is_one_step_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normal_table(40, 2, &mut rng);
        let y: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
        let d = Formula::parse("y ~ x1 + x2").unwrap().design(&x).unwrap();
        let xm = design_matrix(&d);
        let yv = DVector::from_column_slice(&y);
        let (ls, _) = least_squares(&xm, &yv, &d.labels).unwrap();
        let one = irls(&xm, &yv, Family::Gaussian, &d.labels, 1).unwrap();
        assert!((one.beta - ls).abs().max() < 1e-12);
    }

    #[test]
    fn ftest_matches_f_distribution_and_glm_rss() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = normal_table(60, 4, &mut rng);
        let y: Vec<f64> = (0..60)
            .map(|i| 0.3 * x.column(0)[i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let f = ftest(&x, &y).unwrap();
        let want = TailDist::F { df1: 4.0, df2: 55.0 }.upper(f.statistic).unwrap();
        assert!((f.p_value - want).abs() < 1e-10);
        let glm = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ .").unwrap()).unwrap();
        assert!((glm.deviance - f.rss).abs() < 1e-10);
        let exact: Vec<f64> = x.column(0).to_vec();
        assert!(ftest(&x, &exact).unwrap().p_value < 1e-12);
    }

    #[test]
    fn criteria_min_rule() {
        let terms = Formula::parse("y ~ x1 + x2 + x1:x2").unwrap().expand_terms(&[]);
        let fit = GlmFit {
            family: Family::Gaussian,
            labels: vec!["(Intercept)".into(), "x1".into(), "x2".into(), "x1:x2".into()],
            coefficients: vec![0.0; 4],
            std_errors: vec![1.0; 4],
            statistics: vec![0.0; 4],
            p_values: vec![0.5, 0.03, 0.40, 0.01],
            covariance: DMatrix::identity(4, 4),
            df_residual: 10,
            deviance: 1.0,
            converged: true,
            iterations: 1,
            column_term: vec![None, Some(0), Some(1), Some(2)],
            terms,
        };
        let c = glm_criteria(&fit);
        assert_eq!(c.get("pval", "x1"), Some(0.01));
        assert_eq!(c.get("pval", "x2"), Some(0.01));
        assert_eq!(c.get("main_pval", "x1"), Some(0.03));
        assert_eq!(c.get("main_pval", "x2"), Some(0.40));
        assert_eq!(c.get("int_pval", "x1"), Some(0.01));
        assert_eq!(c.get("int_pval", "x2"), Some(0.01));
    }

    #[test]
    fn criteria_without_interactions_and_factors() {
        let x = Table::with_dtypes(
            vec![
                ("a".into(), vec![0.1, 0.5, 0.2, 0.9, 0.4, 0.7, 0.3, 0.8]),
                ("g".into(), vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0]),
            ],
            vec![DType::Numeric, DType::Factor],
        )
        .unwrap();
        let y = [0.3, 1.2, 0.1, 2.0, 0.8, 1.1, 0.9, 1.7];
        let fit = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ a + g").unwrap()).unwrap();
        let c = glm_criteria(&fit);
        assert!(c.0["int_pval"].is_empty());
        let g_min = fit.p_values[2].min(fit.p_values[3]);
        assert_eq!(c.get("pval", "g"), Some(g_min));
        let keys = |k: &str| c.0[k].keys().cloned().collect::<Vec<_>>();
        assert_eq!(keys("pval"), keys("main_pval"));
    }

    #[test]
    fn poverty_style_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = normal_table(200, 3, &mut rng);
        let y: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let fit = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ x1*(poly(x2, 2) + x3)").unwrap()).unwrap();
        let c = glm_criteria(&fit);
        let involving: f64 = fit
            .labels
            .iter()
            .zip(&fit.p_values)
            .filter(|(l, _)| l.split(':').any(|part| part == "x1"))
            .map(|(_, p)| *p)
            .fold(1.0, f64::min);
        assert_eq!(c.get("pval", "x1"), Some(involving));
    }

    #[test]
    fn null_size_calibration_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut reject = 0;
        for _ in 0..1000 {
            let x = normal_table(40, 2, &mut rng);
            let y: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
            let fit = fit_glm(&x, &y, Family::Gaussian, &Formula::parse("y ~ x1 + x2").unwrap()).unwrap();
            if fit.p_values[1] <= 0.05 {
                reject += 1;
            }
        }
        let rate = reject as f64 / 1000.0;
        assert!((rate - 0.05).abs() <= 0.02, "{rate}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pvalues_invariant_to_affine_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = normal_table(30, 2, &mut rng);
            let y: Vec<f64> = (0..30).map(|i| 0.5 * x.column(0)[i] + rng.sample::<f64, _>(StandardNormal)).collect();
            let f = Formula::parse("y ~ x1 + x2").unwrap();
            let base = fit_glm(&x, &y, Family::Gaussian, &f).unwrap();
            let x2 = Table::from_columns(vec![
                ("x1".into(), x.column(0).iter().map(|v| v * scale + shift).collect()),
                ("x2".into(), x.column(1).to_vec()),
            ]).unwrap();
            let moved = fit_glm(&x2, &y, Family::Gaussian, &f).unwrap();
            for j in 1..3 {
                prop_assert!((base.p_values[j] - moved.p_values[j]).abs() < 1e-8);
            }
        }
    }
}
