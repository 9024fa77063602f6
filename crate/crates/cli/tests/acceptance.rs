//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any fails.

#![allow(clippy::excessive_precision)]

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use mixpower::corr_vine::{partial_recursion, sample_cvine, spearman_matrix, VineSpec};
use mixpower::engine::{sim_power, ErrorHandling, How, SimConfig};
use mixpower::generators::{Family, OutcomeModel, PredictorModel};
use mixpower::inference::{fit_glm, Formula, InferenceModel};
use mixpower::marginals::{inv_std_normal, parse_marginal, MarginalSpec, TailDist};
use mixpower::snr::{estimate_snr, scale_f, scale_sigma};
use mixpower::table::Table;
use mixpower_cli::commands::{run_command, Command, CommandOptions};
use mixpower_cli::runspec::{load_runspec_with, Overrides};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

const PUBLISHED: [f64; 12] = [
    0.562, 0.305, 0.095, 0.914, 0.538, 0.152, 0.985, 0.785, 0.201, 0.999, 0.897, 0.311,
];
const CURVE_SEED: u64 = 3;

fn spec_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/ftest_curve.toml")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normals(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Copula model whose latent correlation stays within about 1e-3 of the
/// identity, so the predictor distribution is effectively fixed.
fn independent_cvine(marginals: &[(&str, &str)]) -> PredictorModel {
    let names: Vec<String> = marginals.iter().map(|(n, _)| n.to_string()).collect();
    let map: IndexMap<String, MarginalSpec> = marginals
        .iter()
        .map(|(n, m)| (n.to_string(), parse_marginal(m).unwrap()))
        .collect();
    PredictorModel::cvine(VineSpec::identity(names, 1e6).unwrap(), map).unwrap()
}

/// Runs the example curve spec and returns (power column, results.json bytes).
fn run_curve(cores: usize, dir: &Path) -> Result<(Vec<f64>, Vec<u8>), String> {
    let ov = Overrides {
        cores: Some(cores),
        seed: Some(CURVE_SEED),
        ..Overrides::default()
    };
    let spec = load_runspec_with(&spec_path(), &ov).map_err(|e| e.to_string())?;
    let out = dir.join(format!("cores{cores}"));
    run_command(Command::Curve, &spec, &CommandOptions::new(&out)).map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(out.join("summary.csv")).map_err(|e| e.to_string())?;
    let power = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(7).unwrap().parse::<f64>().unwrap())
        .collect();
    let json = fs::read(out.join("results.json")).map_err(|e| e.to_string())?;
    Ok((power, json))
}

fn closed_form_ftest(n: usize, k: usize, snr: f64) -> f64 {
    let (d1, d2) = (k as f64, (n - k - 1) as f64);
    let crit = TailDist::F { df1: d1, df2: d2 }.quantile(0.95).unwrap();
    TailDist::NoncentralF {
        df1: d1,
        df2: d2,
        ncp: n as f64 * snr,
    }
    .upper(crit)
    .unwrap()
}

fn criterion_1(power: &[f64]) -> Outcome {
    let worst = power
        .iter()
        .zip(PUBLISHED)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        power.len() == 12 && worst <= 0.05,
        format!("12 cells, max |MC - published| = {worst:.3} (tol 0.05)"),
    )
}

fn criterion_2(power: &[f64]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut i = 0;
    for n in [50, 100, 150, 200] {
        for snr in [0.18, 0.08, 0.02] {
            worst = worst.max((power[i] - closed_form_ftest(n, 4, snr)).abs());
            i += 1;
        }
    }
    check(worst <= 0.05, format!("max |MC - noncentral F| = {worst:.3} (tol 0.05)"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = Table::from_columns(vec![
        ("x1".into(), normals(200_000, &mut rng)),
        ("x2".into(), normals(200_000, &mut rng)),
    ])
    .unwrap();
    let xmod = PredictorModel::resampling(data, None).unwrap();
    let ymod = OutcomeModel::gaussian("0.3 * x1 + 0.3 * x2", 1.0).unwrap();
    let big = estimate_snr(&xmod, &ymod, 100_000, 1000, &mut rng).map_err(|e| e.to_string())?;
    let small = estimate_snr(&xmod, &ymod, 500, 1000, &mut rng).map_err(|e| e.to_string())?;
    check(
        (big.snr - 0.18).abs() <= 3.0 * big.se && big.se < 0.01 && small.se > big.se,
        format!(
            "m=1e5: {:.4} ± {:.4}; m=500: {:.4} ± {:.4}",
            big.snr, big.se, small.snr, small.se
        ),
    )
}

fn criterion_4() -> Outcome {
    let xmod = independent_cvine(&[("x1", "qnorm(mean=0, sd=1)"), ("x2", "qnorm(mean=0, sd=1)")]);
    let gauss = OutcomeModel::gaussian("0.3 * x1 + 0.3 * x2", 1.0).unwrap();
    let binom = OutcomeModel::binomial("0.5 * x1 - 0.5 * x2").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for gamma in [0.1, 0.5, 2.0] {
        let mut scaled = vec![
            (scale_sigma(gamma, &gauss, &xmod, 100_000, &mut rng), 100_000),
            (scale_f(gamma, &gauss, &xmod, 100_000, &mut rng), 100_000),
        ];
        scaled.push((scale_f(gamma, &binom, &xmod, 1_000_000, &mut rng), 1_000_000));
        for (model, m) in scaled {
            let model = model.map_err(|e| format!("gamma {gamma}: {e}"))?;
            let est = estimate_snr(&xmod, &model, m, 10, &mut rng).map_err(|e| e.to_string())?;
            worst = worst.max((est.snr / gamma - 1.0).abs());
            cases += 1;
        }
    }
    check(
        worst <= 0.02,
        format!("{cases} scale/estimate round trips, max relative error {:.2}% (tol 2%)", 100.0 * worst),
    )
}

fn criterion_5() -> Outcome {
    let p = 40;
    let names: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    let guess = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.9 });
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut entry_sd = Vec::new();
    let mut mean_off = 0.0;
    for m in [100.0, 10.0] {
        let spec = VineSpec::new(names.clone(), guess.clone(), m).unwrap();
        let mut entries = Vec::with_capacity(2000);
        let mut off_sum = 0.0;
        for _ in 0..2000 {
            let c = sample_cvine(&spec, &mut rng);
            let a = c.matrix();
            let symmetric = (0..p).all(|i| (0..p).all(|j| a[(i, j)] == a[(j, i)]));
            let unit = (0..p).all(|i| (a[(i, i)] - 1.0).abs() < 1e-12);
            if !(symmetric && unit && c.min_eigenvalue() > 0.0) {
                return Err(format!("m = {m}: invalid matrix drawn"));
            }
            off_sum += (a.sum() - p as f64) / (p * (p - 1)) as f64;
            entries.push(a[(0, 1)]);
        }
        if m == 100.0 {
            mean_off = off_sum / 2000.0;
        }
        let mu = entries.iter().sum::<f64>() / 2000.0;
        entry_sd.push((entries.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 1999.0).sqrt());
    }
    let ratio = entry_sd[1] / entry_sd[0];
    check(
        (0.85..=0.95).contains(&mean_off) && ratio >= 2.0,
        format!("4000 matrices valid; mean off-diagonal {mean_off:.3} (m=100); sd ratio m=10/m=100 = {ratio:.2}"),
    )
}

fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn mixed_source(rows: usize, rng: &mut impl Rng) -> Table {
    let r = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.5, 0.3, 0.4, 0.5, 1.0, 0.2, 0.3, 0.3, 0.2, 1.0, 0.25, 0.4, 0.3, 0.25, 1.0],
    );
    let l = r.cholesky().unwrap().l();
    let mut cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(rows)).collect();
    for _ in 0..rows {
        let z = &l * DVector::from_vec(normals(4, rng));
        cols[0].push(z[0].exp());
        cols[1].push((0.5 * z[1] + 1.0).exp());
        cols[2].push(if z[2] > 0.5 { 1.0 } else { 0.0 });
        cols[3].push(1.0 + [-0.5, 0.3, 1.0].iter().filter(|c| z[3] > **c).count() as f64);
    }
    Table::from_columns(
        ["ln1", "ln2", "bin", "ord"]
            .iter()
            .map(|n| n.to_string())
            .zip(cols)
            .collect(),
    )
    .unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let source = mixed_source(2000, &mut rng);
    let xmod = PredictorModel::estimation(&source, 100, &mut rng).map_err(|e| e.to_string())?;
    let critical = 1.628 * (2.0 / 10_000.0f64).sqrt();
    let runs = 20;
    let mut passes = [0usize; 2];
    let mut worst_rho: f64 = 0.0;
    let source_rho = spearman_matrix(&source);
    for run in 0..runs {
        let sim = xmod.sample_predictors(10_000, &mut rng).map_err(|e| e.to_string())?;
        for (k, passed) in passes.iter_mut().enumerate() {
            let direct: Vec<f64> = (0..10_000)
                .map(|_| source.column(k)[rng.random_range(0..2000)])
                .collect();
            if ks_statistic(sim.column(k), &direct) < critical {
                *passed += 1;
            }
        }
        if run == 0 {
            let rho = spearman_matrix(&sim);
            worst_rho = (&rho - &source_rho).abs().max();
        }
    }
    let needed = (0.95 * runs as f64).ceil() as usize;
    check(
        passes.iter().all(|p| *p >= needed) && worst_rho <= 0.1,
        format!(
            "KS below 0.01 critical value in {}/{runs} and {}/{runs} runs; max |Δ Spearman| = {worst_rho:.3}",
            passes[0], passes[1]
        ),
    )
}

fn criterion_7() -> Outcome {
    let xmod = independent_cvine(&[
        ("x1", "qnorm(mean=0, sd=1)"),
        ("x2", "qbinom(size=1, prob=0.4)"),
        ("x3", "qnorm(mean=0, sd=1)"),
    ]);
    let config = SimConfig {
        s: 1000,
        snr_iter: 1000,
        snr_boot: 10,
        cores: 1,
        errorhandling: ErrorHandling::Remove,
        seed: 70,
        progress: false,
    };
    let cases = [
        (OutcomeModel::gaussian("0 * x1", 1.0).unwrap(), InferenceModel::ftest()),
        (
            OutcomeModel::gaussian("0 * x1", 1.0).unwrap(),
            InferenceModel::glm(Family::Gaussian, "y ~ x1 + x2 + x3").unwrap(),
        ),
        (
            OutcomeModel::binomial("0 * x1").unwrap(),
            InferenceModel::glm(Family::Binomial, "y ~ x1 + x2 + x3").unwrap(),
        ),
        (
            OutcomeModel::poisson("0 * x1").unwrap(),
            InferenceModel::glm(Family::Poisson, "y ~ x1 + x2 + x3").unwrap(),
        ),
    ];
    let mut rates = Vec::new();
    for (ymod, imod) in &cases {
        let res = sim_power(&xmod, ymod, imod, 100, &config).map_err(|e| e.to_string())?;
        let rows = mixpower::engine::power_summary(&res, "pval", &[0.05], How::Lesser).map_err(|e| e.to_string())?;
        rates.extend(rows.iter().map(|r| r.power));
    }
    let (lo, hi) = rates
        .iter()
        .fold((1.0f64, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    check(
        rates.len() == 10 && lo >= 0.03 && hi <= 0.07,
        format!("{} null rejection rates in [{lo:.3}, {hi:.3}] (target 0.05 ± 0.02)", rates.len()),
    )
}

fn criterion_8(reference: &[u8], dir: &Path) -> Outcome {
    let (_, json) = run_curve(8, dir)?;
    check(
        json == reference,
        format!("results.json at cores=1 and cores=8: {} vs {} bytes, identical = {}", reference.len(), json.len(), json == reference),
    )
}

fn oracle_glm() -> Result<(f64, f64), String> {
    // Gaussian: normal equations solved by LU.
    let n = 200;
    let x1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
    let x2: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 / 13.0).collect();
    let x3: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos() + 0.01 * i as f64).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * x1[i] - 2.0 * x2[i] + 0.3 * x3[i] + ((i * 31) % 17) as f64 / 17.0 - 0.5)
        .collect();
    let table = Table::from_columns(vec![("x1".into(), x1.clone()), ("x2".into(), x2.clone()), ("x3".into(), x3.clone())]).unwrap();
    let fit = fit_glm(&table, &y, Family::Gaussian, &Formula::parse("y ~ x1 + x2 + x3").unwrap()).map_err(|e| e.to_string())?;
    let xm = DMatrix::from_fn(n, 4, |i, j| match j {
        0 => 1.0,
        1 => x1[i],
        2 => x2[i],
        _ => x3[i],
    });
    let beta = (xm.transpose() * &xm)
        .lu()
        .solve(&(xm.transpose() * DVector::from_vec(y)))
        .ok_or("singular normal equations")?;
    let gauss = fit
        .coefficients
        .iter()
        .zip(beta.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // Binomial: maximum-likelihood coefficients from an external Newton solver.
    let n = 60;
    let x1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() * 1.5).collect();
    let x2: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let p = 1.0 / (1.0 + (-(0.3 + x1[i] - 0.8 * x2[i])).exp());
            if (((i * 37) % 100) as f64 / 100.0) < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let table = Table::from_columns(vec![("x1".into(), x1), ("x2".into(), x2)]).unwrap();
    let fit = fit_glm(&table, &y, Family::Binomial, &Formula::parse("y ~ x1 + x2").unwrap()).map_err(|e| e.to_string())?;
    let reference = [0.1184214500160377, 1.5652802275478919, -0.7996680773429686];
    let binom = fit
        .coefficients
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((gauss, binom))
}

fn oracle_partials() -> f64 {
    let direct = 0.5 * ((1.0f64 - 0.09) * (1.0 - 0.16)).sqrt() + 0.3 * -0.4;
    let mut worst = (partial_recursion(0.5, 0.3, -0.4) - direct).abs();
    // Partials of a fixed 4×4 correlation matrix from precision matrices.
    let r: DMatrix<f64> = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.4, -0.2, 0.3, 0.4, 1.0, 0.1, 0.5, -0.2, 0.1, 1.0, -0.3, 0.3, 0.5, -0.3, 1.0],
    );
    let partial = |idx: &[usize], a: usize, b: usize| -> f64 {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| r[(idx[i], idx[j])]);
        let p = sub.try_inverse().unwrap();
        -p[(a, b)] / (p[(a, a)] * p[(b, b)]).sqrt()
    };
    // ρ_{34;12} → ρ_{34;1} via ρ_{32;1}, ρ_{42;1}.
    let r34_12 = partial(&[0, 1, 2, 3], 2, 3);
    let r23_1 = partial(&[0, 1, 2], 1, 2);
    let r24_1 = partial(&[0, 1, 3], 1, 2);
    let r34_1 = partial(&[0, 2, 3], 1, 2);
    worst = worst.max((partial_recursion(r34_12, r23_1, r24_1) - r34_1).abs());
    worst
}

fn oracle_quantiles() -> f64 {
    let mut worst: f64 = 0.0;
    let mut cmp = |got: f64, want: f64| worst = worst.max((got - want).abs());
    for (p, q) in [
        (1e-10, -6.3613409024040562047),
        (0.001, -3.0902323061678135415),
        (0.025, -1.9599639845400542355),
        (0.3, -0.52440051270804078404),
        (0.5, 0.0),
        (0.8, 0.84162123357291420518),
        (0.975, 1.9599639845400542355),
        (0.999999, 4.7534243088228989482),
    ] {
        cmp(inv_std_normal(p).unwrap(), q);
    }
    let tails = [
        (TailDist::StudentT { df: 3.0 }, 0.975, 3.1824463052837095927),
        (TailDist::StudentT { df: 10.0 }, 0.01, -2.7637694581126961988),
        (TailDist::StudentT { df: 45.0 }, 0.95, 1.679427392652354851),
        (TailDist::F { df1: 4.0, df2: 45.0 }, 0.95, 2.5787391843115596683),
        (TailDist::F { df1: 4.0, df2: 95.0 }, 0.95, 2.4674936234496468973),
        (TailDist::F { df1: 21.0, df2: 78.0 }, 0.95, 1.6929305249835644562),
        (TailDist::ChiSq { df: 5.0 }, 0.95, 11.070497693516354178),
        (TailDist::ChiSq { df: 1.0 }, 0.5, 0.45493642311957275194),
    ];
    for (d, p, q) in tails {
        cmp(d.quantile(p).unwrap(), q);
    }
    for (m, p, q) in [
        ("qgamma(shape=2.5, rate=1.5)", 0.3, 0.99996937758663542735),
        ("qgamma(shape=0.5, rate=2)", 0.9, 0.67638586352385364177),
        ("qnorm(mean=1, sd=2)", 0.975, 1.0 + 2.0 * 1.9599639845400542355),
    ] {
        cmp(parse_marginal(m).unwrap().quantile(p).unwrap(), q);
    }
    worst
}

fn criterion_9() -> Outcome {
    let (gauss, binom) = oracle_glm()?;
    let partials = oracle_partials();
    let quant = oracle_quantiles();
    check(
        gauss <= 1e-8 && binom <= 1e-4 && partials <= 1e-12 && quant <= 1e-8,
        format!("GLM {gauss:.1e} (≤1e-8), IRLS {binom:.1e} (≤1e-4), partials {partials:.1e}, quantiles {quant:.1e} (≤1e-8)"),
    )
}

fn structural_21() -> Outcome {
    let mut marginals: Vec<(String, String)> = (1..=15)
        .map(|i| (format!("z{i}"), "qnorm(mean=0, sd=1)".to_string()))
        .collect();
    marginals.extend((1..=6).map(|i| (format!("b{i}"), "qbinom(size=1, prob=0.3)".to_string())));
    let pairs: Vec<(&str, &str)> = marginals.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let xmod = independent_cvine(&pairs);
    let mean = marginals
        .iter()
        .enumerate()
        .map(|(i, (n, _))| format!("{} * {n}", 0.05 + 0.01 * (i % 5) as f64))
        .collect::<Vec<_>>()
        .join(" + ");
    let ymod = OutcomeModel::gaussian(&mean, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let ymod = scale_f(0.28, &ymod, &xmod, 200_000, &mut rng).map_err(|e| e.to_string())?;
    let config = SimConfig {
        s: 1000,
        snr_iter: 100_000,
        snr_boot: 100,
        cores: 1,
        errorhandling: ErrorHandling::Stop,
        seed: 80,
        progress: false,
    };
    let res = sim_power(&xmod, &ymod, &InferenceModel::ftest(), 100, &config).map_err(|e| e.to_string())?;
    let power = mixpower::engine::power_summary(&res, "pval", &[0.05], How::Lesser).map_err(|e| e.to_string())?[0].power;
    let band = (closed_form_ftest(100, 21, 0.27), closed_form_ftest(100, 21, 0.28));
    check(
        (power - 0.822).abs() <= 0.05,
        format!(
            "21 coefficients, est. SNR {:.3}: MC power {power:.3} vs 0.822 ± 0.05 (closed form {:.3}-{:.3})",
            res.snr.snr, band.0, band.1
        ),
    )
}

fn main() {
    let dir = tempfile::TempDir::new().expect("temp dir");
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        results.push((name, out, t.elapsed().as_secs_f64()));
    };

    let mut curve: Option<(Vec<f64>, Vec<u8>)> = None;
    let curve_err = match run_curve(1, dir.path()) {
        Ok(c) => {
            curve = Some(c);
            None
        }
        Err(e) => Some(e),
    };
    let with_curve = |f: fn(&[f64]) -> Outcome| match (&curve, &curve_err) {
        (Some((p, _)), _) => f(p),
        (_, Some(e)) => Err(format!("curve run failed: {e}")),
        _ => unreachable!(),
    };
    timed("1 published power table", &mut || with_curve(criterion_1));
    timed("2 closed-form F-test power", &mut || with_curve(criterion_2));
    timed("3 SNR ground truth", &mut criterion_3);
    timed("4 scaling round trip", &mut criterion_4);
    timed("5 C-vine properties", &mut criterion_5);
    timed("6 copula preservation", &mut criterion_6);
    timed("7 test size", &mut criterion_7);
    timed("8 determinism across cores", &mut || match &curve {
        Some((_, json)) => criterion_8(json, dir.path()),
        None => Err("curve run failed".into()),
    });
    timed("9 oracle equivalence", &mut criterion_9);
    timed("21-coefficient design", &mut structural_21);

    let mut failed = 0;
    for (name, out, secs) in &results {
        match out {
            Ok(d) => println!("PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
