//! Latent-Gaussian correlation matrices: C-vine sampling from rough
//! pairwise guesses, conversion between pairwise and C-vine partial
//! correlations, rank-based estimation from data, and PD repair.
//!
//! A C-vine on p variables is parametrized by the partial correlations
//! ρ_{ij;1..i-1} for i < j. Each may take any value in (−1, 1)
//! independently of the others and the reconstructed matrix is always
//! positive definite.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::Table;

/// Bound on |partial correlation| used when clamping.
pub const PARTIAL_CLAMP: f64 = 1.0 - 1e-9;
/// Eigenvalue floor applied by [`nearest_pd`].
pub const EIGEN_FLOOR: f64 = 1e-8;
/// Smallest Beta hyperparameter allowed after mapping.
pub const MIN_HYPER: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry {i} is {value}, expected 1")]
    Diagonal { i: usize, value: f64 },
    #[error("entry ({i}, {j}) = {value} outside the allowed range")]
    OutOfRange { i: usize, j: usize, value: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("concentration m must be positive and finite, got {0}")]
    Concentration(f64),
    #[error("{0} variable names given for a {1}x{1} matrix")]
    Names(usize, usize),
    #[error("column `{0}` is constant")]
    ConstantColumn(String),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("csv: {0}")]
    Csv(String),
}

/// Symmetric positive-definite matrix with unit diagonal. The lower
/// Cholesky factor is computed at construction and kept for sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    matrix: DMatrix<f64>,
    #[serde(skip)]
    lower: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<CorrelationMatrix, CorrError> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(CorrError::NotSquare { rows, cols });
        }
        for i in 0..rows {
            if (matrix[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(CorrError::Diagonal {
                    i,
                    value: matrix[(i, i)],
                });
            }
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                    return Err(CorrError::NotSymmetric { i, j });
                }
                let v = matrix[(i, j)];
                if !(v > -1.0 && v < 1.0) {
                    return Err(CorrError::OutOfRange { i, j, value: v });
                }
            }
        }
        let lower = matrix
            .clone()
            .cholesky()
            .ok_or(CorrError::NotPositiveDefinite)?
            .unpack();
        if (0..rows).any(|i| !(lower[(i, i)] > 0.0)) {
            return Err(CorrError::NotPositiveDefinite);
        }
        Ok(CorrelationMatrix { matrix, lower })
    }

    pub fn identity(p: usize) -> CorrelationMatrix {
        CorrelationMatrix {
            matrix: DMatrix::identity(p, p),
            lower: DMatrix::identity(p, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Lower-triangular L with L Lᵀ = C.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, names: &[String], writer: W) -> Result<(), CorrError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(names).map_err(|e| CorrError::Csv(e.to_string()))?;
        for row in self.to_rows() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| CorrError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| CorrError::Csv(e.to_string()))
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = CorrError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(CorrError::NotSquare {
                rows: p,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        CorrelationMatrix::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(c: CorrelationMatrix) -> Self {
        c.to_rows()
    }
}

/// ρ_{ij;L} from ρ_{ij;kL}, ρ_{ik;L} and ρ_{jk;L}.
pub fn partial_recursion(rho_ij_kl: f64, rho_ik_l: f64, rho_jk_l: f64) -> f64 {
    rho_ij_kl * ((1.0 - rho_ik_l * rho_ik_l) * (1.0 - rho_jk_l * rho_jk_l)).sqrt() + rho_ik_l * rho_jk_l
}

/// C-vine partial correlations: entry (i, j), i < j, holds ρ_{ij;0..i-1}
/// (0-based). Entries on and below the diagonal are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct VinePartials(DMatrix<f64>);

impl VinePartials {
    pub fn zeros(p: usize) -> VinePartials {
        VinePartials(DMatrix::zeros(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i.min(j), i.max(j))]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i.min(j), i.max(j))] = v;
    }

    /// Pairwise correlations by applying [`partial_recursion`] down each
    /// conditioning set.
    pub fn to_correlation(&self) -> DMatrix<f64> {
        let p = self.dim();
        let mut r = DMatrix::identity(p, p);
        for k in 0..p {
            for i in (k + 1)..p {
                let mut rho = self.0[(k, i)];
                for l in (0..k).rev() {
                    rho = partial_recursion(rho, self.0[(l, k)], self.0[(l, i)]);
                }
                r[(k, i)] = rho;
                r[(i, k)] = rho;
            }
        }
        r
    }
}

fn check_guess(g: &DMatrix<f64>) -> Result<(), CorrError> {
    let (rows, cols) = g.shape();
    if rows != cols {
        return Err(CorrError::NotSquare { rows, cols });
    }
    for i in 0..rows {
        if g[(i, i)] != 1.0 {
            return Err(CorrError::Diagonal { i, value: g[(i, i)] });
        }
        for j in 0..i {
            if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 {
                return Err(CorrError::NotSymmetric { i, j });
            }
            let v = g[(i, j)];
            if !(-1.0..=1.0).contains(&v) {
                return Err(CorrError::OutOfRange { i, j, value: v });
            }
        }
    }
    Ok(())
}

/// Partial correlations ρ̂_{ij;0..i-1} implied by a guess matrix through
/// the conditional normal covariance Σ_AA − Σ_AB Σ_BB⁻ Σ_BA, using the
/// pseudo-inverse when Σ_BB is singular.
pub fn guess_to_partials(g: &DMatrix<f64>) -> Result<VinePartials, CorrError> {
    check_guess(g)?;
    let p = g.nrows();
    let mut out = VinePartials::zeros(p);
    for i in 0..p.saturating_sub(1) {
        if i == 0 {
            for j in 1..p {
                out.set(0, j, g[(0, j)].clamp(-PARTIAL_CLAMP, PARTIAL_CLAMP));
            }
            continue;
        }
        let sigma_bb = g.view((0, 0), (i, i)).into_owned();
        let pinv = sigma_bb
            .pseudo_inverse(1e-12)
            .expect("pseudo-inverse with nonnegative epsilon");
        let col = |k: usize| g.view((0, k), (i, 1)).into_owned();
        let gi = col(i);
        let pi = &pinv * &gi;
        let c_ii = g[(i, i)] - (gi.transpose() * &pi)[(0, 0)];
        for j in (i + 1)..p {
            let gj = col(j);
            let c_jj = g[(j, j)] - (gj.transpose() * &pinv * &gj)[(0, 0)];
            let c_ij = g[(i, j)] - (gj.transpose() * &pi)[(0, 0)];
            let denom = (c_ii * c_jj).sqrt();
            let rho = if denom > 1e-14 { c_ij / denom } else { 0.0 };
            out.set(i, j, rho.clamp(-PARTIAL_CLAMP, PARTIAL_CLAMP));
        }
    }
    Ok(out)
}

/// Symmetric matrix → nearest correlation matrix by eigenvalue clipping at
/// [`EIGEN_FLOOR`] followed by unit-diagonal rescaling, repeated until the
/// rescaled matrix keeps the floor.
pub fn nearest_pd(s: &DMatrix<f64>) -> Result<CorrelationMatrix, CorrError> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(CorrError::NotSquare { rows, cols });
    }
    let mut a = (s + s.transpose()) * 0.5;
    for _ in 0..100 {
        let eig = SymmetricEigen::new(a.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let unit_diag = (0..rows).all(|i| (a[(i, i)] - 1.0).abs() <= 1e-14);
        if min >= EIGEN_FLOOR && unit_diag {
            break;
        }
        let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let d: Vec<f64> = (0..rows).map(|i| rebuilt[(i, i)].sqrt()).collect();
        a = DMatrix::from_fn(rows, rows, |i, j| {
            if i == j {
                1.0
            } else {
                rebuilt[(i, j)] / (d[i] * d[j])
            }
        });
        a = (&a + a.transpose()) * 0.5;
        // Renormalizing can pull the smallest eigenvalue just under the
        // floor; nudge toward identity before the next check.
        let eig = SymmetricEigen::new(a.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < EIGEN_FLOOR {
            let t = (EIGEN_FLOOR - min) / (1.0 - min);
            a = &a * (1.0 - t) + DMatrix::identity(rows, rows) * t;
            for i in 0..rows {
                a[(i, i)] = 1.0;
            }
        }
    }
    for i in 0..rows {
        a[(i, i)] = 1.0;
    }
    CorrelationMatrix::new(a)
}

/// Beta hyperparameters of one vine edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePrior {
    pub i: usize,
    pub j: usize,
    pub center: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Rough pairwise-correlation guesses plus a concentration m. Larger m
/// means sampled matrices stay closer to the guess.
#[derive(Debug, Clone)]
pub struct VineSpec {
    names: Vec<String>,
    guess: DMatrix<f64>,
    m: f64,
    priors: Vec<EdgePrior>,
    warnings: Vec<String>,
}

impl VineSpec {
    pub fn new(names: Vec<String>, guess: DMatrix<f64>, m: f64) -> Result<VineSpec, CorrError> {
        check_guess(&guess)?;
        if names.len() != guess.nrows() {
            return Err(CorrError::Names(names.len(), guess.nrows()));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(CorrError::Concentration(m));
        }
        let partials = guess_to_partials(&guess)?;
        let p = guess.nrows();
        let mut priors = Vec::with_capacity(p * p.saturating_sub(1) / 2);
        let mut warnings = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let center = partials.get(i, j);
                // Affine map of Beta(α, β) on (0, 1) to (−1, 1) has mean ρ̂
                // exactly when α = m(ρ̂ + 1)/2.
                let mut alpha = m * (center + 1.0) / 2.0;
                let mut beta = m - alpha;
                if alpha < MIN_HYPER || beta < MIN_HYPER {
                    let msg = format!(
                        "edge ({}, {}): Beta({alpha:.3e}, {beta:.3e}) clamped to minimum {MIN_HYPER}",
                        names[i], names[j]
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                    alpha = alpha.max(MIN_HYPER);
                    beta = beta.max(MIN_HYPER);
                }
                priors.push(EdgePrior {
                    i,
                    j,
                    center,
                    alpha,
                    beta,
                });
            }
        }
        Ok(VineSpec {
            names,
            guess,
            m,
            priors,
            warnings,
        })
    }

    pub fn identity(names: Vec<String>, m: f64) -> Result<VineSpec, CorrError> {
        let p = names.len();
        VineSpec::new(names, DMatrix::identity(p, p), m)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn guess(&self) -> &DMatrix<f64> {
        &self.guess
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn priors(&self) -> &[EdgePrior] {
        &self.priors
    }

    /// Hyperparameters that had to be clamped, one message per edge.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Draw one correlation matrix from the C-vine prior of `spec`.
pub fn sample_cvine<R: Rng + ?Sized>(spec: &VineSpec, rng: &mut R) -> CorrelationMatrix {
    let p = spec.names.len();
    let mut partials = VinePartials::zeros(p);
    for prior in &spec.priors {
        let beta = Beta::new(prior.alpha, prior.beta).expect("hyperparameters clamped positive");
        let b: f64 = beta.sample(rng);
        partials.set(
            prior.i,
            prior.j,
            (2.0 * b - 1.0).clamp(-PARTIAL_CLAMP, PARTIAL_CLAMP),
        );
    }
    let r = partials.to_correlation();
    match CorrelationMatrix::new(r.clone()) {
        Ok(c) if c.min_eigenvalue() >= EIGEN_FLOOR => c,
        // partials at the clamp bound give numerically singular matrices
        _ => nearest_pd(&r).expect("square symmetric input"),
    }
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let p = cols.len();
    let n = cols.first().map_or(0, Vec::len) as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut out = DMatrix::identity(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    out
}

/// Spearman rank correlation matrix of the table's columns.
pub fn spearman_matrix(table: &Table) -> DMatrix<f64> {
    let ranks: Vec<Vec<f64>> = table.columns().iter().map(|c| average_ranks(c)).collect();
    pearson_matrix(&ranks)
}

/// Point estimate plus bootstrap draws of the latent correlation matrix.
#[derive(Debug, Clone)]
pub struct LatentCorrelation {
    pub point: CorrelationMatrix,
    pub draws: Vec<CorrelationMatrix>,
}

fn latent_from_spearman(table: &Table) -> Result<CorrelationMatrix, CorrError> {
    let s = spearman_matrix(table);
    let p = s.nrows();
    let latent = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            2.0 * (std::f64::consts::PI * s[(i, j)] / 6.0).sin()
        }
    });
    nearest_pd(&latent)
}

/// Rank-based latent correlation: entrywise 2·sin(π ρ_S / 6) of the
/// Spearman matrix, projected to PD. Bootstrap draws apply the same
/// estimator to row-resampled copies of the data.
pub fn estimate_latent_correlation<R: Rng + ?Sized>(
    data: &Table,
    bootstrap_reps: usize,
    rng: &mut R,
) -> Result<LatentCorrelation, CorrError> {
    let n = data.nrows();
    if n < 10 {
        return Err(CorrError::TooFewRows { need: 10, got: n });
    }
    for (name, col) in data.names().iter().zip(data.columns()) {
        if col.iter().all(|v| *v == col[0]) {
            return Err(CorrError::ConstantColumn(name.clone()));
        }
    }
    let point = latent_from_spearman(data)?;
    let mut draws = Vec::with_capacity(bootstrap_reps);
    let mut rows = vec![0usize; n];
    while draws.len() < bootstrap_reps {
        for r in rows.iter_mut() {
            *r = rng.random_range(0..n);
        }
        let sample = data.take_rows(&rows);
        // A resample can collapse a rare category into a constant column;
        // such replicates carry no rank information and are redrawn.
        if sample.columns().iter().any(|c| c.iter().all(|v| *v == c[0])) {
            continue;
        }
        draws.push(latent_from_spearman(&sample)?);
    }
    Ok(LatentCorrelation { point, draws })
}

/// Read a square guess matrix from a CSV whose header names the variables.
/// A leading blank header cell with row labels in the first column is also
/// accepted.
pub fn read_guess_csv<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>), CorrError> {
    let table = Table::read_csv(reader).map_err(|e| CorrError::Csv(e.to_string()))?;
    let mut names: Vec<String> = table.names().to_vec();
    let mut cols: Vec<Vec<f64>> = table.columns().to_vec();
    if names.first().is_some_and(|n| n.is_empty()) {
        names.remove(0);
        cols.remove(0);
    }
    let p = names.len();
    if table.nrows() != p {
        return Err(CorrError::NotSquare {
            rows: table.nrows(),
            cols: p,
        });
    }
    let g = DMatrix::from_fn(p, p, |i, j| cols[j][i]);
    check_guess(&g)?;
    Ok((names, g))
}
