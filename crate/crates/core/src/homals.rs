//! Homogeneity analysis by alternating least squares.
//!
//! Finds object scores `X` (n x r) and category quantifications `Y_j`
//! (l_j x r) minimizing
//!
//! ```text
//! sigma = (1/p_c) sum_j SSQ(X - G_j Y_j)   subject to  X'X = n I_r,  u'X = 0
//! ```
//!
//! Each sweep sets every `Y_j` to the per-level mean of `X`, replaces `X` by
//! the average reconstruction `(1/p_c) sum_j G_j Y_j`, and then restores the
//! constraints with a centered modified Gram-Schmidt pass. At the optimum the
//! loss equals `n (r - sum_s lambda_s)` where `lambda_s` are the leading
//! nontrivial eigenvalues of the average projector
//! `P* = (1/p_c) sum_j G_j D_j^-1 G_j'`; [`eigen_check`] verifies this densely.

use std::fs::File;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{categorical_fingerprint, ROW_ID_COLUMN};
use crate::error::{Error, Result};
use crate::indicator::{apply_block_transpose, IndicatorMatrix};

/// Floor on the denominator of the relative loss change.
const REL_CHANGE_FLOOR: f64 = 1e-12;

/// Largest `n` for which [`eigen_check`] materializes `P*`.
pub const EIGEN_CHECK_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomalsConfig {
    pub r: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for HomalsConfig {
    fn default() -> Self {
        Self {
            r: 1,
            max_iter: 500,
            rel_tol: 1e-6,
            seed: 0,
        }
    }
}

impl HomalsConfig {
    pub fn validate(&self, g: &IndicatorMatrix) -> Result<()> {
        let nontrivial = g.ncc() - g.n_attributes();
        if nontrivial == 0 {
            return Err(Error::DegenerateData);
        }
        if self.r == 0 || self.r > nontrivial {
            return Err(Error::InvalidConfig(format!(
                "r = {} must lie in [1, {nontrivial}]",
                self.r
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifiedAttribute {
    pub name: String,
    pub levels: Vec<String>,
}

/// Fitted category quantifications, one `l_j x r` block per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantifications {
    pub attributes: Vec<QuantifiedAttribute>,
    pub blocks: Vec<Array2<f64>>,
}

impl Quantifications {
    pub fn r(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.ncols())
    }

    /// The full `ncc x r` matrix `Y` with blocks stacked in attribute order.
    pub fn stacked(&self) -> Array2<f64> {
        let views: Vec<_> = self.blocks.iter().map(|b| b.view()).collect();
        ndarray::concatenate(Axis(0), &views).expect("blocks share r")
    }

    /// Fingerprint of the categorical attribute names this was fitted on.
    pub fn schema_fingerprint(&self) -> String {
        categorical_fingerprint(self.attributes.iter().map(|a| a.name.as_str()))
    }

    /// Hash over labels and exact quantification values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (attr, block) in self.attributes.iter().zip(&self.blocks) {
            h.update(attr.name.as_bytes());
            h.update([0u8]);
            for (level, row) in attr.levels.iter().zip(block.rows()) {
                h.update(level.as_bytes());
                h.update([0u8]);
                for v in row {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

#[derive(Debug, Clone)]
pub struct HomalsSolution {
    pub object_scores: Array2<f64>,
    pub quantifications: Quantifications,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    /// Eigenvalues of `X' P* X / n`, descending.
    pub eigenvalues: Vec<f64>,
}

impl HomalsSolution {
    pub fn iterations(&self) -> usize {
        self.loss_trace.len()
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn fit(g: &IndicatorMatrix, cfg: &HomalsConfig) -> Result<HomalsSolution> {
    fit_observed(g, cfg, |_, _, _| {})
}

/// Like [`fit`], calling `on_iter(t, X_t, sigma_t)` after every sweep.
pub fn fit_observed<F>(g: &IndicatorMatrix, cfg: &HomalsConfig, mut on_iter: F) -> Result<HomalsSolution>
where
    F: FnMut(usize, ArrayView2<f64>, f64),
{
    cfg.validate(g)?;
    let n = g.n_rows();
    let r = cfg.r;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let init = Array2::from_shape_simple_fn((n, r), || StandardNormal.sample(&mut rng));
    let mut x = orthonormalize_with_retry(init, &mut rng)?;
    let mut y = update_quantifications(g, x.view());
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;

    for t in 0..cfg.max_iter {
        let raw = average_reconstruction(g, &y);
        x = orthonormalize_with_retry(raw, &mut rng)?;
        y = update_quantifications(g, x.view());
        let sigma = residual_loss(x.view(), g, &y);
        on_iter(t, x.view(), sigma);
        if let Some(&prev) = trace.last() {
            let change = (sigma - prev).abs() / prev.max(REL_CHANGE_FLOOR);
            trace.push(sigma);
            if change < cfg.rel_tol {
                converged = true;
                break;
            }
        } else {
            trace.push(sigma);
        }
    }

    let eigenvalues = ritz_values(g, &y, n);
    let attributes = g
        .blocks()
        .iter()
        .map(|b| QuantifiedAttribute {
            name: b.attribute.clone(),
            levels: b.levels.clone(),
        })
        .collect();
    Ok(HomalsSolution {
        object_scores: x,
        quantifications: Quantifications { attributes, blocks: y },
        loss_trace: trace,
        converged,
        eigenvalues,
    })
}

/// `Y_j = D_j^-1 G_j' X` for every attribute.
fn update_quantifications(g: &IndicatorMatrix, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
    g.blocks()
        .iter()
        .map(|b| {
            let mut y = apply_block_transpose(b, x).expect("x has n rows");
            for (mut row, &count) in y.rows_mut().into_iter().zip(&b.counts) {
                row /= count as f64;
            }
            y
        })
        .collect()
}

/// `(1/p_c) sum_j G_j Y_j`, accumulated in attribute order.
fn average_reconstruction(g: &IndicatorMatrix, y: &[Array2<f64>]) -> Array2<f64> {
    let r = y[0].ncols();
    let mut x = Array2::zeros((g.n_rows(), r));
    for (b, yj) in g.blocks().iter().zip(y) {
        for (mut row, &c) in x.rows_mut().into_iter().zip(&b.codes) {
            row += &yj.row(c as usize);
        }
    }
    x /= g.n_attributes() as f64;
    x
}

fn residual_loss(x: ArrayView2<f64>, g: &IndicatorMatrix, y: &[Array2<f64>]) -> f64 {
    let mut total = 0.0;
    for (b, yj) in g.blocks().iter().zip(y) {
        let mut ssq = 0.0;
        for (row, &c) in x.rows().into_iter().zip(&b.codes) {
            let q = yj.row(c as usize);
            ssq += row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        total += ssq;
    }
    total / g.n_attributes() as f64
}

fn ritz_values(g: &IndicatorMatrix, y: &[Array2<f64>], n: usize) -> Vec<f64> {
    let r = y[0].ncols();
    let mut m = DMatrix::<f64>::zeros(r, r);
    for (b, yj) in g.blocks().iter().zip(y) {
        for (row, &count) in yj.rows().into_iter().zip(&b.counts) {
            for s in 0..r {
                for t in 0..r {
                    m[(s, t)] += count as f64 * row[s] * row[t];
                }
            }
        }
    }
    m /= (n * g.n_attributes()) as f64;
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `(1/p_c) sum_j SSQ(X - G_j Y_j)`.
pub fn loss(x: ArrayView2<f64>, g: &IndicatorMatrix, y: &[Array2<f64>]) -> Result<f64> {
    if x.nrows() != g.n_rows() || y.len() != g.n_attributes() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows and {} blocks", g.n_rows(), g.n_attributes()),
            actual: format!("{} rows and {} blocks", x.nrows(), y.len()),
        });
    }
    for (b, yj) in g.blocks().iter().zip(y) {
        if yj.dim() != (b.n_levels(), x.ncols()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} block for `{}`", b.n_levels(), x.ncols(), b.attribute),
                actual: format!("{}x{}", yj.nrows(), yj.ncols()),
            });
        }
    }
    Ok(residual_loss(x, g, y))
}

/// Centers every column, then orthogonalizes with modified Gram-Schmidt
/// (two passes) and scales each column to squared norm `n`. The first
/// entry of each column with magnitude above `1e-8` is made positive.
pub fn center_and_orthonormalize(x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = x.nrows();
    let nf = n as f64;
    let mut q = x.to_owned();
    for s in 0..q.ncols() {
        let scale = q.column(s).dot(&q.column(s)).sqrt();
        let mean = q.column(s).sum() / nf;
        q.column_mut(s).mapv_inplace(|v| v - mean);
        for _ in 0..2 {
            for t in 0..s {
                let proj = q.column(s).dot(&q.column(t)) / nf;
                let prev = q.column(t).to_owned();
                q.column_mut(s).scaled_add(-proj, &prev);
            }
        }
        let norm = q.column(s).dot(&q.column(s)).sqrt();
        if !(norm > 1e-10 * scale) || !norm.is_finite() {
            return Err(Error::RankDeficient { column: s });
        }
        let mut col = q.column_mut(s);
        col *= nf.sqrt() / norm;
        if col.iter().find(|v| v.abs() > 1e-8).is_some_and(|&v| v < 0.0) {
            col.mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}

/// Retries once with the offending column re-drawn from a standard normal.
fn orthonormalize_with_retry(mut x: Array2<f64>, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    match center_and_orthonormalize(x.view()) {
        Err(Error::RankDeficient { column }) => {
            log::warn!("object scores rank deficient in column {column}; re-randomizing once");
            for v in x.column_mut(column) {
                *v = StandardNormal.sample(rng);
            }
            center_and_orthonormalize(x.view())
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCheck {
    /// Loss computed from the residuals of the solution.
    pub sigma_direct: f64,
    /// `n (r - sum_s lambda_s)` from the leading nontrivial eigenvalues of `P*`.
    pub sigma_eigen: f64,
    pub lambdas: Vec<f64>,
    /// `lambda_r - lambda_{r+1}`; the leading eigenspace is only unique when this is positive.
    pub gap: f64,
    /// Largest principal angle (radians) between `span(X)` and the leading eigenspace.
    pub max_principal_angle: f64,
}

/// Dense `P* = (1/p_c) sum_j G_j D_j^-1 G_j'`.
pub fn average_projector(g: &IndicatorMatrix) -> Result<DMatrix<f64>> {
    let n = g.n_rows();
    if n > EIGEN_CHECK_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EIGEN_CHECK_LIMIT,
        });
    }
    let p = g.n_attributes() as f64;
    let mut pstar = DMatrix::<f64>::zeros(n, n);
    for b in g.blocks() {
        for i in 0..n {
            let ci = b.codes[i];
            let w = 1.0 / (b.counts[ci as usize] as f64 * p);
            for k in 0..n {
                if b.codes[k] == ci {
                    pstar[(i, k)] += w;
                }
            }
        }
    }
    Ok(pstar)
}

/// Compares the solution's loss with the eigenvalue expression for the optimum.
///
/// The all-ones eigenvector (eigenvalue 1) is removed by deflating `P*` with
/// `uu'/n`, since centering excludes it from the feasible set.
pub fn eigen_check(g: &IndicatorMatrix, sol: &HomalsSolution) -> Result<EigenCheck> {
    let n = g.n_rows();
    let r = sol.object_scores.ncols();
    let mut pstar = average_projector(g)?;
    pstar.add_scalar_mut(-1.0 / n as f64);
    let eig = SymmetricEigen::new(pstar);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambdas: Vec<f64> = order.iter().take(r).map(|&i| eig.eigenvalues[i]).collect();
    let gap = match order.get(r) {
        Some(&next) => lambdas[r - 1] - eig.eigenvalues[next],
        None => f64::INFINITY,
    };
    let sigma_eigen = n as f64 * (r as f64 - lambdas.iter().sum::<f64>());
    let sigma_direct = loss(sol.object_scores.view(), g, &sol.quantifications.blocks)?;

    let u = DMatrix::from_fn(n, r, |i, s| eig.eigenvectors[(i, order[s])]);
    let scale = (n as f64).sqrt();
    let q = DMatrix::from_fn(n, r, |i, s| sol.object_scores[[i, s]] / scale);
    let cosines = (u.transpose() * q).singular_values();
    let smallest = cosines.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    Ok(EigenCheck {
        sigma_direct,
        sigma_eigen,
        lambdas,
        gap,
        max_principal_angle: smallest.acos(),
    })
}

/// JSON form of a fitted solution; object scores live in a separate CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    /// Path of the object-score CSV, relative to the JSON file.
    pub object_scores: String,
    pub quantifications: IndexMap<String, IndexMap<String, Vec<f64>>>,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub r: usize,
    pub n_rows: usize,
    pub eigenvalues: Vec<f64>,
    pub schema_fingerprint: String,
    pub fingerprint: String,
}

impl SolutionFile {
    pub fn from_solution(sol: &HomalsSolution, object_scores: impl Into<String>) -> Self {
        let q = &sol.quantifications;
        let quantifications = q
            .attributes
            .iter()
            .zip(&q.blocks)
            .map(|(attr, block)| {
                let levels = attr
                    .levels
                    .iter()
                    .zip(block.rows())
                    .map(|(l, row)| (l.clone(), row.to_vec()))
                    .collect();
                (attr.name.clone(), levels)
            })
            .collect();
        Self {
            object_scores: object_scores.into(),
            quantifications,
            loss_trace: sol.loss_trace.clone(),
            converged: sol.converged,
            r: q.r(),
            n_rows: sol.object_scores.nrows(),
            eigenvalues: sol.eigenvalues.clone(),
            schema_fingerprint: q.schema_fingerprint(),
            fingerprint: q.fingerprint(),
        }
    }

    pub fn to_quantifications(&self) -> Result<Quantifications> {
        let mut attributes = Vec::new();
        let mut blocks = Vec::new();
        for (name, levels) in &self.quantifications {
            let mut block = Array2::zeros((levels.len(), self.r));
            for (mut row, values) in block.rows_mut().into_iter().zip(levels.values()) {
                if values.len() != self.r {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{} values per level of `{name}`", self.r),
                        actual: values.len().to_string(),
                    });
                }
                row.assign(&ndarray::ArrayView1::from(values.as_slice()));
            }
            attributes.push(QuantifiedAttribute {
                name: name.clone(),
                levels: levels.keys().cloned().collect(),
            });
            blocks.push(block);
        }
        Ok(Quantifications { attributes, blocks })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Writes `X` as CSV with header `row_id,dim1,...,dimr`.
pub fn write_object_scores(path: impl AsRef<Path>, x: ArrayView2<f64>, row_ids: &[u64]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec![ROW_ID_COLUMN.to_string()];
    header.extend((1..=x.ncols()).map(|s| format!("dim{s}")));
    w.write_record(&header)?;
    for (row, id) in x.rows().into_iter().zip(row_ids) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| crate::dataset::format_real(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
