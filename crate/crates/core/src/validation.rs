//! Cluster validation: adjusted Rand index against known labels,
//! Calinski-Harabasz for unlabeled data, `k` sweeps and per-cluster profiles.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster, Algorithm, Method};
use crate::dataset::MixedDataset;
use crate::error::{Error, Result};

/// Clusters whose profiled mean reaches this magnitude are flagged.
pub const OUTLIER_MEAN_THRESHOLD: f64 = 2.0;

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index computed from the contingency table.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, actual: n });
    }
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    // integer sums keep the result independent of hash iteration order
    let index: usize = table.values().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let sum_a: usize = rows.values().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let sum_b: usize = cols.values().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let (index, sum_a, sum_b) = (index as f64, sum_a as f64, sum_b as f64);
    let expected = sum_a * sum_b / comb2(n);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Dense cluster sizes for labels in `0..k`, where `k = max label + 1`.
fn cluster_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// Calinski-Harabasz variance-ratio criterion `[B/(k-1)] / [W/(n-k)]`.
///
/// Returns `+inf` (with a warning) when the within-cluster dispersion is zero.
pub fn calinski_harabasz(points: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let n = points.nrows();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    let sizes = cluster_sizes(labels);
    let k = sizes.len();
    if k < 2 {
        return Err(Error::KLessThanTwo);
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty));
    }
    if n <= k {
        return Err(Error::TooFewRows { needed: k + 1, actual: n });
    }
    let dim = points.ncols();
    let grand: Array1<f64> = points.mean_axis(Axis(0)).expect("n > 0");
    let mut means = Array2::<f64>::zeros((k, dim));
    for (row, &l) in points.rows().into_iter().zip(labels) {
        let mut m = means.row_mut(l);
        m += &row;
    }
    for (mut m, &s) in means.rows_mut().into_iter().zip(&sizes) {
        m /= s as f64;
    }
    let between: f64 = means
        .rows()
        .into_iter()
        .zip(&sizes)
        .map(|(m, &s)| s as f64 * m.iter().zip(grand.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    let within: f64 = points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &l)| row.iter().zip(means.row(l)).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    if within == 0.0 {
        log::warn!("within-cluster dispersion is zero; Calinski-Harabasz index is infinite");
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Ari,
    Chi,
}

impl IndexKind {
    pub fn label(self) -> &'static str {
        match self {
            IndexKind::Ari => "ARI",
            IndexKind::Chi => "CHI",
        }
    }
}

impl std::str::FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ari" => Ok(IndexKind::Ari),
            "chi" => Ok(IndexKind::Chi),
            other => Err(Error::InvalidConfig(format!("unknown index `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub algorithm: Algorithm,
    pub index: IndexKind,
    pub value: f64,
    pub objective: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub per_k: Vec<SweepEntry>,
    /// Best `k` per algorithm and index; ties go to the smaller `k`.
    pub best_k: BTreeMap<String, usize>,
}

fn best_key(algorithm: Algorithm, index: IndexKind) -> String {
    format!("{algorithm}/{}", index.label().to_ascii_lowercase())
}

impl ValidationReport {
    pub fn best(&self, algorithm: Algorithm, index: IndexKind) -> Option<usize> {
        self.best_k.get(&best_key(algorithm, index)).copied()
    }

    pub fn value(&self, algorithm: Algorithm, index: IndexKind, k: usize) -> Option<f64> {
        self.per_k
            .iter()
            .find(|e| e.algorithm == algorithm && e.index == index && e.k == k)
            .map(|e| e.value)
    }

    /// Adds entries from another report, replacing any duplicate (k, algorithm, index).
    pub fn merge(&mut self, other: ValidationReport) {
        for e in other.per_k {
            self.per_k
                .retain(|x| !(x.k == e.k && x.algorithm == e.algorithm && x.index == e.index));
            self.per_k.push(e);
        }
        self.per_k.sort_by(|a, b| (a.index, a.algorithm, a.k).cmp(&(b.index, b.algorithm, b.k)));
        self.recompute_best();
    }

    fn recompute_best(&mut self) {
        let mut best: BTreeMap<String, (usize, f64)> = BTreeMap::new();
        for e in &self.per_k {
            let key = best_key(e.algorithm, e.index);
            match best.get(&key) {
                Some(&(bk, bv)) if !(e.value > bv || (e.value == bv && e.k < bk)) => {}
                _ => {
                    best.insert(key, (e.k, e.value));
                }
            }
        }
        self.best_k = best.into_iter().map(|(key, (k, _))| (key, k)).collect();
    }

    /// Plain-text table: one row per `k`, one column per (index, algorithm).
    pub fn render_table(&self) -> String {
        let mut columns: Vec<(IndexKind, Algorithm)> = self.per_k.iter().map(|e| (e.index, e.algorithm)).collect();
        columns.sort();
        columns.dedup();
        let mut ks: Vec<usize> = self.per_k.iter().map(|e| e.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut out = String::new();
        let _ = write!(out, "{:>4}", "K");
        for (index, alg) in &columns {
            let _ = write!(out, " {:>14}", format!("{}-{}", index.label(), alg.label()));
        }
        out.push('\n');
        for k in ks {
            let _ = write!(out, "{k:>4}");
            for &(index, alg) in &columns {
                let cell = match self.value(alg, index, k) {
                    Some(v) if index == IndexKind::Ari => format!("{v:.4}"),
                    Some(v) => format!("{v:.1}"),
                    None => "NA".to_string(),
                };
                let marker = if self.best(alg, index) == Some(k) { "*" } else { " " };
                let _ = write!(out, " {cell:>13}{marker}");
            }
            out.push('\n');
        }
        out
    }
}

/// Clusters for every `k` in `ks` (seed `base_seed + k`) and scores each solution.
pub fn sweep_k(
    points: ArrayView2<f64>,
    method: &Method,
    ks: &[usize],
    index: IndexKind,
    truth: Option<&[usize]>,
    base_seed: u64,
) -> Result<ValidationReport> {
    if ks.is_empty() {
        return Err(Error::InvalidConfig("k range is empty".into()));
    }
    match (index, truth) {
        (IndexKind::Ari, None) => return Err(Error::InvalidConfig("ARI requires ground-truth labels".into())),
        (IndexKind::Chi, Some(_)) => return Err(Error::InvalidConfig("CHI does not take ground truth".into())),
        _ => {}
    }
    if let Some(t) = truth {
        if t.len() != points.nrows() {
            return Err(Error::LengthMismatch {
                left: points.nrows(),
                right: t.len(),
            });
        }
    }
    let entries: Vec<SweepEntry> = ks
        .par_iter()
        .map(|&k| {
            let seed = base_seed.wrapping_add(k as u64);
            let res = cluster(points, method, k, seed)?;
            let value = match index {
                IndexKind::Ari => adjusted_rand_index(truth.expect("checked above"), &res.labels)?,
                IndexKind::Chi => calinski_harabasz(points, &res.labels)?,
            };
            Ok(SweepEntry {
                k,
                algorithm: method.algorithm(),
                index,
                value,
                objective: res.objective,
                seed,
            })
        })
        .collect::<Result<_>>()?;
    let mut report = ValidationReport::default();
    report.merge(ValidationReport {
        per_k: entries,
        best_k: BTreeMap::new(),
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub cluster: usize,
    pub mean: f64,
    pub count: usize,
    /// Sample standard deviation (0 for singleton clusters).
    pub sd: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub target: String,
    pub rows: Vec<ProfileRow>,
}

impl ClusterProfile {
    pub fn outliers(&self) -> impl Iterator<Item = &ProfileRow> {
        self.rows.iter().filter(|r| r.outlier)
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("target: {}\n{:>8} {:>10} {:>10} {:>10}\n", self.target, "Cluster", "mean", "count", "sd");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8} {:>10.2} {:>10} {:>10.2}{}",
                r.cluster,
                r.mean,
                r.count,
                r.sd,
                if r.outlier { "  <- outlier" } else { "" }
            );
        }
        out
    }
}

impl fmt::Display for ClusterProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_table())
    }
}

/// Per-cluster mean, count and sample sd of the continuous attribute `target`.
pub fn profile(d: &MixedDataset, labels: &[usize], target: &str) -> Result<ClusterProfile> {
    let values = d.continuous_column(target)?;
    if labels.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: labels.len(),
        });
    }
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&l, &v) in labels.iter().zip(values) {
        groups.entry(l).or_default().push(v);
    }
    let rows = groups
        .into_iter()
        .map(|(cluster, vals)| {
            let count = vals.len();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let sd = if count > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            ProfileRow {
                cluster,
                mean,
                count,
                sd,
                outlier: mean.abs() >= OUTLIER_MEAN_THRESHOLD,
            }
        })
        .collect();
    Ok(ClusterProfile {
        target: target.to_string(),
        rows,
    })
}
