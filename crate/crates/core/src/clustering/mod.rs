//! Clustering of embedded data: mini-batch k-means, BIRCH and CLARA behind a
//! single [`cluster`] entry point.
//!
//! Every algorithm labels rows by their nearest center under squared
//! Euclidean distance, with ties resolved to the lowest center index.

pub mod birch;
pub mod kmeans;
pub mod pam;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_real, ROW_ID_COLUMN};
use crate::error::{Error, Result};

pub use birch::{birch, CfEntry, CfTree};
pub use kmeans::{kmeans_plus_plus, lloyd, minibatch_kmeans};
pub use pam::{clara, pam_full, PamResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mbk,
    Birch,
    Clara,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Mbk, Algorithm::Birch, Algorithm::Clara];

    /// Short column label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Mbk => "KM",
            Algorithm::Birch => "BIRCH",
            Algorithm::Clara => "CLARA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Mbk => "mbk",
            Algorithm::Birch => "birch",
            Algorithm::Clara => "clara",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mbk" => Ok(Algorithm::Mbk),
            "birch" => Ok(Algorithm::Birch),
            "clara" => Ok(Algorithm::Clara),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// An algorithm together with its tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Method {
    Mbk { batch: usize, iters: usize },
    Birch { threshold: f64, branching: usize },
    /// `sample_size: None` means `40 + 2k`, capped at the row count.
    Clara { samples: usize, sample_size: Option<usize> },
}

impl Method {
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Mbk => Method::Mbk {
                batch: 1024,
                iters: 100,
            },
            Algorithm::Birch => Method::Birch {
                threshold: 0.5,
                branching: 50,
            },
            Algorithm::Clara => Method::Clara {
                samples: 5,
                sample_size: None,
            },
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Method::Mbk { .. } => Algorithm::Mbk,
            Method::Birch { .. } => Algorithm::Birch,
            Method::Clara { .. } => Algorithm::Clara,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub algorithm: Algorithm,
    pub k: usize,
    pub labels: Vec<usize>,
    /// Centroids (k-means, BIRCH) or medoid rows (CLARA), one row per cluster.
    #[serde(skip)]
    pub centers: Array2<f64>,
    /// Within-cluster SSQ (k-means, BIRCH) or total Euclidean dissimilarity (CLARA).
    pub objective: f64,
    pub seed: u64,
    /// Row indices of the medoids, for CLARA.
    pub medoids: Option<Vec<usize>>,
}

/// Runs `method` with `k` clusters.
pub fn cluster(points: ArrayView2<f64>, method: &Method, k: usize, seed: u64) -> Result<ClusteringResult> {
    match *method {
        Method::Mbk { batch, iters } => minibatch_kmeans(points, k, batch, iters, seed),
        Method::Birch { threshold, branching } => birch(points, k, threshold, branching, seed),
        Method::Clara { samples, sample_size } => {
            let size = sample_size.unwrap_or_else(|| (40 + 2 * k).min(points.nrows()));
            clara(points, k, samples, size, seed)
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center and its squared distance; ties go to the lowest index.
#[inline]
pub(crate) fn nearest(point: ArrayView1<f64>, centers: ArrayView2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.rows().into_iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Row-parallel nearest-center assignment.
pub fn assign(points: ArrayView2<f64>, centers: ArrayView2<f64>) -> Vec<(usize, f64)> {
    (0..points.nrows())
        .into_par_iter()
        .map(|i| nearest(points.row(i), centers))
        .collect()
}

/// Assigns rows to centers, moving any center left without rows onto the row
/// farthest from its current center. Returns labels and squared distances.
pub(crate) fn assign_with_repair(points: ArrayView2<f64>, centers: &mut Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = centers.nrows();
    let mut assigned = assign(points, centers.view());
    for _ in 0..k {
        let mut sizes = vec![0usize; k];
        for &(c, _) in &assigned {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let far = farthest(&assigned);
        if assigned[far].1 == 0.0 {
            break;
        }
        centers.row_mut(empty).assign(&points.row(far));
        assigned = assign(points, centers.view());
    }
    assigned.into_iter().unzip()
}

/// Index of the row with the largest distance to its center (lowest index on ties).
pub(crate) fn farthest(assigned: &[(usize, f64)]) -> usize {
    let mut best = 0;
    for (i, &(_, d)) in assigned.iter().enumerate() {
        if d > assigned[best].1 {
            best = i;
        }
    }
    best
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(())
}

/// Writes `row_id,cluster` rows.
pub fn write_labels(path: impl AsRef<Path>, row_ids: &[u64], labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record([ROW_ID_COLUMN, "cluster"])?;
    for (id, l) in row_ids.iter().zip(labels) {
        w.write_record([id.to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `row_id,cluster` file into a map from row id to label.
pub fn read_labels(path: impl AsRef<Path>) -> Result<HashMap<u64, usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let mut out = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| {
            let tok = rec.get(i).unwrap_or("").trim();
            tok.parse::<u64>().map_err(|_| Error::ParseFailure {
                row,
                column: if i == 0 { ROW_ID_COLUMN.into() } else { "cluster".into() },
                token: tok.to_string(),
            })
        };
        out.insert(parse(0)?, parse(1)? as usize);
    }
    Ok(out)
}

/// Labels for `row_ids`, looked up in a map read by [`read_labels`].
pub fn align_labels(map: &HashMap<u64, usize>, row_ids: &[u64]) -> Result<Vec<usize>> {
    row_ids
        .iter()
        .map(|id| {
            map.get(id).copied().ok_or_else(|| Error::LengthMismatch {
                left: row_ids.len(),
                right: map.len(),
            })
        })
        .collect()
}

/// Writes cluster centers as CSV with the embedded column names as header.
pub fn write_centers(path: impl AsRef<Path>, centers: ArrayView2<f64>, column_names: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["cluster".to_string()];
    header.extend(column_names.iter().cloned());
    w.write_record(&header)?;
    for (c, row) in centers.rows().into_iter().enumerate() {
        let mut rec = vec![c.to_string()];
        rec.extend(row.iter().map(|v| format_real(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
