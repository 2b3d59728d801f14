//! Synthetic mixed data with known cluster membership: two continuous
//! attributes drawn from isotropic unit Gaussians around per-cluster centers
//! and two three-level categorical attributes drawn from per-cluster
//! multinomials in which one level dominates.
//!
//! An optional injected group adds a continuous target attribute `y` on which
//! a small share of rows is displaced by a fixed number of standard deviations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, weighted::WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, Column, MixedDataset};
use crate::error::{Error, Result};

pub const LEVELS: [&str; 3] = ["L1", "L2", "L3"];
pub const TARGET: &str = "y";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierInjection {
    /// Share of all rows moved into the displaced group (taken from cluster 0).
    pub fraction: f64,
    /// Displacement of the group mean from the overall mean, in units of the
    /// overall standard deviation of `y`.
    pub shift: f64,
}

impl Default for OutlierInjection {
    fn default() -> Self {
        Self {
            fraction: 0.05,
            shift: 3.0,
        }
    }
}

impl OutlierInjection {
    /// Raw mean offset with unit within-group variance that yields the
    /// requested standardized displacement.
    pub fn raw_shift(&self) -> Result<f64> {
        let f = self.fraction;
        let denom = (1.0 - f).powi(2) - self.shift.powi(2) * f * (1.0 - f);
        if !(f > 0.0 && f < 1.0) || !(denom > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cannot displace a {f} share by {} standard deviations",
                self.shift
            )));
        }
        Ok(self.shift / denom.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub centers: Vec<[f64; 2]>,
    /// `level_probs[cluster][attribute]` is a probability vector over [`LEVELS`].
    pub level_probs: Vec<[[f64; 3]; 2]>,
    pub seed: u64,
    pub outlier: Option<OutlierInjection>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::with_geometry(10_000, 4.0, 0.8, 0)
    }
}

impl SynthConfig {
    /// Three clusters at the vertices of an equilateral triangle with side
    /// `side`; in cluster `c` level `c` has probability `dominant` and the
    /// other two share the remainder equally.
    pub fn with_geometry(n: usize, side: f64, dominant: f64, seed: u64) -> Self {
        let h = side * 3f64.sqrt() / 2.0;
        let centers = vec![[0.0, 0.0], [side, 0.0], [side / 2.0, h]];
        let rest = (1.0 - dominant) / 2.0;
        let level_probs = (0..3)
            .map(|c| {
                let mut p = [rest; 3];
                p[c] = dominant;
                [p, p]
            })
            .collect();
        Self {
            n,
            centers,
            level_probs,
            seed,
            outlier: None,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.centers.is_empty() {
            return Err(Error::InvalidConfig("need at least one row and one cluster".into()));
        }
        if self.level_probs.len() != self.centers.len() {
            return Err(Error::InvalidProbabilities(format!(
                "{} probability sets for {} clusters",
                self.level_probs.len(),
                self.centers.len()
            )));
        }
        for (c, attrs) in self.level_probs.iter().enumerate() {
            for p in attrs {
                if p.iter().any(|&v| !(v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidProbabilities(format!("cluster {c}: {p:?}")));
                }
            }
        }
        for i in 0..self.centers.len() {
            for j in i + 1..self.centers.len() {
                if self.centers[i] == self.centers[j] {
                    return Err(Error::InvalidConfig(format!("centers {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// Rows per cluster; the remainder goes to the earliest clusters.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let k = self.n_clusters();
        (0..k).map(|c| self.n / k + usize::from(c < self.n % k)).collect()
    }
}

struct ClusterRows {
    x: [Vec<f64>; 2],
    cats: [Vec<u32>; 2],
    y: Vec<f64>,
}

/// Generates the dataset and its ground-truth labels. Injected rows, if any,
/// are labelled `n_clusters`.
pub fn generate(cfg: &SynthConfig) -> Result<(MixedDataset, Vec<usize>)> {
    cfg.validate()?;
    let sizes = cfg.cluster_sizes();
    let injected = match cfg.outlier {
        Some(o) => {
            let m = (o.fraction * cfg.n as f64).round() as usize;
            if m > sizes[0] {
                return Err(Error::InvalidConfig("injected group is larger than cluster 0".into()));
            }
            Some((m, o.raw_shift()?))
        }
        None => None,
    };

    let parts: Vec<ClusterRows> = (0..cfg.n_clusters())
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let size = sizes[c];
            let dists: Vec<WeightedIndex<f64>> = cfg.level_probs[c]
                .iter()
                .map(|p| WeightedIndex::new(p).expect("validated probabilities"))
                .collect();
            let mut rows = ClusterRows {
                x: [Vec::with_capacity(size), Vec::with_capacity(size)],
                cats: [Vec::with_capacity(size), Vec::with_capacity(size)],
                y: Vec::new(),
            };
            for _ in 0..size {
                for d in 0..2 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    rows.x[d].push(cfg.centers[c][d] + z);
                }
                for (a, dist) in dists.iter().enumerate() {
                    rows.cats[a].push(dist.sample(&mut rng) as u32);
                }
            }
            if let Some((m, raw)) = injected {
                rows.y = (0..size)
                    .map(|i| {
                        let z: f64 = rng.sample(StandardNormal);
                        if c == 0 && i < m {
                            z + raw
                        } else {
                            z
                        }
                    })
                    .collect();
            }
            rows
        })
        .collect();

    let mut truth = Vec::with_capacity(cfg.n);
    for (c, &size) in sizes.iter().enumerate() {
        for i in 0..size {
            let flagged = matches!(injected, Some((m, _)) if c == 0 && i < m);
            truth.push(if flagged { cfg.n_clusters() } else { c });
        }
    }

    let concat_f = |f: &dyn Fn(&ClusterRows) -> &Vec<f64>| parts.iter().flat_map(|p| f(p).iter().copied()).collect();
    let concat_c = |a: usize| parts.iter().flat_map(|p| p.cats[a].iter().copied()).collect();

    let mut schema = vec![AttributeSchema::continuous("x1"), AttributeSchema::continuous("x2")];
    let mut columns = vec![Column::Continuous(concat_f(&|p| &p.x[0])), Column::Continuous(concat_f(&|p| &p.x[1]))];
    if injected.is_some() {
        schema.push(AttributeSchema::continuous(TARGET));
        columns.push(Column::Continuous(concat_f(&|p| &p.y)));
    }
    for a in 0..2 {
        schema.push(AttributeSchema::nominal(format!("c{}", a + 1), LEVELS));
        columns.push(Column::Categorical(concat_c(a)));
    }
    let d = MixedDataset::new(schema, columns, (0..cfg.n as u64).collect())?;
    Ok((d, truth))
}
