//! PAM (BUILD + SWAP) and CLARA, its sampling wrapper for large inputs.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assign, Algorithm, ClusteringResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PamResult {
    /// Row indices of the medoids, ascending.
    pub medoids: Vec<usize>,
    pub labels: Vec<usize>,
    /// Sum of Euclidean distances from each row to its medoid.
    pub objective: f64,
}

fn distance_matrix(points: ArrayView2<f64>) -> Array2<f64> {
    let n = points.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = super::sq_dist(points.row(i), points.row(j)).sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

fn total_cost(d: &Array2<f64>, medoids: &[usize]) -> f64 {
    (0..d.nrows())
        .map(|j| medoids.iter().map(|&m| d[[m, j]]).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Assigns every row to its nearest medoid; returns labels and the total
/// Euclidean dissimilarity.
fn assign_to_medoids(points: ArrayView2<f64>, medoids: &[usize]) -> (Vec<usize>, f64) {
    let centers = points.select(Axis(0), medoids);
    let assigned = assign(points, centers.view());
    let objective = assigned.iter().map(|&(_, d2)| d2.sqrt()).sum();
    (assigned.into_iter().map(|(c, _)| c).collect(), objective)
}

/// Partitioning around medoids. BUILD picks medoids greedily; SWAP then
/// applies the best medoid/non-medoid exchange while the total strictly drops.
pub fn pam_full(points: ArrayView2<f64>, k: usize) -> Result<PamResult> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let d = distance_matrix(points);

    // BUILD
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut near = vec![f64::INFINITY; n];
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let cost: f64 = (0..n).map(|j| near[j].min(d[[c, j]])).sum();
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((c, cost));
            }
        }
        let (c, _) = best.expect("k < n leaves a candidate");
        medoids.push(c);
        for j in 0..n {
            near[j] = near[j].min(d[[c, j]]);
        }
    }

    // SWAP
    let mut current = total_cost(&d, &medoids);
    loop {
        let (first, second, owner) = nearest_two(&d, &medoids);
        let mut best: Option<(usize, usize, f64)> = None;
        for (mi, _) in medoids.iter().enumerate() {
            for o in (0..n).filter(|o| !medoids.contains(o)) {
                let delta: f64 = (0..n)
                    .map(|j| {
                        let fallback = if owner[j] == mi { second[j] } else { first[j] };
                        fallback.min(d[[o, j]]) - first[j]
                    })
                    .sum();
                if best.is_none_or(|(_, _, b)| delta < b) {
                    best = Some((mi, o, delta));
                }
            }
        }
        let Some((mi, o, delta)) = best else { break };
        if !(delta < 0.0) {
            break;
        }
        let mut candidate = medoids.clone();
        candidate[mi] = o;
        let cost = total_cost(&d, &candidate);
        if !(cost < current) {
            break;
        }
        medoids = candidate;
        current = cost;
    }

    medoids.sort_unstable();
    let (labels, objective) = assign_to_medoids(points, &medoids);
    Ok(PamResult {
        medoids,
        labels,
        objective,
    })
}

/// Distance to nearest and second-nearest medoid, and the position of the nearest.
fn nearest_two(d: &Array2<f64>, medoids: &[usize]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = d.nrows();
    let mut first = vec![f64::INFINITY; n];
    let mut second = vec![f64::INFINITY; n];
    let mut owner = vec![0; n];
    for j in 0..n {
        for (mi, &m) in medoids.iter().enumerate() {
            let v = d[[m, j]];
            if v < first[j] {
                second[j] = first[j];
                first[j] = v;
                owner[j] = mi;
            } else if v < second[j] {
                second[j] = v;
            }
        }
    }
    (first, second, owner)
}

/// CLARA: PAM on `samples` random subsets, keeping the medoid set with the
/// lowest total dissimilarity over the whole dataset.
pub fn clara(points: ArrayView2<f64>, k: usize, samples: usize, sample_size: usize, seed: u64) -> Result<ClusteringResult> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || !(k < sample_size && sample_size <= n) {
        return Err(Error::SampleTooSmall { k, sample_size, n });
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("CLARA needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    for _ in 0..samples {
        let idx: Vec<usize> = if sample_size == n {
            (0..n).collect()
        } else {
            let mut v = index::sample(&mut rng, n, sample_size).into_vec();
            v.sort_unstable();
            v
        };
        let sub = points.select(Axis(0), &idx);
        let pam = pam_full(sub.view(), k)?;
        let medoids: Vec<usize> = pam.medoids.iter().map(|&m| idx[m]).collect();
        let (labels, objective) = assign_to_medoids(points, &medoids);
        if best.as_ref().is_none_or(|(_, _, b)| objective < *b) {
            best = Some((medoids, labels, objective));
        }
    }
    let (medoids, labels, objective) = best.expect("samples >= 1");
    Ok(ClusteringResult {
        algorithm: Algorithm::Clara,
        k,
        labels,
        centers: points.select(Axis(0), &medoids),
        objective,
        seed,
        medoids: Some(medoids),
    })
}
