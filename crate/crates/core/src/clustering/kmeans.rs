//! Mini-batch k-means with per-center learning rates, plus the weighted
//! Lloyd iteration used by the BIRCH global step.

use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assign, assign_with_repair, check_k, nearest, sq_dist, Algorithm, ClusteringResult};
use crate::error::{Error, Result};

/// Greedy k-means++ seeding over `points`, optionally weighted: each step
/// draws `2 + ln k` candidates and keeps the one with the lowest potential.
pub fn kmeans_plus_plus<R: Rng>(
    points: ArrayView2<f64>,
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut R,
) -> Array2<f64> {
    let n = points.nrows();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut centers = Array2::zeros((k, points.ncols()));
    let mut chosen = vec![false; n];
    let trials = 2 + (k as f64).ln() as usize;

    let first = sample_weighted(rng, (0..n).map(w), n);
    centers.row_mut(0).assign(&points.row(first));
    chosen[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();

    for c in 1..k {
        let total: f64 = (0..n).map(|i| w(i) * d2[i]).sum();
        let (pick, next) = if total > 0.0 {
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for _ in 0..trials {
                let cand = sample_weighted(rng, (0..n).map(|i| w(i) * d2[i]), n);
                let nd: Vec<f64> = (0..n).map(|i| d2[i].min(sq_dist(points.row(i), points.row(cand)))).collect();
                let potential: f64 = (0..n).map(|i| w(i) * nd[i]).sum();
                if best.as_ref().is_none_or(|b| potential < b.0) {
                    best = Some((potential, cand, nd));
                }
            }
            let (_, cand, nd) = best.expect("at least one trial");
            (cand, nd)
        } else {
            // every point coincides with a chosen center
            let pick = (0..n).find(|&i| !chosen[i]).unwrap_or(0);
            (pick, d2.clone())
        };
        chosen[pick] = true;
        centers.row_mut(c).assign(&points.row(pick));
        d2 = next;
    }
    centers
}

fn sample_weighted<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone, n: usize) -> usize {
    let total: f64 = weights.clone().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    last_positive.min(n - 1)
}

const INIT_ROUNDS: usize = 3;

/// Lowest-inertia seeding of `rounds` k-means++ draws on `sample`.
fn best_seeding<R: Rng>(sample: ArrayView2<f64>, k: usize, rounds: usize, rng: &mut R) -> Array2<f64> {
    let mut best: Option<(f64, Array2<f64>)> = None;
    for _ in 0..rounds {
        let c = kmeans_plus_plus(sample, None, k, rng);
        let inertia: f64 = sample.rows().into_iter().map(|p| nearest(p, c.view()).1).sum();
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, c));
        }
    }
    best.expect("at least one round").1
}

/// Mini-batch k-means: each batch is assigned to the current centers, then
/// every batch point pulls its center with step `1 / count(center)`.
pub fn minibatch_kmeans(
    points: ArrayView2<f64>,
    k: usize,
    batch: usize,
    iters: usize,
    seed: u64,
) -> Result<ClusteringResult> {
    let n = points.nrows();
    check_k(k, n)?;
    if batch == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = batch.min(n);

    let init_size = (3 * batch).max(3 * k).min(n);
    let sample = if init_size == n {
        points.to_owned()
    } else {
        let mut idx = index::sample(&mut rng, n, init_size).into_vec();
        idx.sort_unstable();
        points.select(ndarray::Axis(0), &idx)
    };
    let mut centers = best_seeding(sample.view(), k, INIT_ROUNDS, &mut rng);

    let mut counts = vec![0usize; k];
    for _ in 0..iters {
        let idx = index::sample(&mut rng, n, batch).into_vec();
        let cached: Vec<usize> = idx.iter().map(|&i| nearest(points.row(i), centers.view()).0).collect();
        for (&i, &c) in idx.iter().zip(&cached) {
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            let mut center = centers.row_mut(c);
            center.zip_mut_with(&points.row(i), |m, &x| *m = (1.0 - eta) * *m + eta * x);
        }
    }

    let (labels, d2) = assign_with_repair(points, &mut centers);
    Ok(ClusteringResult {
        algorithm: Algorithm::Mbk,
        k,
        labels,
        centers,
        objective: d2.iter().sum(),
        seed,
        medoids: None,
    })
}

/// Weighted Lloyd iteration from `centers` until labels stop changing.
/// Returns final centers, labels and the weighted within-cluster SSQ.
pub fn lloyd(
    points: ArrayView2<f64>,
    weights: Option<&[f64]>,
    mut centers: Array2<f64>,
    max_iter: usize,
) -> (Array2<f64>, Vec<usize>, f64) {
    let n = points.nrows();
    let k = centers.nrows();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut labels, _) = assign_with_repair(points, &mut centers);
    for _ in 0..max_iter {
        let mut sums = Array2::<f64>::zeros(centers.dim());
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let c = labels[i];
            mass[c] += w(i);
            sums.row_mut(c).scaled_add(w(i), &points.row(i));
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                let mut row = sums.row_mut(c);
                row /= mass[c];
                centers.row_mut(c).assign(&row);
            }
        }
        let (next, _) = assign_with_repair(points, &mut centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let objective = assign(points, centers.view())
        .into_iter()
        .enumerate()
        .map(|(i, (_, d))| w(i) * d)
        .sum();
    (centers, labels, objective)
}
