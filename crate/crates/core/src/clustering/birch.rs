//! BIRCH: a single-pass clustering-feature tree followed by weighted k-means
//! over the leaf entries.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assign_with_repair, check_k, kmeans::kmeans_plus_plus, kmeans::lloyd, Algorithm, ClusteringResult};
use crate::error::{Error, Result};

/// Restarts of the global k-means step; the lowest weighted SSQ wins.
const GLOBAL_RESTARTS: usize = 10;
const GLOBAL_MAX_ITER: usize = 300;

/// Clustering feature: point count, linear sum and sum of squared norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CfEntry {
    pub n: usize,
    pub ls: Array1<f64>,
    pub ss: f64,
}

impl CfEntry {
    pub fn from_point(x: ArrayView1<f64>) -> Self {
        Self {
            n: 1,
            ls: x.to_owned(),
            ss: x.dot(&x),
        }
    }

    pub fn add(&mut self, other: &CfEntry) {
        self.n += other.n;
        self.ls += &other.ls;
        self.ss += other.ss;
    }

    pub fn merged(&self, other: &CfEntry) -> CfEntry {
        let mut m = self.clone();
        m.add(other);
        m
    }

    pub fn centroid(&self) -> Array1<f64> {
        &self.ls / self.n as f64
    }

    /// Root-mean-square distance of the summarized points to their centroid.
    pub fn radius(&self) -> f64 {
        let n = self.n as f64;
        let c = &self.ls / n;
        (self.ss / n - c.dot(&c)).max(0.0).sqrt()
    }

    fn sum<'a>(entries: impl IntoIterator<Item = &'a CfEntry>) -> Option<CfEntry> {
        let mut it = entries.into_iter();
        let mut total = it.next()?.clone();
        for e in it {
            total.add(e);
        }
        Some(total)
    }
}

#[derive(Debug, Clone)]
struct Node {
    entries: Vec<CfEntry>,
    /// Child node of each entry; empty for leaves.
    children: Vec<usize>,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct CfTree {
    threshold: f64,
    branching: usize,
    nodes: Vec<Node>,
    root: usize,
}

impl CfTree {
    pub fn new(threshold: f64, branching: usize) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidConfig("BIRCH threshold must be positive".into()));
        }
        if branching < 2 {
            return Err(Error::InvalidConfig("BIRCH branching factor must be at least 2".into()));
        }
        Ok(Self {
            threshold,
            branching,
            nodes: vec![Node {
                entries: Vec::new(),
                children: Vec::new(),
            }],
            root: 0,
        })
    }

    pub fn insert(&mut self, x: ArrayView1<f64>) {
        let point = CfEntry::from_point(x);
        if let Some(sibling) = self.insert_into(self.root, &point) {
            let old = self.root;
            let old_cf = self.summary(old);
            let sib_cf = self.summary(sibling);
            self.nodes.push(Node {
                entries: vec![old_cf, sib_cf],
                children: vec![old, sibling],
            });
            self.root = self.nodes.len() - 1;
        }
    }

    /// Inserts into the subtree at `node`; returns the new sibling if `node` split.
    fn insert_into(&mut self, node: usize, point: &CfEntry) -> Option<usize> {
        let closest = closest_entry(&self.nodes[node].entries, point.ls.view());
        if self.nodes[node].is_leaf() {
            let merged = closest.and_then(|i| {
                let m = self.nodes[node].entries[i].merged(point);
                (m.radius() <= self.threshold).then_some((i, m))
            });
            match merged {
                Some((i, m)) => self.nodes[node].entries[i] = m,
                None => self.nodes[node].entries.push(point.clone()),
            }
        } else {
            let i = closest.expect("internal nodes are never empty");
            let child = self.nodes[node].children[i];
            let split = self.insert_into(child, point);
            self.nodes[node].entries[i] = self.summary(child);
            if let Some(sibling) = split {
                let cf = self.summary(sibling);
                self.nodes[node].entries.push(cf);
                self.nodes[node].children.push(sibling);
            }
        }
        (self.nodes[node].entries.len() > self.branching).then(|| self.split(node))
    }

    /// Splits `node` around its farthest pair of entry centroids.
    fn split(&mut self, node: usize) -> usize {
        let entries = std::mem::take(&mut self.nodes[node].entries);
        let children = std::mem::take(&mut self.nodes[node].children);
        let centroids: Vec<Array1<f64>> = entries.iter().map(CfEntry::centroid).collect();
        let (mut a, mut b, mut best) = (0, 1, -1.0);
        for i in 0..centroids.len() {
            for j in i + 1..centroids.len() {
                let d = sq(&centroids[i], &centroids[j]);
                if d > best {
                    (a, b, best) = (i, j, d);
                }
            }
        }
        let mut keep = Node {
            entries: Vec::new(),
            children: Vec::new(),
        };
        let mut moved = keep.clone();
        for (i, entry) in entries.into_iter().enumerate() {
            let to_keep = i == a || (i != b && sq(&centroids[i], &centroids[a]) <= sq(&centroids[i], &centroids[b]));
            let target = if to_keep { &mut keep } else { &mut moved };
            target.entries.push(entry);
            if !children.is_empty() {
                target.children.push(children[i]);
            }
        }
        self.nodes[node] = keep;
        self.nodes.push(moved);
        self.nodes.len() - 1
    }

    fn summary(&self, node: usize) -> CfEntry {
        CfEntry::sum(&self.nodes[node].entries).expect("tree nodes are never empty")
    }

    /// Leaf entries in depth-first order.
    pub fn leaf_entries(&self) -> Vec<&CfEntry> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_leaf() {
                out.extend(node.entries.iter());
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    pub fn root_summary(&self) -> Option<CfEntry> {
        CfEntry::sum(&self.nodes[self.root].entries)
    }

    /// Checks that every internal entry equals the sum of its child's entries
    /// (count exactly, sums within `tol` relative) and that no node exceeds the
    /// branching factor.
    pub fn verify(&self, tol: f64) -> std::result::Result<(), String> {
        for (id, node) in self.nodes.iter().enumerate() {
            if node.entries.len() > self.branching {
                return Err(format!("node {id} has {} entries", node.entries.len()));
            }
            for (entry, &child) in node.entries.iter().zip(&node.children) {
                let sum = self.summary(child);
                let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
                if entry.n != sum.n
                    || !close(entry.ss, sum.ss)
                    || !entry.ls.iter().zip(sum.ls.iter()).all(|(&a, &b)| close(a, b))
                {
                    return Err(format!("entry for child {child} of node {id} is not the sum of its children"));
                }
            }
        }
        Ok(())
    }
}

fn sq(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn closest_entry(entries: &[CfEntry], x: ArrayView1<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let inv = 1.0 / e.n as f64;
        let d: f64 = e.ls.iter().zip(x.iter()).map(|(l, v)| (l * inv - v).powi(2)).sum();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// BIRCH with a k-means global step over leaf-entry centroids weighted by counts.
pub fn birch(points: ArrayView2<f64>, k: usize, threshold: f64, branching: usize, seed: u64) -> Result<ClusteringResult> {
    let n = points.nrows();
    check_k(k, n)?;
    let mut tree = CfTree::new(threshold, branching)?;
    for row in points.rows() {
        tree.insert(row);
    }
    let leaves = tree.leaf_entries();
    if leaves.len() < k {
        return Err(Error::TooFewLeafEntries { entries: leaves.len(), k });
    }
    let mut centroids = Array2::zeros((leaves.len(), points.ncols()));
    for (mut row, e) in centroids.rows_mut().into_iter().zip(&leaves) {
        row.assign(&e.centroid());
    }
    let weights: Vec<f64> = leaves.iter().map(|e| e.n as f64).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Array2<f64>, f64)> = None;
    for _ in 0..GLOBAL_RESTARTS {
        let init = kmeans_plus_plus(centroids.view(), Some(&weights), k, &mut rng);
        let (centers, _, obj) = lloyd(centroids.view(), Some(&weights), init, GLOBAL_MAX_ITER);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((centers, obj));
        }
    }
    let (mut centers, _) = best.expect("at least one restart");
    let (labels, d2) = assign_with_repair(points, &mut centers);
    Ok(ClusteringResult {
        algorithm: Algorithm::Birch,
        k,
        labels,
        centers,
        objective: d2.iter().sum(),
        seed,
        medoids: None,
    })
}
