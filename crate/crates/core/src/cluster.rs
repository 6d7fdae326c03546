//! K-means with k-means++ seeding and parallel restarts.

use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seeding {
    /// Distance-proportional (k-means++).
    PlusPlus,
    /// `k` distinct points drawn uniformly.
    Uniform,
}

impl FromStr for Seeding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans++" | "plusplus" | "++" => Ok(Seeding::PlusPlus),
            "uniform" | "random" => Ok(Seeding::Uniform),
            other => Err(Error::Param(format!(
                "unknown seeding '{other}' (expected kmeans++ or uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub seed: u64,
    pub seeding: Seeding,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 100,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
            seeding: Seeding::PlusPlus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// `dim × k`
    pub centroids: DenseMatrix,
    pub objective: f64,
    pub restart_id: usize,
    /// Objective after each assignment step; nonincreasing.
    pub history: Vec<f64>,
    /// Whether the labels reached a fixed point before `max_iters` or `tol`.
    pub converged: bool,
}

/// Points for clustering, stored one per row.
#[derive(Debug, Clone)]
pub struct Points {
    dim: usize,
    data: PointData,
    sq_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
enum PointData {
    Dense(Vec<f64>),
    Sparse(SparseMatrix),
}

impl Points {
    /// Points are the columns of `m`.
    pub fn from_columns(m: &DenseMatrix) -> Self {
        let t = m.transpose();
        let sq_norms = (0..t.rows()).map(|i| t.row(i).iter().map(|v| v * v).sum()).collect();
        Self {
            dim: m.rows(),
            data: PointData::Dense(t.into_vec()),
            sq_norms,
        }
    }

    /// Points are the columns of a sparse `dim × n` matrix.
    pub fn from_sparse_columns(m: &SparseMatrix) -> Self {
        let t = m.transpose();
        let sq_norms = (0..t.rows())
            .map(|i| t.row(i).1.iter().map(|v| v * v).sum())
            .collect();
        Self {
            dim: m.rows(),
            data: PointData::Sparse(t),
            sq_norms,
        }
    }

    pub fn len(&self) -> usize {
        self.sq_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sq_norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.add_to(i, &mut v);
        v
    }

    fn dot(&self, i: usize, c: &[f64]) -> f64 {
        match &self.data {
            PointData::Dense(d) => d[i * self.dim..(i + 1) * self.dim]
                .iter()
                .zip(c)
                .map(|(a, b)| a * b)
                .sum(),
            PointData::Sparse(s) => {
                let (idx, vals) = s.row(i);
                idx.iter().zip(vals).map(|(&j, v)| v * c[j]).sum()
            }
        }
    }

    fn add_to(&self, i: usize, acc: &mut [f64]) {
        match &self.data {
            PointData::Dense(d) => {
                for (a, v) in acc.iter_mut().zip(&d[i * self.dim..(i + 1) * self.dim]) {
                    *a += v;
                }
            }
            PointData::Sparse(s) => {
                let (idx, vals) = s.row(i);
                for (&j, v) in idx.iter().zip(vals) {
                    acc[j] += v;
                }
            }
        }
    }

    /// `‖x_i − c‖²` given `‖c‖²`, clamped at zero.
    fn sq_dist(&self, i: usize, c: &[f64], c_sq: f64) -> f64 {
        (self.sq_norms[i] - 2.0 * self.dot(i, c) + c_sq).max(0.0)
    }
}

/// Scales every nonzero column to unit length; returns the number of zero
/// columns, which are left as they are.
pub fn normalize_columns(f: &DenseMatrix) -> (DenseMatrix, usize) {
    let mut out = f.clone();
    let mut zeros = 0;
    for j in 0..f.cols() {
        let col = f.column(j);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scaled: Vec<f64> = col.iter().map(|v| v / norm).collect();
            out.set_column(j, &scaled);
        } else {
            zeros += 1;
        }
    }
    if zeros > 0 {
        log::warn!("{zeros} zero feature columns left unnormalized");
    }
    (out, zeros)
}

fn validate(points: &Points, config: &KMeansConfig) -> Result<()> {
    if config.k == 0 || config.restarts == 0 {
        return Err(Error::Param("k and restarts must be at least 1".into()));
    }
    if config.k > points.len() {
        return Err(Error::Param(format!(
            "k = {} exceeds the number of points {}",
            config.k,
            points.len()
        )));
    }
    Ok(())
}

struct Centroids {
    dim: usize,
    values: Vec<f64>,
    sq_norms: Vec<f64>,
}

impl Centroids {
    fn new(dim: usize, values: Vec<f64>) -> Self {
        let sq_norms = values
            .chunks(dim.max(1))
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        Self {
            dim,
            values,
            sq_norms,
        }
    }

    fn get(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    fn k(&self) -> usize {
        self.sq_norms.len()
    }
}

fn initial_centroids(points: &Points, k: usize, seeding: Seeding, rng: &mut impl Rng) -> Centroids {
    let n = points.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    match seeding {
        Seeding::Uniform => {
            chosen = rand::seq::index::sample(rng, n, k).into_vec();
        }
        Seeding::PlusPlus => {
            chosen.push(rng.random_range(0..n));
            let mut d2: Vec<f64> = vec![f64::INFINITY; n];
            while chosen.len() < k {
                let last = points.point(*chosen.last().expect("nonempty"));
                let last_sq = last.iter().map(|v| v * v).sum();
                for (i, d) in d2.iter_mut().enumerate() {
                    *d = d.min(points.sq_dist(i, &last, last_sq));
                }
                for &c in &chosen {
                    d2[c] = 0.0;
                }
                let total: f64 = d2.iter().sum();
                let next = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut pick = None;
                    for (i, &d) in d2.iter().enumerate() {
                        if d > 0.0 {
                            pick = Some(i);
                            if target < d {
                                break;
                            }
                            target -= d;
                        }
                    }
                    pick.expect("positive total")
                } else {
                    let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                    free[rng.random_range(0..free.len())]
                };
                chosen.push(next);
            }
        }
    }
    let mut values = Vec::with_capacity(k * points.dim());
    for &c in &chosen {
        values.extend(points.point(c));
    }
    Centroids::new(points.dim(), values)
}

/// Nearest centroid per point (ties to the lower index) and distances.
fn assign(points: &Points, c: &Centroids) -> (Vec<usize>, Vec<f64>) {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for j in 0..c.k() {
                let d = points.sq_dist(i, c.get(j), c.sq_norms[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .unzip()
}

/// Member means; an empty cluster takes the point farthest from its current
/// centroid (each such point used once).
fn update(points: &Points, labels: &[usize], dists: &[f64], k: usize) -> Centroids {
    let dim = points.dim();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        points.add_to(i, &mut sums[l * dim..(l + 1) * dim]);
    }
    let mut taken: Vec<usize> = Vec::new();
    for j in 0..k {
        let slot = &mut sums[j * dim..(j + 1) * dim];
        if counts[j] > 0 {
            let inv = 1.0 / counts[j] as f64;
            slot.iter_mut().for_each(|v| *v *= inv);
        } else {
            let far = (0..points.len())
                .filter(|i| !taken.contains(i))
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k <= n");
            taken.push(far);
            slot.copy_from_slice(&points.point(far));
        }
    }
    Centroids::new(dim, sums)
}

/// One Lloyd run from a seeded initialization.
pub fn kmeans_once(points: &Points, config: &KMeansConfig, restart_seed: u64) -> Result<ClusterAssignment> {
    validate(points, config)?;
    let k = config.k;
    let mut rng = seed::rng(restart_seed);
    let mut centroids = initial_centroids(points, k, config.seeding, &mut rng);
    let (mut labels, mut dists) = assign(points, &centroids);
    let mut history = vec![dists.iter().sum::<f64>()];
    let mut converged = false;
    for _ in 0..config.max_iters {
        centroids = update(points, &labels, &dists, k);
        let (new_labels, new_dists) = assign(points, &centroids);
        let objective: f64 = new_dists.iter().sum();
        let prev = *history.last().expect("nonempty");
        history.push(objective);
        dists = new_dists;
        if new_labels == labels {
            converged = true;
            break;
        }
        labels = new_labels;
        if prev <= 0.0 || (prev - objective) / prev < config.tol {
            break;
        }
    }
    let objective = dists.iter().sum();
    let mut centroid_matrix = DenseMatrix::zeros(points.dim(), k);
    for j in 0..k {
        centroid_matrix.set_column(j, centroids.get(j));
    }
    Ok(ClusterAssignment {
        labels,
        centroids: centroid_matrix,
        objective,
        restart_id: 0,
        history,
        converged,
    })
}

/// Seed of restart `r` under master seed `master`.
pub fn restart_seed(master: u64, r: usize) -> u64 {
    seed::derive_indexed(master, "kmeans/restart", r as u64)
}

/// Every restart, in restart order.
pub fn kmeans_all_restarts(points: &Points, config: &KMeansConfig) -> Result<Vec<ClusterAssignment>> {
    validate(points, config)?;
    (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            kmeans_once(points, config, restart_seed(config.seed, r)).map(|mut a| {
                a.restart_id = r;
                a
            })
        })
        .collect()
}

/// Lowest objective, ties to the lowest restart id.
pub fn best_of(runs: Vec<ClusterAssignment>) -> Option<ClusterAssignment> {
    runs.into_iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.restart_id.cmp(&b.restart_id)))
}

pub fn kmeans_restarts(points: &Points, config: &KMeansConfig) -> Result<ClusterAssignment> {
    let runs = kmeans_all_restarts(points, config)?;
    Ok(best_of(runs).expect("restarts >= 1"))
}
