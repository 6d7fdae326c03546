use std::collections::VecDeque;

use rayon::prelude::*;

use crate::corpus::TermMatrix;
use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;

/// Heat-kernel k-nearest-neighbour graph over documents.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    /// Symmetric, zero diagonal.
    pub adjacency: SparseMatrix,
    pub degrees: Vec<f64>,
    /// `D − A`
    pub laplacian: SparseMatrix,
    pub k_neighbors: usize,
    pub sigma: f64,
    /// Whether document columns were scaled to unit length before distances.
    pub normalized_inputs: bool,
}

impl SimilarityGraph {
    /// Wraps an explicit adjacency matrix, deriving degrees and Laplacian.
    pub fn from_adjacency(adjacency: SparseMatrix) -> Result<Self> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(Error::Shape("adjacency must be square".into()));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::Input("adjacency is not symmetric".into()));
        }
        if let Some(i) = (0..n).find(|&i| adjacency.get(i, i) != 0.0) {
            return Err(Error::Input(format!("adjacency has a self-loop at vertex {i}")));
        }
        if let Some((i, j, v)) = adjacency.triplets().find(|&(_, _, v)| v < 0.0) {
            return Err(Error::Input(format!("negative weight {v} on edge ({i}, {j})")));
        }
        let degrees = adjacency.row_sums();
        if let Some(v) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::Input(format!(
                "vertex {v} has no neighbours (zero degree)"
            )));
        }
        let mut triplets: Vec<(usize, usize, f64)> =
            adjacency.triplets().map(|(i, j, v)| (i, j, -v)).collect();
        triplets.extend(degrees.iter().enumerate().map(|(i, &d)| (i, i, d)));
        let laplacian = SparseMatrix::from_triplets(n, n, triplets)?;
        Ok(Self {
            adjacency,
            degrees,
            laplacian,
            k_neighbors: 0,
            sigma: 0.0,
            normalized_inputs: false,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_diagonal(&self.degrees).expect("degrees are finite")
    }

    pub fn connected_components(&self) -> usize {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &u in self.adjacency.row(v).0 {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        components
    }
}

pub fn heat_kernel(squared_distance: f64, sigma: f64) -> f64 {
    (-squared_distance / (2.0 * sigma * sigma)).exp()
}

/// Indices of the `k` nearest documents of every document (self excluded),
/// ties broken by lower index, with their squared distances.
pub fn nearest_neighbors(x: &TermMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
    let terms = &x.matrix;
    let docs = terms.transpose();
    let n = docs.rows();
    let sq_norms: Vec<f64> = (0..n)
        .map(|j| docs.row(j).1.iter().map(|v| v * v).sum())
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dots = vec![0.0; n];
            let (tids, tvals) = docs.row(i);
            for (&t, &w) in tids.iter().zip(tvals) {
                let (dids, dvals) = terms.row(t);
                for (&j, &v) in dids.iter().zip(dvals) {
                    dots[j] += w * v;
                }
            }
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((sq_norms[i] + sq_norms[j] - 2.0 * dots[j]).max(0.0), j))
                .collect();
            let kk = k.min(cand.len());
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if kk < cand.len() {
                cand.select_nth_unstable_by(kk, cmp);
                cand.truncate(kk);
            }
            cand.sort_by(cmp);
            cand.into_iter().map(|(d, j)| (j, d)).collect()
        })
        .collect()
}

/// Builds `A_ij = exp(−‖x_i − x_j‖² / 2σ²)` on pairs where either document is
/// among the other's `k` nearest neighbours. Distances are taken between
/// unit-normalized document columns.
pub fn build_graph(x: &TermMatrix, k: usize, sigma: f64) -> Result<SimilarityGraph> {
    if k == 0 {
        return Err(Error::Param("k must be at least 1".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Param(format!("sigma must be positive, got {sigma}")));
    }
    let n = x.num_documents();
    if n < 2 {
        return Err(Error::Input(format!(
            "a similarity graph needs at least two documents, got {n}; vertex 0 would be isolated"
        )));
    }
    let normalized = if x.normalized {
        x.clone()
    } else {
        x.normalized_columns()
    };
    let knn = nearest_neighbors(&normalized, k);
    let mut triplets = Vec::with_capacity(2 * n * k);
    for (i, nbrs) in knn.iter().enumerate() {
        for &(j, d2) in nbrs {
            let w = heat_kernel(d2, sigma);
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
    }
    // Mutual neighbours were pushed twice with identical weights.
    let mut seen = std::collections::HashMap::with_capacity(triplets.len());
    for (i, j, w) in triplets {
        seen.insert((i, j), w);
    }
    let triplets = seen.into_iter().map(|((i, j), w)| (i, j, w)).collect();
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    let mut graph = SimilarityGraph::from_adjacency(adjacency)?;
    graph.k_neighbors = k;
    graph.sigma = sigma;
    graph.normalized_inputs = true;
    Ok(graph)
}
