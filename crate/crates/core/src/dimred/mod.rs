//! Unsupervised reductions `Y = f(X)` and their median binarization.
//!
//! Four reductions produce the `q × n` code matrix `Y`:
//!
//! * **AE** weighted average of the word embeddings of each text;
//! * **LSA** projection on the top-`q` left singular vectors of `X`;
//! * **LE** the `q` smallest nontrivial generalized eigenvectors of
//!   `L v = λ D v` on the heat-kernel kNN graph;
//! * **LPI** the linear map solving `X L Xᵀ a = λ X D Xᵀ a`, computed in the
//!   leading singular subspace of `X` and kept for unseen texts.
//!
//! [`binarize_median`] thresholds each row of `Y` at its median to produce the
//! bits the network is trained to predict.

mod graph;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use graph::{build_graph, heat_kernel, nearest_neighbors, SimilarityGraph};

use crate::corpus::{inverse_document_frequencies, term_counts, Corpus, TermMatrix, Weighting};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numerics::{
    eig_generalized_sym, eig_sym_sparse_smallest, svd_truncated_sparse, DenseMatrix, Side,
    SolverOptions,
};
use crate::seed;

/// Largest singular subspace kept before solving the LPI eigenproblem.
pub const LPI_MAX_SUBSPACE: usize = 200;
/// Singular values below this fraction of the largest are treated as zero.
pub const LPI_RANK_TOL: f64 = 1e-10;
/// Eigenvalues below this count as zero when checking LE connectivity.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Ae,
    Lsa,
    Le,
    Lpi,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ae => "ae",
            Method::Lsa => "lsa",
            Method::Le => "le",
            Method::Lpi => "lpi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ae" => Ok(Method::Ae),
            "lsa" => Ok(Method::Lsa),
            "le" => Ok(Method::Le),
            "lpi" => Ok(Method::Lpi),
            other => Err(Error::Param(format!(
                "unknown reduction method '{other}' (expected ae, lsa, le or lpi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCodes {
    /// `q × n`
    pub y: DenseMatrix,
    pub method: Method,
    /// `d × q` projection, LPI only.
    pub mapping: Option<DenseMatrix>,
    /// Documents whose code was forced to zero (no usable weight).
    pub zero_documents: usize,
    /// Ridge the generalized solver had to add (LPI only).
    pub ridge: f64,
}

impl ReducedCodes {
    pub fn q(&self) -> usize {
        self.y.rows()
    }

    pub fn n(&self) -> usize {
        self.y.cols()
    }

    /// Maps an unseen term column through the LPI projection.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.mapping.as_ref().ok_or_else(|| {
            Error::Param(format!("{} codes carry no out-of-sample mapping", self.method))
        })?;
        if x.len() != w.rows() {
            return Err(Error::Shape(format!(
                "column has {} terms, mapping expects {}",
                x.len(),
                w.rows()
            )));
        }
        Ok(w.transpose_mul_vec(x))
    }
}

/// Weighted average of word embeddings per document.
pub fn reduce_ae(corpus: &Corpus, table: &EmbeddingTable, weighting: Weighting) -> ReducedCodes {
    let dim = table.dim();
    let idf = match weighting {
        Weighting::Tf => None,
        Weighting::TfIdf => Some(inverse_document_frequencies(corpus)),
    };
    let vectors: Vec<Vec<f64>> = corpus
        .vocabulary
        .words()
        .iter()
        .map(|w| table.lookup_or_init(w))
        .collect();
    let mut y = DenseMatrix::zeros(dim, corpus.len());
    let mut zero_documents = 0;
    for (i, doc) in corpus.documents.iter().enumerate() {
        let mut acc = vec![0.0; dim];
        let mut total = 0.0;
        for (w, count) in term_counts(doc) {
            let weight = count as f64 * idf.as_ref().map_or(1.0, |idf| idf[w]);
            total += weight;
            for (a, e) in acc.iter_mut().zip(&vectors[w]) {
                *a += weight * e;
            }
        }
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
            y.set_column(i, &acc);
        } else {
            zero_documents += 1;
        }
    }
    if zero_documents > 0 {
        log::warn!("{zero_documents} documents have zero total weight; their codes are zero");
    }
    ReducedCodes {
        y,
        method: Method::Ae,
        mapping: None,
        zero_documents,
        ridge: 0.0,
    }
}

/// `Y = U_qᵀ X` with `U_q` the top-`q` left singular vectors of `X`.
pub fn reduce_lsa(x: &TermMatrix, q: usize) -> Result<ReducedCodes> {
    let (d, n) = (x.num_terms(), x.num_documents());
    if q == 0 || q > d.min(n) {
        return Err(Error::Param(format!(
            "LSA needs 1 <= q <= min(d, n) = {}, got {q}",
            d.min(n)
        )));
    }
    let svd = svd_truncated_sparse(&x.matrix, q)?;
    let mut y = DenseMatrix::zeros(q, n);
    for t in 0..q {
        let row = x.matrix.transpose_mul_vec(&svd.left_vectors.column(t));
        y.row_mut(t).copy_from_slice(&row);
    }
    Ok(ReducedCodes {
        y,
        method: Method::Lsa,
        mapping: None,
        zero_documents: 0,
        ridge: 0.0,
    })
}

/// Laplacian eigenmaps: rows of `Y` are the `q` smallest nontrivial
/// generalized eigenvectors of `L v = λ D v`, so `Y D Yᵀ = I` and `Y D 1 = 0`.
pub fn reduce_le(graph: &SimilarityGraph, q: usize) -> Result<ReducedCodes> {
    reduce_le_with(graph, q, &SolverOptions::default())
}

pub fn reduce_le_with(
    graph: &SimilarityGraph,
    q: usize,
    opts: &SolverOptions,
) -> Result<ReducedCodes> {
    let n = graph.num_vertices();
    if q == 0 || q >= n {
        return Err(Error::Param(format!("LE needs 1 <= q < n = {n}, got {q}")));
    }
    let components = graph.connected_components();
    if components > 1 {
        return Err(Error::Input(format!(
            "similarity graph has {components} connected components; \
             Laplacian eigenmaps needs a connected graph (try a larger k)"
        )));
    }
    let eig = eig_sym_sparse_smallest(&graph.laplacian, &graph.degree_matrix(), q, opts)?;
    let zeros = eig
        .eigenvalues
        .iter()
        .filter(|v| v.abs() < ZERO_EIGENVALUE_TOL)
        .count();
    if zeros > 1 {
        return Err(Error::Numeric(format!(
            "{zeros} eigenvalues below {ZERO_EIGENVALUE_TOL:e} on a connected graph"
        )));
    }
    let mut y = DenseMatrix::zeros(q, n);
    for t in 0..q {
        y.row_mut(t).copy_from_slice(&eig.vector(t + 1));
    }
    Ok(ReducedCodes {
        y,
        method: Method::Le,
        mapping: None,
        zero_documents: 0,
        ridge: 0.0,
    })
}

/// Intermediate quantities of an LPI solve, exposed for verification.
#[derive(Debug, Clone)]
pub struct LpiSolution {
    pub codes: ReducedCodes,
    pub eigenvalues: Vec<f64>,
    /// Dimension of the singular subspace the problem was solved in.
    pub subspace_dim: usize,
}

/// Locality preserving indexing.
pub fn reduce_lpi(x: &TermMatrix, graph: &SimilarityGraph, q: usize) -> Result<ReducedCodes> {
    solve_lpi(x, graph, q).map(|s| s.codes)
}

pub fn solve_lpi(x: &TermMatrix, graph: &SimilarityGraph, q: usize) -> Result<LpiSolution> {
    let (d, n) = (x.num_terms(), x.num_documents());
    if graph.num_vertices() != n {
        return Err(Error::Shape(format!(
            "graph has {} vertices but X has {n} documents",
            graph.num_vertices()
        )));
    }
    if q == 0 {
        return Err(Error::Param("q must be at least 1".into()));
    }
    let k = d.min(n).min(LPI_MAX_SUBSPACE);
    if k == 0 {
        return Err(Error::Param("X is empty".into()));
    }
    let svd = svd_truncated_sparse(&x.matrix, k)?;
    let sigma_max = svd.singular_values[0];
    let rho = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > LPI_RANK_TOL * sigma_max)
        .count();
    if rho < q {
        return Err(Error::Param(format!(
            "effective rank of X after pre-projection is {rho}; q = {q} exceeds it \
             (at most {rho} dimensions are achievable)"
        )));
    }
    // Projected data X̃ = U_ρᵀ X (ρ × n).
    let mut xt = DenseMatrix::zeros(rho, n);
    for t in 0..rho {
        let row = x.matrix.transpose_mul_vec(&svd.left_vectors.column(t));
        xt.row_mut(t).copy_from_slice(&row);
    }
    let xt_t = xt.transpose();
    let lhs = xt.matmul(&graph.laplacian.mul_dense(&xt_t)?)?;
    let rhs = xt.matmul(&graph.degree_matrix().mul_dense(&xt_t)?)?;
    let lhs = symmetrize(&lhs);
    let rhs = symmetrize(&rhs);
    let eig = eig_generalized_sym(&lhs, &rhs, q, Side::Smallest)?;
    if eig.ridge > 0.0 {
        log::warn!("LPI: X D Xᵀ was singular in the subspace; ridge {:e} applied", eig.ridge);
    }

    // W = U_ρ ã (d × q); Y = ãᵀ X̃ = Wᵀ X.
    let u_rho = svd.left_vectors.leading_columns(rho);
    let mapping = u_rho.matmul(&eig.eigenvectors)?;
    let y = eig.eigenvectors.transpose().matmul(&xt)?;
    Ok(LpiSolution {
        codes: ReducedCodes {
            y,
            method: Method::Lpi,
            mapping: Some(mapping),
            zero_documents: 0,
            ridge: eig.ridge,
        },
        eigenvalues: eig.eigenvalues,
        subspace_dim: rho,
    })
}

fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// `q × n` bit matrix with per-row thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodes {
    q: usize,
    n: usize,
    bits: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binarization {
    pub codes: BinaryCodes,
    /// Per-dimension medians.
    pub thresholds: Vec<f64>,
}

impl BinaryCodes {
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("ragged bit rows".into()));
        }
        Ok(Self {
            q: rows.len(),
            n,
            bits: rows.iter().flatten().map(|&b| b as u8).collect(),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, dim: usize, doc: usize) -> bool {
        self.bits[dim * self.n + doc] != 0
    }

    pub fn set(&mut self, dim: usize, doc: usize, value: bool) {
        self.bits[dim * self.n + doc] = value as u8;
    }

    pub fn row(&self, dim: usize) -> impl Iterator<Item = bool> + '_ {
        self.bits[dim * self.n..(dim + 1) * self.n].iter().map(|&b| b != 0)
    }

    /// Targets for one document as 0/1 reals.
    pub fn column(&self, doc: usize) -> Vec<f64> {
        (0..self.q).map(|d| self.get(d, doc) as u8 as f64).collect()
    }

    pub fn ones_fraction(&self, dim: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.row(dim).filter(|&b| b).count() as f64 / self.n as f64
    }

    /// Keeps only the given documents, in order.
    pub fn select_columns(&self, docs: &[usize]) -> BinaryCodes {
        let mut bits = Vec::with_capacity(self.q * docs.len());
        for d in 0..self.q {
            bits.extend(docs.iter().map(|&i| self.bits[d * self.n + i]));
        }
        BinaryCodes {
            q: self.q,
            n: docs.len(),
            bits,
        }
    }

    /// Copy with each bit independently flipped with probability `rate`.
    pub fn with_flips(&self, rate: f64, seed_value: u64) -> BinaryCodes {
        let mut rng = seed::rng(seed_value);
        let mut out = self.clone();
        for b in &mut out.bits {
            if rng.random::<f64>() < rate {
                *b ^= 1;
            }
        }
        out
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Bit `(j, i)` is set iff `Y_ji` is strictly greater than the median of row `j`.
pub fn binarize_median(y: &DenseMatrix) -> Result<Binarization> {
    if y.cols() == 0 {
        return Err(Error::Input("cannot binarize codes of zero documents".into()));
    }
    let (q, n) = y.shape();
    let thresholds: Vec<f64> = (0..q).map(|j| median(y.row(j))).collect();
    let mut bits = Vec::with_capacity(q * n);
    for (j, &t) in thresholds.iter().enumerate() {
        bits.extend(y.row(j).iter().map(|&v| (v > t) as u8));
    }
    Ok(Binarization {
        codes: BinaryCodes { q, n, bits },
        thresholds,
    })
}
