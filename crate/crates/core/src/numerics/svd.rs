use super::dense::{fix_sign, DenseMatrix};
use super::lanczos::{bidiagonal_svd, LinearOperator, SolverOptions};
use super::sparse::SparseMatrix;
use super::{DENSE_LIMIT, DENSE_MAX_ITERS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    /// `rows × k`, orthonormal columns.
    pub left_vectors: DenseMatrix,
    /// `cols × k`, orthonormal columns.
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U Σ Vᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        let (rows, cols) = (self.left_vectors.rows(), self.right_vectors.rows());
        DenseMatrix::from_fn(rows, cols, |i, j| {
            self.singular_values
                .iter()
                .enumerate()
                .map(|(t, s)| self.left_vectors[(i, t)] * s * self.right_vectors[(j, t)])
                .sum()
        })
    }
}

fn check_k(rows: usize, cols: usize, k: usize) -> Result<()> {
    if k == 0 || k > rows.min(cols) {
        return Err(Error::Param(format!(
            "k = {k} must lie in 1..={} for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    Ok(())
}

/// Top-`k` singular triplets of a dense matrix.
pub fn svd_truncated(a: &DenseMatrix, k: usize) -> Result<SvdResult> {
    check_k(a.rows(), a.cols(), k)?;
    if a.rows().min(a.cols()) <= DENSE_LIMIT {
        dense_svd(a, k)
    } else {
        svd_operator(a, k, &SolverOptions::default())
    }
}

/// Top-`k` singular triplets of a sparse matrix.
pub fn svd_truncated_sparse(a: &SparseMatrix, k: usize) -> Result<SvdResult> {
    check_k(a.rows(), a.cols(), k)?;
    if a.rows().min(a.cols()) <= DENSE_LIMIT {
        dense_svd(&a.to_dense(), k)
    } else {
        svd_operator(a, k, &SolverOptions::default())
    }
}

/// Iterative route, usable on any operator.
pub fn svd_operator(
    op: &dyn LinearOperator,
    k: usize,
    opts: &SolverOptions,
) -> Result<SvdResult> {
    check_k(op.nrows(), op.ncols(), k)?;
    let (sigma, us, vs) = bidiagonal_svd(op, k, opts)?;
    finish(op.nrows(), op.ncols(), sigma, us, vs)
}

fn dense_svd(a: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let svd = a
        .to_nalgebra()
        .try_svd(true, true, f64::EPSILON, DENSE_MAX_ITERS)
        .ok_or_else(|| {
            Error::Numeric(format!(
                "SVD did not converge within {DENSE_MAX_ITERS} iterations"
            ))
        })?;
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let sigma = (0..k).map(|i| svd.singular_values[i]).collect();
    let us = (0..k).map(|i| u.column(i).iter().copied().collect()).collect();
    let vs = (0..k).map(|i| vt.row(i).iter().copied().collect()).collect();
    finish(a.rows(), a.cols(), sigma, us, vs)
}

fn finish(
    rows: usize,
    cols: usize,
    sigma: Vec<f64>,
    mut us: Vec<Vec<f64>>,
    mut vs: Vec<Vec<f64>>,
) -> Result<SvdResult> {
    for (u, v) in us.iter_mut().zip(vs.iter_mut()) {
        if fix_sign(u) < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let sigma: Vec<f64> = sigma.into_iter().map(|s| s.max(0.0)).collect();
    Ok(SvdResult {
        singular_values: sigma,
        left_vectors: DenseMatrix::from_columns(rows, &us)?,
        right_vectors: DenseMatrix::from_columns(cols, &vs)?,
    })
}
