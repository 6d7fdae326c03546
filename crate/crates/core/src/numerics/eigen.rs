use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use super::dense::{fix_sign, DenseMatrix};
use super::lanczos::{symmetric_largest, LinearOperator, SolverOptions};
use super::sparse::SparseMatrix;
use super::{DENSE_LIMIT, DENSE_MAX_ITERS};
use crate::error::{Error, Result};

/// Which end of the spectrum to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// One column per eigenvalue.
    pub eigenvectors: DenseMatrix,
    /// Multiple of the identity added to `B` to make it definite (0 if none).
    pub ridge: f64,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }
}

fn check_square(m: &DenseMatrix, name: &str) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::Shape(format!(
            "{name} must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Param(format!(
            "requested {k} eigenpairs of a dimension-{n} problem"
        )));
    }
    Ok(())
}

fn sym_tol(m: &DenseMatrix) -> f64 {
    1e-10 * m.frobenius_norm().max(1.0)
}

fn symmetrized(m: &DenseMatrix) -> DMatrix<f64> {
    let a = m.to_nalgebra();
    (&a + a.transpose()) * 0.5
}

fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, DENSE_MAX_ITERS).ok_or_else(|| {
        Error::Numeric(format!(
            "symmetric eigensolver did not converge within {DENSE_MAX_ITERS} iterations"
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn select(n: usize, k: usize, side: Side) -> std::ops::Range<usize> {
    match side {
        Side::Smallest => 0..k,
        Side::Largest => n - k..n,
    }
}

/// Standard symmetric eigenproblem `A v = λ v`.
pub fn eig_sym(a: &DenseMatrix, k: usize, side: Side) -> Result<EigenResult> {
    check_square(a, "A")?;
    check_k(k, a.rows())?;
    if !a.is_symmetric(sym_tol(a)) {
        return Err(Error::Input("A is not symmetric".into()));
    }
    let n = a.rows();
    let (values, vectors) = sorted_eigen(symmetrized(a))?;
    let range = select(n, k, side);
    let mut cols = Vec::with_capacity(k);
    for c in range.clone() {
        let mut v: Vec<f64> = vectors.column(c).iter().copied().collect();
        fix_sign(&mut v);
        cols.push(v);
    }
    Ok(EigenResult {
        eigenvalues: values[range].to_vec(),
        eigenvectors: DenseMatrix::from_columns(n, &cols)?,
        ridge: 0.0,
    })
}

/// Symmetric-definite generalized problem `A v = λ B v`.
///
/// Reduces to standard form through the Cholesky factor of `B`. If `B` is
/// singular a ridge `1e-6 · trace(B)/n · I` is added once and reported.
/// Eigenvectors come back `B`-orthonormal.
pub fn eig_generalized_sym(
    a: &DenseMatrix,
    b: &DenseMatrix,
    k: usize,
    side: Side,
) -> Result<EigenResult> {
    check_square(a, "A")?;
    check_square(b, "B")?;
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "A is {}x{} but B is {}x{}",
            a.rows(),
            a.rows(),
            b.rows(),
            b.rows()
        )));
    }
    let n = a.rows();
    check_k(k, n)?;
    if !a.is_symmetric(sym_tol(a)) {
        return Err(Error::Input("A is not symmetric".into()));
    }
    if !b.is_symmetric(sym_tol(b)) {
        return Err(Error::Input("B is not symmetric".into()));
    }

    let bn = symmetrized(b);
    let (chol, ridge) = match Cholesky::new(bn.clone()) {
        Some(c) => (c, 0.0),
        None => {
            let ridge = 1e-6 * b.trace() / n as f64;
            if !(ridge > 0.0) {
                return Err(Error::Numeric(
                    "B is not positive-definite and its trace admits no ridge".into(),
                ));
            }
            let shifted = &bn + DMatrix::identity(n, n) * ridge;
            let c = Cholesky::new(shifted).ok_or_else(|| {
                Error::Numeric(format!(
                    "B is not positive-definite even after a ridge of {ridge:e}"
                ))
            })?;
            (c, ridge)
        }
    };
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let linv_a = l
        .solve_lower_triangular(&symmetrized(a))
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;

    let (values, vectors) = sorted_eigen(c)?;
    let lt = l.transpose();
    let range = select(n, k, side);
    let mut cols = Vec::with_capacity(k);
    for col in range.clone() {
        let w = vectors.column(col).into_owned();
        let v = lt
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        let mut v: Vec<f64> = v.iter().copied().collect();
        fix_sign(&mut v);
        cols.push(v);
    }
    Ok(EigenResult {
        eigenvalues: values[range].to_vec(),
        eigenvectors: DenseMatrix::from_columns(n, &cols)?,
        ridge,
    })
}

/// `x ↦ shift·x − D^{-1/2} L D^{-1/2} x`
struct ShiftedNormalized<'a> {
    laplacian: &'a SparseMatrix,
    inv_sqrt_deg: Vec<f64>,
    shift: f64,
}

impl LinearOperator for ShiftedNormalized<'_> {
    fn nrows(&self) -> usize {
        self.inv_sqrt_deg.len()
    }
    fn ncols(&self) -> usize {
        self.inv_sqrt_deg.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let scaled: Vec<f64> = x.iter().zip(&self.inv_sqrt_deg).map(|(a, b)| a * b).collect();
        self.laplacian.mul_vec_into(&scaled, y);
        for ((yi, &xi), &s) in y.iter_mut().zip(x).zip(&self.inv_sqrt_deg) {
            *yi = self.shift * xi - s * *yi;
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

/// The `k + 1` smallest pairs of `L v = λ D v` for a sparse symmetric `L` and
/// a positive diagonal `D`, ascending. Eigenvectors are `D`-orthonormal.
pub fn eig_sym_sparse_smallest(
    laplacian: &SparseMatrix,
    degrees: &SparseMatrix,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let n = laplacian.rows();
    if laplacian.cols() != n || degrees.rows() != n || degrees.cols() != n {
        return Err(Error::Shape(format!(
            "L is {}x{} and D is {}x{}",
            laplacian.rows(),
            laplacian.cols(),
            degrees.rows(),
            degrees.cols()
        )));
    }
    if degrees.triplets().any(|(i, j, _)| i != j) {
        return Err(Error::Input("D must be diagonal".into()));
    }
    let deg = degrees.diagonal();
    if let Some(v) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Input(format!(
            "vertex {v} has degree {} (isolated vertices are not allowed)",
            deg[v]
        )));
    }
    if !laplacian.is_symmetric() {
        return Err(Error::Input("L is not symmetric".into()));
    }
    check_k(k + 1, n)?;

    if n <= DENSE_LIMIT && !opts.force_iterative {
        return eig_generalized_sym(
            &laplacian.to_dense(),
            &degrees.to_dense(),
            k + 1,
            Side::Smallest,
        );
    }

    let inv_sqrt_deg: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    // Gershgorin bound on the normalized operator keeps the shifted one PSD.
    let shift = (0..n)
        .map(|i| {
            let (cols, vals) = laplacian.row(i);
            cols.iter()
                .zip(vals)
                .map(|(&j, v)| (v * inv_sqrt_deg[i] * inv_sqrt_deg[j]).abs())
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let op = ShiftedNormalized {
        laplacian,
        inv_sqrt_deg,
        shift,
    };
    let (mu, ws) = symmetric_largest(&op, k + 1, opts)?;
    let eigenvalues = mu.iter().map(|m| shift - m).collect();
    let cols: Vec<Vec<f64>> = ws
        .into_iter()
        .map(|w| {
            let mut v: Vec<f64> = w.iter().zip(&op.inv_sqrt_deg).map(|(a, b)| a * b).collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(EigenResult {
        eigenvalues,
        eigenvectors: DenseMatrix::from_columns(n, &cols)?,
        ridge: 0.0,
    })
}
