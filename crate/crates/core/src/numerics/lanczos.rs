//! Krylov solvers with full reorthogonalization.
//!
//! Both solvers grow their basis geometrically until the requested Ritz
//! pairs satisfy the residual tolerance. Once the basis spans the whole space
//! the projected problem is exact, so the iteration cap defaults to the
//! operator dimension.

use nalgebra::DMatrix;
use rand::Rng;

use super::dense::{axpy, dot, norm, DenseMatrix};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::seed;

/// Matrix-free access to `A` and `Aᵀ`.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = Aᵀ x`
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.transpose_mul_vec(x));
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.transpose_mul_vec_into(x, y);
    }
}

/// Views an operator as its transpose.
pub struct Transposed<'a, T: LinearOperator + ?Sized>(pub &'a T);

impl<T: LinearOperator + ?Sized> LinearOperator for Transposed<'_, T> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_transpose(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Ritz residual bound relative to the dominant Ritz value.
    pub tol: f64,
    /// Largest basis size before giving up; `None` means the full dimension.
    pub max_basis: Option<usize>,
    pub seed: u64,
    /// Skip the dense path even for small problems.
    pub force_iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_basis: None,
            seed: 0x5eed_1a2c,
            force_iterative: false,
        }
    }
}

fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) {
    // Classical Gram-Schmidt applied twice.
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
}

fn random_orthonormal(basis: &[Vec<f64>], n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(basis, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Ok(v);
        }
    }
    Err(Error::Numeric(
        "could not extend Krylov basis with a fresh direction".into(),
    ))
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (b, c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

fn initial_target(k: usize, cap: usize) -> usize {
    (2 * k + 16).max(k + 24).min(cap)
}

/// Largest `k` eigenpairs of a symmetric operator, eigenvalues descending.
/// Vectors are unit length; no sign normalization is applied here.
pub fn symmetric_largest(
    op: &dyn LinearOperator,
    k: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.ncols();
    if op.nrows() != n {
        return Err(Error::Shape("symmetric solver needs a square operator".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Param(format!(
            "requested {k} eigenpairs of a dimension-{n} operator"
        )));
    }
    let cap = opts.max_basis.unwrap_or(n).min(n).max(k);
    let mut rng = seed::rng(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = random_orthonormal(&basis, n, &mut rng)?;
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    let mut target = initial_target(k, cap);

    loop {
        while basis.len() < target {
            op.apply(&q, &mut w);
            let a = dot(&q, &w);
            basis.push(std::mem::take(&mut q));
            alpha.push(a);
            scale = scale.max(a.abs());
            orthogonalize(&basis, &mut w);
            if basis.len() == n {
                beta.push(0.0);
                break;
            }
            let b = norm(&w);
            scale = scale.max(b);
            if b <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                // Invariant subspace found; restart in the complement.
                beta.push(0.0);
                q = random_orthonormal(&basis, n, &mut rng)?;
            } else {
                beta.push(b);
                q = w.iter().map(|x| x / b).collect();
            }
        }

        let m = basis.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::try_new(t, 1e-15, 10_000).ok_or_else(|| {
            Error::Numeric(format!("tridiagonal eigensolver failed at basis size {m}"))
        })?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = &order[..k];
        let last_beta = beta[m - 1];
        let ritz_scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let bound = opts.tol * ritz_scale.max(f64::MIN_POSITIVE);
        let converged = top
            .iter()
            .all(|&i| (last_beta * eig.eigenvectors[(m - 1, i)]).abs() <= bound);

        if converged || m == n {
            let values = top.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors = top
                .iter()
                .map(|&i| {
                    let mut v = combine(&basis, eig.eigenvectors.column(i).iter().copied(), n);
                    let nv = norm(&v);
                    v.iter_mut().for_each(|x| *x /= nv);
                    v
                })
                .collect();
            return Ok((values, vectors));
        }
        if m >= cap {
            return Err(Error::Numeric(format!(
                "Lanczos did not converge within the cap of {cap} basis vectors"
            )));
        }
        target = (2 * m).min(cap);
    }
}

/// Leading `k` singular triplets by Golub-Kahan-Lanczos bidiagonalization.
/// Returns `(sigma, left, right)` with sigma descending.
#[allow(clippy::type_complexity)]
pub fn bidiagonal_svd(
    op: &dyn LinearOperator,
    k: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if op.ncols() > op.nrows() {
        let (s, u, v) = bidiagonal_svd(&Transposed(op), k, opts)?;
        return Ok((s, v, u));
    }
    let (rows, cols) = (op.nrows(), op.ncols());
    if k == 0 || k > cols {
        return Err(Error::Param(format!(
            "requested {k} singular triplets of a {rows}x{cols} operator"
        )));
    }
    let cap = opts.max_basis.unwrap_or(cols).min(cols).max(k);
    let mut rng = seed::rng(opts.seed);
    let mut left: Vec<Vec<f64>> = Vec::new();
    let mut right: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v = random_orthonormal(&right, cols, &mut rng)?;
    let mut u = vec![0.0; rows];
    let mut scale = 0.0f64;
    let mut target = initial_target(k, cap);

    loop {
        while right.len() < target {
            op.apply(&v, &mut u);
            if let (Some(prev), Some(&b)) = (left.last(), beta.last()) {
                axpy(-b, prev, &mut u);
            }
            orthogonalize(&left, &mut u);
            right.push(std::mem::take(&mut v));
            let a = norm(&u);
            scale = scale.max(a);
            let u_next = if a <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                alpha.push(0.0);
                random_orthonormal(&left, rows, &mut rng)?
            } else {
                alpha.push(a);
                u.iter().map(|x| x / a).collect()
            };
            left.push(u_next);

            if right.len() == cols {
                beta.push(0.0);
                break;
            }
            let mut w = vec![0.0; cols];
            op.apply_transpose(left.last().unwrap(), &mut w);
            axpy(-*alpha.last().unwrap(), right.last().unwrap(), &mut w);
            orthogonalize(&right, &mut w);
            let b = norm(&w);
            scale = scale.max(b);
            if b <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                beta.push(0.0);
                v = random_orthonormal(&right, cols, &mut rng)?;
            } else {
                beta.push(b);
                v = w.iter().map(|x| x / b).collect();
            }
            u = vec![0.0; rows];
        }

        let m = right.len();
        let bmat = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else {
                0.0
            }
        });
        let svd = bmat.try_svd(true, true, 1e-15, 10_000).ok_or_else(|| {
            Error::Numeric(format!("bidiagonal SVD failed at basis size {m}"))
        })?;
        let p = svd.u.as_ref().expect("left vectors requested");
        let qt = svd.v_t.as_ref().expect("right vectors requested");
        let sigma_max = svd.singular_values.iter().fold(0.0f64, |s, v| s.max(*v));
        let last_beta = beta[m - 1];
        let bound = opts.tol * sigma_max.max(f64::MIN_POSITIVE);
        let converged = (0..k).all(|i| (last_beta * p[(m - 1, i)]).abs() <= bound);

        if converged || m == cols {
            let sigma = (0..k).map(|i| svd.singular_values[i]).collect();
            let us = (0..k)
                .map(|i| combine(&left, p.column(i).iter().copied(), rows))
                .collect();
            let vs = (0..k)
                .map(|i| combine(&right, qt.row(i).iter().copied(), cols))
                .collect();
            return Ok((sigma, us, vs));
        }
        if m >= cap {
            return Err(Error::Numeric(format!(
                "Lanczos bidiagonalization did not converge within the cap of {cap} basis vectors"
            )));
        }
        target = (2 * m).min(cap);
    }
}
