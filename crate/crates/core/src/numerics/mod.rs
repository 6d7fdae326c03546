//! Dense and sparse linear algebra for the reduction methods.
//!
//! Small problems (dimension ≤ [`DENSE_LIMIT`]) always go through dense
//! factorizations; larger ones use Krylov solvers with full
//! reorthogonalization. All routines are pure.

mod dense;
mod eigen;
pub mod lanczos;
mod sparse;
mod svd;

pub use dense::{axpy, dot, fix_sign, norm, DenseMatrix};
pub use eigen::{eig_generalized_sym, eig_sym, eig_sym_sparse_smallest, EigenResult, Side};
pub use lanczos::{LinearOperator, SolverOptions, Transposed};
pub use sparse::SparseMatrix;
pub use svd::{svd_operator, svd_truncated, svd_truncated_sparse, SvdResult};

/// Problems at or below this dimension are solved densely.
pub const DENSE_LIMIT: usize = 64;

/// Iteration cap handed to the dense QR-type solvers.
pub(crate) const DENSE_MAX_ITERS: usize = 10_000;
