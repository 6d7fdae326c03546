mod common;

use common::*;
use rand::Rng;
use stc_core::numerics::{
    eig_generalized_sym, eig_sym_sparse_smallest, svd_operator, svd_truncated,
    svd_truncated_sparse, DenseMatrix, Side, SolverOptions, SparseMatrix,
};

fn gram_minus_identity(m: &DenseMatrix) -> f64 {
    let g = m.transpose().matmul(m).unwrap();
    g.sub(&DenseMatrix::identity(g.rows())).unwrap().frobenius_norm()
}

#[test]
fn svd_reconstruction_random_6x4() {
    let mut r = rng(1);
    let a = random_matrix(&mut r, 6, 4);
    let s = svd_truncated(&a, 4).unwrap();
    assert!(a.sub(&s.reconstruct()).unwrap().frobenius_norm() <= 1e-10);
}

#[test]
fn svd_reconstruction_and_orthonormality_up_to_50() {
    let mut r = rng(2);
    for _ in 0..40 {
        let rows = r.random_range(1..=50);
        let cols = r.random_range(1..=50);
        let a = random_matrix(&mut r, rows, cols);
        let k = rows.min(cols);
        let s = svd_truncated(&a, k).unwrap();
        let err = a.sub(&s.reconstruct()).unwrap().frobenius_norm();
        assert!(err <= 1e-9 * a.frobenius_norm(), "{rows}x{cols}: {err}");
        assert!(gram_minus_identity(&s.left_vectors) <= 1e-8);
        assert!(gram_minus_identity(&s.right_vectors) <= 1e-8);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn iterative_svd_matches_dense() {
    let mut r = rng(3);
    for &(rows, cols) in &[(30, 20), (20, 35), (90, 70)] {
        let a = random_matrix(&mut r, rows, cols);
        let k = rows.min(cols);
        let opts = SolverOptions {
            force_iterative: true,
            ..Default::default()
        };
        let it = svd_operator(&a, k, &opts).unwrap();
        let err = a.sub(&it.reconstruct()).unwrap().frobenius_norm();
        assert!(err <= 1e-9 * a.frobenius_norm(), "{rows}x{cols}: {err}");
        assert!(gram_minus_identity(&it.left_vectors) <= 1e-8);
        assert!(gram_minus_identity(&it.right_vectors) <= 1e-8);
        // Oracle: singular values are square roots of the Gram eigenvalues.
        let g = if rows >= cols {
            a.transpose().matmul(&a).unwrap()
        } else {
            a.matmul(&a.transpose()).unwrap()
        };
        let (gv, _) = jacobi_eigen(&g);
        for (i, s) in it.singular_values.iter().enumerate() {
            let want = gv[gv.len() - 1 - i].max(0.0).sqrt();
            assert!((s - want).abs() <= 1e-9 * it.singular_values[0]);
        }
    }
}

#[test]
fn truncated_sparse_svd_leading_triplets() {
    let mut r = rng(4);
    let dense = DenseMatrix::from_fn(120, 80, |_, _| {
        if r.random::<f64>() < 0.1 {
            r.random_range(0.1..2.0)
        } else {
            0.0
        }
    });
    let sparse = SparseMatrix::from_dense(&dense);
    let s = svd_truncated_sparse(&sparse, 10).unwrap();
    let full = svd_truncated(&dense.clone(), 80).unwrap();
    for i in 0..10 {
        assert!((s.singular_values[i] - full.singular_values[i]).abs() <= 1e-9);
        let u = s.left_vectors.column(i);
        let av = dense.mul_vec(&s.right_vectors.column(i));
        let resid: f64 = av
            .iter()
            .zip(&u)
            .map(|(x, y)| (x - s.singular_values[i] * y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(resid <= 1e-9 * s.singular_values[0]);
    }
}

fn generalized_residual(a: &DenseMatrix, b: &DenseMatrix, lambda: f64, v: &[f64]) -> f64 {
    let av = a.mul_vec(v);
    let bv = b.mul_vec(v);
    av.iter()
        .zip(&bv)
        .map(|(x, y)| (x - lambda * y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn generalized_residual_and_b_orthonormality() {
    let mut r = rng(5);
    for _ in 0..30 {
        let n = r.random_range(2..=25);
        let a = random_symmetric(&mut r, n);
        let b = random_spd(&mut r, n);
        let k = r.random_range(1..=n);
        let side = if r.random::<bool>() {
            Side::Smallest
        } else {
            Side::Largest
        };
        let res = eig_generalized_sym(&a, &b, k, side).unwrap();
        for i in 0..k {
            let v = res.vector(i);
            assert!(generalized_residual(&a, &b, res.eigenvalues[i], &v) <= 1e-8 * a.frobenius_norm());
        }
        let vt_b_v = res
            .eigenvectors
            .transpose()
            .matmul(&b)
            .unwrap()
            .matmul(&res.eigenvectors)
            .unwrap();
        assert!(vt_b_v.sub(&DenseMatrix::identity(k)).unwrap().frobenius_norm() <= 1e-8);
        // Against the independent Jacobi oracle.
        let (oracle, _) = generalized_oracle(&a, &b);
        let want = match side {
            Side::Smallest => &oracle[..k],
            Side::Largest => &oracle[n - k..],
        };
        assert!(max_abs_diff(&res.eigenvalues, want) <= 1e-9 * a.frobenius_norm().max(1.0));
    }
}

#[test]
fn sparse_smallest_matches_dense_oracle_ten_vertices() {
    let mut r = rng(6);
    let adj = random_connected_adjacency(&mut r, 10, 12);
    let (l, d) = laplacian_and_degree(&adj);
    let opts = SolverOptions {
        force_iterative: true,
        ..Default::default()
    };
    let it = eig_sym_sparse_smallest(&l, &d, 3, &opts).unwrap();
    let (oracle, vecs) = generalized_oracle(&l.to_dense(), &d.to_dense());
    assert_eq!(it.len(), 4);
    assert!(max_abs_diff(&it.eigenvalues, &oracle[..4]) <= 1e-8);
    assert_eq!(oracle.iter().filter(|v| v.abs() <= 1e-9).count(), 1);
    for i in 0..4 {
        let mut want = vecs.column(i);
        stc_core::numerics::fix_sign(&mut want);
        assert!(max_abs_diff(&it.vector(i), &want) <= 1e-8);
    }
}

#[test]
fn isolated_vertex_is_rejected() {
    let adj = SparseMatrix::from_triplets(3, 3, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let (l, d) = laplacian_and_degree(&adj);
    let err = eig_sym_sparse_smallest(&l, &d, 1, &SolverOptions::default()).unwrap_err();
    assert!(err.to_string().contains("vertex 2"), "{err}");
}
