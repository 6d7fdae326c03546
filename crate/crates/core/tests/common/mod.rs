#![allow(dead_code)]

pub mod gradcheck;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stc_core::{DenseMatrix, SparseMatrix, TermMatrix, Weighting};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let g = random_matrix(rng, n, n);
    let mut s = g.transpose().matmul(&g).unwrap();
    for i in 0..n {
        s[(i, i)] += n as f64 * 0.1 + 0.5;
    }
    s
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let g = random_matrix(rng, n, n);
    DenseMatrix::from_fn(n, n, |i, j| g[(i, j)] + g[(j, i)])
}

/// Random connected weighted graph: a random spanning tree plus extra edges.
pub fn random_connected_adjacency(rng: &mut impl Rng, n: usize, extra: usize) -> SparseMatrix {
    let mut triplets = Vec::new();
    let push = |i: usize, j: usize, w: f64, t: &mut Vec<(usize, usize, f64)>| {
        t.push((i, j, w));
        t.push((j, i, w));
    };
    let mut seen = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        push(u, v, rng.random_range(0.05..1.0), &mut triplets);
        seen.insert((u.min(v), u.max(v)));
    }
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && seen.insert((i.min(j), i.max(j))) {
            push(i, j, rng.random_range(0.05..1.0), &mut triplets);
        }
    }
    SparseMatrix::from_triplets(n, n, triplets).unwrap()
}

pub fn laplacian_and_degree(a: &SparseMatrix) -> (SparseMatrix, SparseMatrix) {
    let deg = a.row_sums();
    let mut t: Vec<(usize, usize, f64)> = a.triplets().map(|(i, j, v)| (i, j, -v)).collect();
    t.extend(deg.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let n = a.rows();
    (
        SparseMatrix::from_triplets(n, n, t).unwrap(),
        SparseMatrix::from_diagonal(&deg).unwrap(),
    )
}

/// Cyclic Jacobi eigensolver: eigenvalues ascending, eigenvectors as columns.
pub fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off < 1e-30 * m.frobenius_norm().powi(2).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Dense oracle for `A v = λ B v` via `B^{-1/2}` from the Jacobi decomposition.
pub fn generalized_oracle(a: &DenseMatrix, b: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    let (bv, bq) = jacobi_eigen(b);
    let inv_sqrt = DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| bq[(i, k)] * bq[(j, k)] / bv[k].sqrt()).sum()
    });
    let c = inv_sqrt.matmul(a).unwrap().matmul(&inv_sqrt).unwrap();
    let c = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let (vals, w) = jacobi_eigen(&c);
    (vals, inv_sqrt.matmul(&w).unwrap())
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random nonnegative term matrix with every document and term nonempty.
pub fn random_term_matrix(rng: &mut impl Rng, d: usize, n: usize, density: f64) -> TermMatrix {
    let mut t = Vec::new();
    for j in 0..n {
        t.push((rng.random_range(0..d), j, rng.random_range(0.5..2.0)));
        for i in 0..d {
            if rng.random::<f64>() < density {
                t.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    for i in 0..d {
        t.push((i, rng.random_range(0..n), rng.random_range(0.1..1.0)));
    }
    TermMatrix {
        matrix: SparseMatrix::from_triplets(d, n, t).unwrap(),
        weighting: Weighting::TfIdf,
        normalized: false,
    }
}
