//! Parameter-free building blocks of a convolutional layer.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Full one-dimensional convolution: `out[j] = Σ_t f[t] · row[j − t]`.
pub fn wide_conv_row(row: &[f64], filter: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; row.len() + filter.len() - 1];
    wide_conv_row_into(row, filter, &mut out);
    out
}

/// Accumulates the wide convolution of `row` with `filter` into `out`.
#[inline]
pub fn wide_conv_row_into(row: &[f64], filter: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), row.len() + filter.len() - 1);
    for (u, &x) in row.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (t, &f) in filter.iter().enumerate() {
            out[u + t] += f * x;
        }
    }
}

/// Adjoint of [`wide_conv_row_into`]: accumulates `∂/∂row` and `∂/∂filter`.
#[inline]
pub fn wide_conv_row_backward(
    row: &[f64],
    filter: &[f64],
    grad_out: &[f64],
    grad_row: &mut [f64],
    grad_filter: &mut [f64],
) {
    for (u, &x) in row.iter().enumerate() {
        let window = &grad_out[u..u + filter.len()];
        let mut acc = 0.0;
        for (t, (&f, &g)) in filter.iter().zip(window).enumerate() {
            acc += f * g;
            grad_filter[t] += g * x;
        }
        grad_row[u] += acc;
    }
}

/// Sums rows `2i` and `2i + 1`.
pub fn fold(map: &DenseMatrix) -> Result<DenseMatrix> {
    if !map.rows().is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "folding needs an even row count, got {}",
            map.rows()
        )));
    }
    let mut out = DenseMatrix::zeros(map.rows() / 2, map.cols());
    for i in 0..out.rows() {
        let (a, b) = (map.row(2 * i), map.row(2 * i + 1));
        for ((o, x), y) in out.row_mut(i).iter_mut().zip(a).zip(b) {
            *o = x + y;
        }
    }
    Ok(out)
}

/// Positions of the `k` largest entries in increasing order; ties keep the
/// leftmost.
pub fn k_max_indices(row: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Keeps the `k` highest values of each row in their original order.
pub fn k_max_pool(map: &DenseMatrix, k: usize) -> Result<(DenseMatrix, Vec<Vec<usize>>)> {
    if k > map.cols() {
        return Err(Error::Shape(format!(
            "k-max pooling with k = {k} on a map of width {}",
            map.cols()
        )));
    }
    let mut out = DenseMatrix::zeros(map.rows(), k);
    let mut selections = Vec::with_capacity(map.rows());
    for i in 0..map.rows() {
        let row = map.row(i);
        let sel = k_max_indices(row, k);
        for (o, &j) in out.row_mut(i).iter_mut().zip(&sel) {
            *o = row[j];
        }
        selections.push(sel);
    }
    Ok((out, selections))
}
