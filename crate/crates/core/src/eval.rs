//! Clustering accuracy under the best label mapping, and normalized mutual
//! information.

use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Minimum-cost perfect assignment on a square matrix: `assignment[row] = col`.
pub fn hungarian(cost: &DenseMatrix) -> Result<(Vec<usize>, f64)> {
    let n = cost.rows();
    if cost.cols() != n {
        return Err(Error::Shape(format!(
            "assignment needs a square cost matrix, got {}x{}",
            n,
            cost.cols()
        )));
    }
    if cost.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("cost matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // Shortest augmenting paths with row/column potentials; index 0 is a
    // virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok((assignment, total))
}

/// Joint counts, gold labels by rows and clusters by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(gold: &[usize], pred: &[usize]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::Input(format!(
                "{} gold labels but {} predictions",
                gold.len(),
                pred.len()
            )));
        }
        if gold.is_empty() {
            return Err(Error::Input("cannot evaluate zero documents".into()));
        }
        let rows = gold.iter().max().map_or(0, |m| m + 1);
        let cols = pred.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0usize; cols]; rows];
        for (&t, &c) in gold.iter().zip(pred) {
            counts[t][c] += 1;
        }
        Ok(Self {
            counts,
            n: gold.len(),
        })
    }

    pub fn num_labels(&self) -> usize {
        self.counts.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        (0..self.num_clusters())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    /// `mapping[cluster]` is the gold label it was matched to, if any.
    pub mapping: Vec<Option<usize>>,
}

/// Fraction of documents whose cluster maps to their gold label under the
/// count-maximizing one-to-one mapping.
pub fn accuracy(gold: &[usize], pred: &[usize]) -> Result<(f64, Vec<Option<usize>>)> {
    let table = ContingencyTable::new(gold, pred)?;
    let (labels, clusters) = (table.num_labels(), table.num_clusters());
    let size = labels.max(clusters);
    let cost = DenseMatrix::from_fn(size, size, |c, t| {
        if c < clusters && t < labels {
            -(table.counts[t][c] as f64)
        } else {
            0.0
        }
    });
    let (assignment, total) = hungarian(&cost)?;
    let mapping = assignment[..clusters]
        .iter()
        .map(|&t| (t < labels).then_some(t))
        .collect();
    Ok((-total / table.n as f64, mapping))
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `MI(T, C) / √(H(T) H(C))` with natural logarithms. Two constant
/// partitions score 1; one constant partition against a varying one scores 0.
pub fn nmi(gold: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(gold, pred)?;
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let (ht, hc) = (entropy(&rows, n), entropy(&cols, n));
    if ht == 0.0 || hc == 0.0 {
        return Ok(if ht == 0.0 && hc == 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (t, row) in table.counts.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                mi += joint * (count as f64 * n / (rows[t] as f64 * cols[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (ht * hc).sqrt()).clamp(0.0, 1.0))
}

pub fn evaluate(gold: &[usize], pred: &[usize]) -> Result<MetricReport> {
    let (acc, mapping) = accuracy(gold, pred)?;
    Ok(MetricReport {
        acc,
        nmi: nmi(gold, pred)?,
        mapping,
    })
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// `mean±std` in percent with two decimals, e.g. `77.09±3.99`.
pub fn format_mean_std(values: &[f64]) -> String {
    let (mean, std) = mean_std(values);
    format!("{:.2}±{:.2}", 100.0 * mean, 100.0 * std)
}

/// CSV `trial,acc,nmi` with one row per trial and a final summary row
/// `mean±std,<acc>,<nmi>`.
pub fn write_metrics_csv<W: Write>(reports: &[MetricReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "trial,acc,nmi")?;
    for (i, r) in reports.iter().enumerate() {
        writeln!(out, "{},{},{}", i + 1, r.acc, r.nmi)?;
    }
    let accs: Vec<f64> = reports.iter().map(|r| r.acc).collect();
    let nmis: Vec<f64> = reports.iter().map(|r| r.nmi).collect();
    writeln!(out, "mean±std,{},{}", format_mean_std(&accs), format_mean_std(&nmis))
}
