//! Plain-text artifact formats shared by the pipeline stages.
//!
//! * dense matrix: header `<rows> <cols>`, then one space-separated row per line;
//! * bit matrix: header `<q> <n>`, then one row of `0`/`1` characters per line;
//! * sparse matrix: header `<rows> <cols> <nnz>`, then `i j value` per entry;
//! * assignments: CSV `doc_id,cluster`.
//!
//! Floats are written in shortest round-trip form, so reading back is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dimred::BinaryCodes;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn join_row(out: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.write_all(b" ")?;
        }
        write!(out, "{v}")?;
    }
    out.write_all(b"\n")
}

pub fn write_matrix<W: Write>(m: &DenseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        join_row(&mut out, m.row(i))?;
    }
    Ok(())
}

fn parse_header(line: Option<std::io::Result<String>>, fields: usize) -> Result<Vec<usize>> {
    let line = line
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
    let dims: Vec<usize> = line
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad header '{line}'"),
        })?;
    if dims.len() != fields {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header needs {fields} integers, got '{line}'"),
        });
    }
    Ok(dims)
}

fn next_line(
    lines: &mut impl Iterator<Item = std::io::Result<String>>,
    lineno: usize,
) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: lineno,
            msg: "unexpected end of file".into(),
        })?
        .map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })
}

pub fn read_matrix<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(input).lines();
    let dims = parse_header(lines.next(), 2)?;
    let (rows, cols) = (dims[0], dims[1]);
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let lineno = i + 2;
        let line = next_line(&mut lines, lineno)?;
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number '{tok}'"),
            })?);
        }
        if values.len() - before != cols {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {cols} values, got {}", values.len() - before),
            });
        }
    }
    DenseMatrix::from_vec(rows, cols, values)
}

pub fn write_bits<W: Write>(b: &BinaryCodes, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", b.q(), b.n())?;
    for d in 0..b.q() {
        let row: String = b.row(d).map(|x| if x { '1' } else { '0' }).collect();
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn read_bits<R: Read>(input: R) -> Result<BinaryCodes> {
    let mut lines = BufReader::new(input).lines();
    let dims = parse_header(lines.next(), 2)?;
    let (q, n) = (dims[0], dims[1]);
    let mut rows = Vec::with_capacity(q);
    for d in 0..q {
        let lineno = d + 2;
        let line = next_line(&mut lines, lineno)?;
        let row = line
            .trim_end()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: lineno,
                    msg: format!("unexpected character '{other}' in bit row"),
                }),
            })
            .collect::<Result<Vec<bool>>>()?;
        if row.len() != n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {n} bits, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    if q == 0 {
        return Err(Error::Input("bit matrix has no rows".into()));
    }
    BinaryCodes::from_rows(&rows)
}

pub fn write_sparse<W: Write>(m: &SparseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{i} {j} {v}")?;
    }
    Ok(())
}

pub fn read_sparse<R: Read>(input: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(input).lines();
    let dims = parse_header(lines.next(), 3)?;
    let mut triplets = Vec::with_capacity(dims[2]);
    for k in 0..dims[2] {
        let lineno = k + 2;
        let line = next_line(&mut lines, lineno)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse {
            line: lineno,
            msg: format!("expected 'row col value', got '{line}'"),
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let i = parts[0].parse().map_err(|_| bad())?;
        let j = parts[1].parse().map_err(|_| bad())?;
        let v = parts[2].parse().map_err(|_| bad())?;
        triplets.push((i, j, v));
    }
    SparseMatrix::from_triplets(dims[0], dims[1], triplets)
}

pub fn write_assignments<W: Write>(labels: &[usize], mut out: W) -> std::io::Result<()> {
    writeln!(out, "doc_id,cluster")?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{i},{l}")?;
    }
    Ok(())
}

pub fn read_assignments<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?;
        if k == 0 {
            if line.trim() != "doc_id,cluster" {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header 'doc_id,cluster', got '{line}'"),
                });
            }
            continue;
        }
        let (id, cluster) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: k + 1,
            msg: "expected 'doc_id,cluster'".into(),
        })?;
        let bad = || Error::Parse {
            line: k + 1,
            msg: format!("bad assignment row '{line}'"),
        };
        if id.trim().parse::<usize>().map_err(|_| bad())? != out.len() {
            return Err(bad());
        }
        out.push(cluster.trim().parse().map_err(|_| bad())?);
    }
    Ok(out)
}
