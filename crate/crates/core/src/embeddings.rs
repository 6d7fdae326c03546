//! Pretrained word vectors and sentence matrices.
//!
//! Vectors are read from the word2vec text format: a `<count> <dim>` header
//! followed by one `<word> <v1> … <v_dim>` line per word. Words missing from
//! the file get a deterministic vector drawn uniformly from
//! `[-OOV_RANGE, OOV_RANGE]`, keyed by `(oov_seed, word)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::RwLock;

use rand::Rng;

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::seed;

pub const OOV_RANGE: f64 = 0.25;

#[derive(Debug)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    oov_seed: u64,
    duplicates: usize,
    oov_cache: RwLock<HashMap<String, Vec<f64>>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, oov_seed: u64) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
            oov_seed,
            duplicates: 0,
            oov_cache: RwLock::new(HashMap::new()),
        }
    }

    /// Inserts or replaces a vector. Returns true if the word was already present.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Input(format!(
                "vector for '{word}' has dimension {}, table expects {}",
                vector.len(),
                self.dim
            )));
        }
        Ok(self.vectors.insert(word.to_owned(), vector).is_some())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of repeated word lines seen while loading (last one wins).
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn oov_seed(&self) -> u64 {
        self.oov_seed
    }

    pub fn set_oov_seed(&mut self, seed: u64) {
        self.oov_seed = seed;
        self.oov_cache.write().expect("cache lock").clear();
    }

    /// Stored words in arbitrary order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Stored vector, or the cached deterministic random vector for an
    /// unknown word.
    pub fn lookup_or_init(&self, word: &str) -> Vec<f64> {
        if let Some(v) = self.vectors.get(word) {
            return v.clone();
        }
        if let Some(v) = self.oov_cache.read().expect("cache lock").get(word) {
            return v.clone();
        }
        let v = oov_vector(self.oov_seed, word, self.dim);
        self.oov_cache
            .write()
            .expect("cache lock")
            .entry(word.to_owned())
            .or_insert(v)
            .clone()
    }

    pub fn coverage(&self, corpus: &Corpus) -> Coverage {
        let mut tokens_covered = 0;
        let mut tokens_total = 0;
        for doc in &corpus.documents {
            tokens_total += doc.tokens.len();
            tokens_covered += doc.tokens.iter().filter(|t| self.contains(t)).count();
        }
        Coverage {
            vocab_covered: corpus
                .vocabulary
                .words()
                .iter()
                .filter(|w| self.contains(w))
                .count(),
            vocab_total: corpus.vocabulary.len(),
            tokens_covered,
            tokens_total,
        }
    }

    /// `|V| × dim` matrix, one row per vocabulary word, unknown words
    /// initialized randomly. This is the trainable table handed to the CNN.
    pub fn embedding_matrix(&self, vocab: &Vocabulary) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(vocab.len(), self.dim);
        for (i, w) in vocab.words().iter().enumerate() {
            m.row_mut(i).copy_from_slice(&self.lookup_or_init(w));
        }
        m
    }
}

fn oov_vector(oov_seed: u64, word: &str, dim: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(oov_seed, word));
    (0..dim)
        .map(|_| rng.random_range(-OOV_RANGE..=OOV_RANGE))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub vocab_covered: usize,
    pub vocab_total: usize,
    pub tokens_covered: usize,
    pub tokens_total: usize,
}

impl Coverage {
    pub fn vocab_fraction(&self) -> f64 {
        ratio(self.vocab_covered, self.vocab_total)
    }

    pub fn token_fraction(&self) -> f64 {
        ratio(self.tokens_covered, self.tokens_total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn load_embeddings(path: &Path, expected_dim: usize) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), expected_dim, 0).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_embeddings(
    reader: impl BufRead,
    expected_dim: usize,
    oov_seed: u64,
) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io("<embeddings>", e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing '<count> <dim>' header".into(),
            })
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("header field '{s}' is not a count"),
        })
    };
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected '<count> <dim>' header, got '{header}'"),
        });
    }
    let declared = parse_usize(fields[0])?;
    let dim = parse_usize(fields[1])?;
    if dim != expected_dim {
        return Err(Error::Input(format!(
            "embedding file has dimension {dim}, expected {expected_dim}"
        )));
    }

    let mut table = EmbeddingTable::new(dim, oov_seed);
    table.vectors.reserve(declared);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<embeddings>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("nonblank line");
        let values: Vec<f64> = parts
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("'{s}' is not a number"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Input(format!(
                "line {lineno}: vector for '{word}' has dimension {}, expected {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: lineno,
                msg: "non-finite component".into(),
            });
        }
        if table.insert(word, values)? {
            table.duplicates += 1;
        }
    }
    if table.duplicates > 0 {
        log::warn!("{} duplicate embedding lines; last occurrence kept", table.duplicates);
    }
    Ok(table)
}

/// `d_w × s` sentence matrix; columns past the true length are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    pub matrix: DenseMatrix,
    pub true_length: usize,
}

pub fn sentence_matrix(table: &EmbeddingTable, tokens: &[String], width: usize) -> SentenceMatrix {
    let used = tokens.len().min(width);
    let mut matrix = DenseMatrix::zeros(table.dim(), width);
    for (j, tok) in tokens[..used].iter().enumerate() {
        matrix.set_column(j, &table.lookup_or_init(tok));
    }
    SentenceMatrix {
        matrix,
        true_length: used,
    }
}

/// Same layout, reading rows of a `|V| × d_w` embedding matrix by token id.
pub fn sentence_matrix_from_ids(
    embeddings: &DenseMatrix,
    token_ids: &[usize],
    width: usize,
) -> SentenceMatrix {
    let used = token_ids.len().min(width);
    let mut matrix = DenseMatrix::zeros(embeddings.cols(), width);
    for (j, &id) in token_ids[..used].iter().enumerate() {
        matrix.set_column(j, embeddings.row(id));
    }
    SentenceMatrix {
        matrix,
        true_length: used,
    }
}
