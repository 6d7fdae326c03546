//! Labeled short-text datasets, vocabulary and term matrices.
//!
//! Dataset files hold one document per line (UTF-8, LF endings) with a
//! companion file holding one label token per line. Label tokens are mapped
//! to dense ordinals in order of first appearance; vocabulary indices are
//! likewise assigned in first-occurrence order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenizeMode {
    /// Whitespace split only; symbols and case are kept.
    Verbatim,
    /// Lowercase and drop everything but letters, digits and whitespace.
    LowercaseStrip,
}

impl std::str::FromStr for TokenizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(Self::Verbatim),
            "lowercase_strip" | "lowercase-strip" => Ok(Self::LowercaseStrip),
            other => Err(Error::Param(format!("unknown tokenizer mode '{other}'"))),
        }
    }
}

pub fn tokenize(raw: &str, mode: TokenizeMode) -> Vec<String> {
    match mode {
        TokenizeMode::Verbatim => raw.split_whitespace().map(str::to_owned).collect(),
        TokenizeMode::LowercaseStrip => {
            let cleaned: String = raw
                .chars()
                .filter(|c| c.is_alphanumeric() || c.is_whitespace())
                .flat_map(char::to_lowercase)
                .collect();
            cleaned.split_whitespace().map(str::to_owned).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: usize,
    pub tokens: Vec<String>,
    /// Vocabulary index of each token.
    pub token_ids: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn intern(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), i);
        i
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_documents: usize,
    pub num_classes: usize,
    pub mean_length: f64,
    pub max_length: usize,
    pub vocab_size: usize,
    pub num_tokens: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    /// Original label tokens, indexed by dense label.
    pub label_names: Vec<String>,
}

impl Corpus {
    pub fn from_texts<S: AsRef<str>, L: AsRef<str>>(
        texts: &[S],
        labels: &[L],
        mode: TokenizeMode,
    ) -> Result<Self> {
        if texts.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} texts but {} labels",
                texts.len(),
                labels.len()
            )));
        }
        let mut vocabulary = Vocabulary::default();
        let mut label_names: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, usize> = HashMap::new();
        let mut documents = Vec::with_capacity(texts.len());
        for (id, (text, label)) in texts.iter().zip(labels).enumerate() {
            let label = label.as_ref().trim();
            if label.is_empty() {
                return Err(Error::Parse {
                    line: id + 1,
                    msg: "empty label".into(),
                });
            }
            let label = *label_index.entry(label.to_owned()).or_insert_with(|| {
                label_names.push(label.to_owned());
                label_names.len() - 1
            });
            let tokens = tokenize(text.as_ref(), mode);
            let token_ids = tokens.iter().map(|t| vocabulary.intern(t)).collect();
            documents.push(Document {
                id,
                tokens,
                token_ids,
                label,
            });
        }
        Ok(Self {
            documents,
            vocabulary,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn stats(&self) -> CorpusStats {
        let num_tokens: usize = self.documents.iter().map(|d| d.tokens.len()).sum();
        CorpusStats {
            num_documents: self.len(),
            num_classes: self.num_classes(),
            mean_length: if self.is_empty() {
                0.0
            } else {
                num_tokens as f64 / self.len() as f64
            },
            max_length: self.documents.iter().map(|d| d.tokens.len()).max().unwrap_or(0),
            vocab_size: self.vocabulary.len(),
            num_tokens,
        }
    }

    /// Sub-corpus sharing this vocabulary; document ids are renumbered.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let documents = indices
            .iter()
            .enumerate()
            .map(|(id, &i)| Document {
                id,
                ..self.documents[i].clone()
            })
            .collect();
        Corpus {
            documents,
            vocabulary: self.vocabulary.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn load_dataset(text_path: &Path, label_path: &Path, mode: TokenizeMode) -> Result<Corpus> {
    let texts = read_lines(text_path)?;
    let labels = read_lines(label_path)?;
    if texts.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} has {} lines but {} has {}",
            text_path.display(),
            texts.len(),
            label_path.display(),
            labels.len()
        )));
    }
    Corpus::from_texts(&texts, &labels, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Tf,
    TfIdf,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tf" => Ok(Self::Tf),
            "tfidf" | "tf-idf" | "tf_idf" => Ok(Self::TfIdf),
            other => Err(Error::Param(format!("unknown weighting '{other}'"))),
        }
    }
}

/// Terms × documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TermMatrix {
    pub matrix: SparseMatrix,
    pub weighting: Weighting,
    pub normalized: bool,
}

impl TermMatrix {
    pub fn num_terms(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_documents(&self) -> usize {
        self.matrix.cols()
    }

    /// Copy with every nonzero document column scaled to unit length.
    pub fn normalized_columns(&self) -> TermMatrix {
        let mut norms = vec![0.0; self.num_documents()];
        for (_, j, v) in self.matrix.triplets() {
            norms[j] += v * v;
        }
        norms.iter_mut().for_each(|n| *n = n.sqrt());
        let triplets = self
            .matrix
            .triplets()
            .map(|(i, j, v)| (i, j, v / norms[j]))
            .collect();
        TermMatrix {
            matrix: SparseMatrix::from_triplets(self.matrix.rows(), self.matrix.cols(), triplets)
                .expect("same sparsity pattern"),
            weighting: self.weighting,
            normalized: true,
        }
    }
}

/// Document frequency of every vocabulary word.
pub fn document_frequencies(corpus: &Corpus) -> Vec<usize> {
    let mut df = vec![0usize; corpus.vocabulary.len()];
    let mut seen = vec![usize::MAX; corpus.vocabulary.len()];
    for (j, doc) in corpus.documents.iter().enumerate() {
        for &t in &doc.token_ids {
            if seen[t] != j {
                seen[t] = j;
                df[t] += 1;
            }
        }
    }
    df
}

/// Per-word inverse document frequency `ln(n / df)`.
pub fn inverse_document_frequencies(corpus: &Corpus) -> Vec<f64> {
    let n = corpus.len() as f64;
    document_frequencies(corpus)
        .into_iter()
        .map(|df| if df == 0 { 0.0 } else { (n / df as f64).ln() })
        .collect()
}

/// Per-document `(word id, raw count)` in first-occurrence order.
pub fn term_counts(doc: &Document) -> Vec<(usize, usize)> {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &t in &doc.token_ids {
        match counts.iter_mut().find(|(w, _)| *w == t) {
            Some((_, c)) => *c += 1,
            None => counts.push((t, 1)),
        }
    }
    counts
}

pub fn term_matrix(corpus: &Corpus, weighting: Weighting) -> TermMatrix {
    let idf = match weighting {
        Weighting::Tf => None,
        Weighting::TfIdf => Some(inverse_document_frequencies(corpus)),
    };
    let mut triplets = Vec::new();
    for (j, doc) in corpus.documents.iter().enumerate() {
        for (w, count) in term_counts(doc) {
            let tf = count as f64;
            let value = idf.as_ref().map_or(tf, |idf| tf * idf[w]);
            triplets.push((w, j, value));
        }
    }
    TermMatrix {
        matrix: SparseMatrix::from_triplets(corpus.vocabulary.len(), corpus.len(), triplets)
            .expect("indices come from the vocabulary"),
        weighting,
        normalized: false,
    }
}

/// Random `(train, dev)` split with `floor(n · fraction)` dev documents.
/// Both index lists are sorted.
pub fn dev_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Param(format!(
            "dev fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let dev_size = (n as f64 * fraction).floor() as usize;
    let mut dev = idx[..dev_size].to_vec();
    let mut train = idx[dev_size..].to_vec();
    dev.sort_unstable();
    train.sort_unstable();
    Ok((train, dev))
}
