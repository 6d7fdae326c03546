//! Fixtures shared by the benchmarks.

use stc_core::cnn::{CnnConfig, CnnModel};
use stc_core::corpus::term_matrix;
use stc_core::dimred::build_graph;
use stc_core::synthetic::{topic_corpus, SyntheticData, TopicSpec};
use stc_core::{DenseMatrix, SimilarityGraph, TermMatrix, Weighting};

pub fn corpus(topics: usize, docs_per_topic: usize) -> SyntheticData {
    topic_corpus(&TopicSpec {
        topics,
        docs_per_topic,
        background_words: 20,
        background_rate: 0.2,
        embedding_dim: 48,
        seed: 7,
        ..TopicSpec::default()
    })
    .expect("valid topic parameters")
}

/// Network with the default architecture on top of `data`'s embeddings.
pub fn model(data: &SyntheticData, q: usize) -> CnnModel {
    let config = CnnConfig {
        q,
        sentence_width: data.corpus.stats().max_length,
        ..CnnConfig::default()
    };
    CnnModel::new(config, data.embeddings.embedding_matrix(&data.corpus.vocabulary))
        .expect("valid config")
}

pub fn tfidf(data: &SyntheticData) -> TermMatrix {
    term_matrix(&data.corpus, Weighting::TfIdf).normalized_columns()
}

pub fn graph(data: &SyntheticData) -> SimilarityGraph {
    build_graph(&tfidf(data), 15, 1.0).expect("connected corpus")
}

/// Deterministic pseudo-random cost matrix.
pub fn cost_matrix(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| ((i * 7919 + j * 104_729 + i * j * 31) % 1009) as f64)
}
