//! Self-taught convolutional short-text clustering.
//!
//! The pipeline embeds raw texts into compact binary codes with an
//! unsupervised reduction ([`dimred`]), trains a dynamic convolutional network
//! on word-embedding sentence matrices to fit those codes ([`cnn`]), then
//! clusters the network's deep features with K-means ([`cluster`]) and scores
//! the result against gold labels ([`eval`]).
//!
//! ```text
//!  texts ──► corpus ──► term matrix X ──► dimred ──► Y ──► median bits B
//!              │                                              │
//!              └──► embeddings ──► sentence matrices ──► cnn ◄┘
//!                                                         │
//!                                     features h ──► K-means ──► ACC / NMI
//! ```

pub mod cluster;
pub mod cnn;
pub mod corpus;
pub mod dimred;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod io;
pub mod numerics;
pub mod seed;
pub mod synthetic;

pub use cluster::{ClusterAssignment, KMeansConfig, Seeding};
pub use cnn::{CnnConfig, CnnModel};
pub use corpus::{Corpus, Document, TermMatrix, TokenizeMode, Weighting};
pub use dimred::{BinaryCodes, Method, ReducedCodes, SimilarityGraph};
pub use embeddings::{EmbeddingTable, SentenceMatrix};
pub use error::{Error, Result};
pub use eval::MetricReport;
pub use numerics::{DenseMatrix, EigenResult, SparseMatrix, SvdResult};
