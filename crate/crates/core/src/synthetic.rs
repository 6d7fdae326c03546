//! Synthetic topic corpora with random word embeddings, for end-to-end checks.

use rand::Rng;

use crate::corpus::{Corpus, TokenizeMode};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSpec {
    pub topics: usize,
    pub docs_per_topic: usize,
    /// Size of each topic's private vocabulary.
    pub words_per_topic: usize,
    /// Size of a background vocabulary shared by all topics (may be 0).
    pub background_words: usize,
    /// Probability that a token is drawn from the background pool.
    pub background_rate: f64,
    pub min_length: usize,
    pub max_length: usize,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for TopicSpec {
    fn default() -> Self {
        Self {
            topics: 4,
            docs_per_topic: 100,
            words_per_topic: 50,
            background_words: 0,
            background_rate: 0.0,
            min_length: 5,
            max_length: 12,
            embedding_dim: 16,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct SyntheticData {
    pub texts: Vec<String>,
    pub labels: Vec<String>,
    pub corpus: Corpus,
    pub embeddings: EmbeddingTable,
}

pub fn topic_word(topic: usize, j: usize) -> String {
    format!("t{topic}w{j}")
}

pub fn background_word(j: usize) -> String {
    format!("bg{j}")
}

/// Documents cycle through topics (`label = index mod topics`); tokens are
/// uniform over the topic's words, or over the background pool with
/// probability `background_rate`. Every word gets an embedding uniform in
/// `[−1, 1]^dim`, independent of its topic.
pub fn topic_corpus(spec: &TopicSpec) -> Result<SyntheticData> {
    if spec.topics == 0 || spec.words_per_topic == 0 || spec.embedding_dim == 0 {
        return Err(Error::Param("topics, words_per_topic and embedding_dim must be positive".into()));
    }
    if spec.min_length == 0 || spec.min_length > spec.max_length {
        return Err(Error::Param("need 1 <= min_length <= max_length".into()));
    }
    if spec.background_rate > 0.0 && spec.background_words == 0 {
        return Err(Error::Param("background_rate > 0 needs background words".into()));
    }
    let mut rng = seed::rng(seed::derive(spec.seed, "synthetic/texts"));
    let n = spec.topics * spec.docs_per_topic;
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let topic = i % spec.topics;
        let len = rng.random_range(spec.min_length..=spec.max_length);
        let words: Vec<String> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < spec.background_rate {
                    background_word(rng.random_range(0..spec.background_words))
                } else {
                    topic_word(topic, rng.random_range(0..spec.words_per_topic))
                }
            })
            .collect();
        texts.push(words.join(" "));
        labels.push(format!("topic{topic}"));
    }
    let corpus = Corpus::from_texts(&texts, &labels, TokenizeMode::Verbatim)?;

    let mut rng = seed::rng(seed::derive(spec.seed, "synthetic/embeddings"));
    let mut embeddings = EmbeddingTable::new(spec.embedding_dim, seed::derive(spec.seed, "synthetic/oov"));
    let all_words = (0..spec.topics)
        .flat_map(|t| (0..spec.words_per_topic).map(move |j| topic_word(t, j)))
        .chain((0..spec.background_words).map(background_word));
    for w in all_words {
        let v = (0..spec.embedding_dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        embeddings.insert(&w, v)?;
    }
    Ok(SyntheticData {
        texts,
        labels,
        corpus,
        embeddings,
    })
}

impl SyntheticData {
    /// Embedding file in the word2vec text layout.
    pub fn embeddings_text(&self) -> String {
        let mut words: Vec<&str> = self.embeddings.words().collect();
        words.sort_unstable();
        let mut out = format!("{} {}\n", words.len(), self.embeddings.dim());
        for w in words {
            out.push_str(w);
            for v in self.embeddings.get(w).expect("listed word") {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}
