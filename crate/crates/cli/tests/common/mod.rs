#![allow(dead_code)]

use std::path::{Path, PathBuf};

use stc_cli::PipelineConfig;
use stc_core::synthetic::{topic_corpus, SyntheticData, TopicSpec};

/// The small network used for synthetic end-to-end runs.
pub const TINY_CNN: &str = "\
embedding_dim=16
layers=2
filter_widths=3,3
feature_maps=8,6
k_top=3
learning_rate=0.05
batch_size=10
dropout=0.5
epochs=10
";

pub struct Dataset {
    pub dir: tempfile::TempDir,
    pub data: SyntheticData,
}

impl Dataset {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn out(&self) -> PathBuf {
        self.path("out")
    }

    /// Writes `name` with the dataset paths, the tiny network and `extra`.
    pub fn write_config(&self, name: &str, extra: &str) -> PathBuf {
        let text = format!(
            "texts=texts.txt\nlabels=labels.txt\nembeddings=emb.txt\nout=out\n{TINY_CNN}{extra}"
        );
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    pub fn config(&self, extra: &str) -> PipelineConfig {
        PipelineConfig::from_file(&self.write_config("stc.cfg", extra)).unwrap()
    }
}

/// Texts, labels and word2vec-format embeddings of a synthetic topic corpus.
pub fn write_dataset(spec: &TopicSpec) -> Dataset {
    let dir = tempfile::tempdir().unwrap();
    let data = topic_corpus(spec).unwrap();
    write_files(dir.path(), &data);
    Dataset { dir, data }
}

pub fn write_files(dir: &Path, data: &SyntheticData) {
    std::fs::write(dir.join("texts.txt"), data.texts.join("\n") + "\n").unwrap();
    std::fs::write(dir.join("labels.txt"), data.labels.join("\n") + "\n").unwrap();
    std::fs::write(dir.join("emb.txt"), data.embeddings_text()).unwrap();
}

/// Four disjoint topics of 100 documents with 16-d random embeddings.
pub fn four_topics(seed: u64) -> TopicSpec {
    TopicSpec {
        seed,
        ..TopicSpec::default()
    }
}
