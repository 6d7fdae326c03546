//! The pipeline stages. Each stage reads the dataset files and upstream
//! artifacts from the output directory, writes its own artifacts there, and
//! records them in the manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use stc_core::cluster::{kmeans_restarts, normalize_columns, Points};
use stc_core::cnn::{checkpoint, train, write_loss_csv, TrainingSet};
use stc_core::corpus::{dev_split, load_dataset, term_matrix};
use stc_core::dimred::{binarize_median, build_graph, reduce_ae, reduce_le, reduce_lpi, reduce_lsa};
use stc_core::embeddings::load_embeddings;
use stc_core::eval::{evaluate, format_mean_std, write_metrics_csv};
use stc_core::{io, seed};
use stc_core::{CnnConfig, CnnModel, Corpus, EmbeddingTable, KMeansConfig, Method, Weighting};

use crate::config::{BaselineFeatures, PipelineConfig};
use crate::error::{CliError, Result};
use crate::manifest::{fingerprint, hash_file, Manifest, StageRecord};

pub const CORPUS_SUMMARY: &str = "corpus_summary.txt";
pub const COVERAGE: &str = "coverage.txt";
pub const TF_MATRIX: &str = "tf.txt";
pub const TFIDF_MATRIX: &str = "tfidf.txt";
pub const CODES: &str = "codes.txt";
pub const BITS: &str = "bits.txt";
pub const THRESHOLDS: &str = "thresholds.txt";
pub const MAPPING: &str = "mapping.txt";
pub const MODEL: &str = "model.bin";
pub const LOSS: &str = "loss.csv";
pub const FEATURES: &str = "features.txt";
pub const METRICS: &str = "metrics.csv";

/// Seed labels fanned out from the master seed.
pub const SEED_OOV: &str = "embeddings/oov";
pub const SEED_DEV: &str = "train/dev";
pub const SEED_CNN: &str = "train/cnn";
pub const SEED_TRIAL: &str = "cluster/trial";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prepare,
    Reduce,
    Train,
    ClusterEval,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::Reduce => "reduce",
            Stage::Train => "train",
            Stage::ClusterEval => "cluster-eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    /// Manifest key, e.g. `cluster-eval` or `baseline-tfidf`.
    pub stage: String,
    pub skipped: bool,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

/// Shared state of one invocation.
pub struct Context {
    pub config: PipelineConfig,
    pub manifest: Manifest,
}

impl Context {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        std::fs::create_dir_all(&config.out).map_err(|e| stc_core::Error::io(&config.out, e))?;
        let mut manifest = Manifest::load_or_default(&config.out)?;
        manifest.master_seed = config.seed;
        manifest.config = config
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        manifest.seeds = [SEED_OOV, SEED_DEV, SEED_CNN]
            .iter()
            .map(|l| (l.to_string(), seed::derive(config.seed, l)))
            .chain((0..config.trials).map(|t| {
                (
                    format!("{SEED_TRIAL}/{t}"),
                    seed::derive_indexed(config.seed, SEED_TRIAL, t as u64),
                )
            }))
            .collect();
        Ok(Self { config, manifest })
    }

    fn out(&self) -> &Path {
        &self.config.out
    }

    fn out_path(&self, file: &str) -> PathBuf {
        self.config.out.join(file)
    }

    fn corpus(&self) -> Result<Corpus> {
        Ok(load_dataset(
            self.config.texts_path()?,
            self.config.labels_path()?,
            self.config.tokenize,
        )?)
    }

    /// Pre-trained vectors if configured, else an empty table; unknown words
    /// get seeded random vectors either way.
    fn embeddings(&self) -> Result<EmbeddingTable> {
        let d_w = self.config.cnn.d_w;
        let mut table = match &self.config.embeddings {
            Some(p) => load_embeddings(p, d_w)?,
            None => {
                log::warn!("no embeddings configured; every word gets a random vector");
                EmbeddingTable::new(d_w, 0)
            }
        };
        table.set_oov_seed(seed::derive(self.config.seed, SEED_OOV));
        Ok(table)
    }

    /// Dataset file hashes, plus embeddings when `with_embeddings`.
    fn dataset_inputs(&self, with_embeddings: bool) -> Result<BTreeMap<String, String>> {
        let mut inputs = BTreeMap::new();
        inputs.insert("texts".into(), hash_file(self.config.texts_path()?)?);
        inputs.insert("labels".into(), hash_file(self.config.labels_path()?)?);
        if with_embeddings {
            if let Some(p) = &self.config.embeddings {
                inputs.insert("embeddings".into(), hash_file(p)?);
            }
        }
        Ok(inputs)
    }

    fn artifact_input(
        &self,
        inputs: &mut BTreeMap<String, String>,
        stage: &'static str,
        file: &str,
        producer: &'static str,
    ) -> Result<()> {
        let path = self.out_path(file);
        if !path.is_file() {
            return Err(CliError::MissingArtifact {
                stage,
                path: path.display().to_string(),
                producer,
            });
        }
        inputs.insert(file.to_string(), hash_file(&path)?);
        Ok(())
    }

    /// Runs `body` unless the stage is current, then records its outputs.
    fn run_stage<F>(
        &mut self,
        name: &str,
        params: Vec<(String, String)>,
        inputs: BTreeMap<String, String>,
        body: F,
    ) -> Result<bool>
    where
        F: FnOnce(&Self) -> Result<(Vec<String>, BTreeMap<String, serde_json::Value>)>,
    {
        let params: BTreeMap<String, String> = params.into_iter().collect();
        let fp = fingerprint(name, &params, &inputs);
        if self.manifest.is_current(self.out(), name, &fp) {
            log::info!("{name}: inputs unchanged, skipping");
            return Ok(true);
        }
        log::info!("{name}: running");
        let (files, info) = body(self)?;
        let mut outputs = BTreeMap::new();
        for f in files {
            let hash = hash_file(&self.out_path(&f))?;
            outputs.insert(f, hash);
        }
        self.manifest.stages.insert(
            name.to_string(),
            StageRecord {
                fingerprint: fp,
                params,
                inputs,
                outputs,
                info,
            },
        );
        self.manifest.save(self.out())?;
        Ok(false)
    }

    fn write(&self, file: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        io::write_file(&self.out_path(file), |w| f(w))?;
        Ok(())
    }

    fn read_text(&self, file: &str) -> Result<String> {
        let path = self.out_path(file);
        std::fs::read_to_string(&path).map_err(|e| stc_core::Error::io(&path, e).into())
    }

    /// Persists the manifest's config and seeds even if every stage skipped.
    pub fn finish(&self) -> Result<()> {
        self.manifest.save(self.out())
    }
}

fn dataset_name(cfg: &PipelineConfig) -> String {
    if let Some(d) = cfg.dataset {
        return d.as_str().to_string();
    }
    cfg.texts
        .as_deref()
        .and_then(Path::file_stem)
        .map_or("dataset".into(), |s| s.to_string_lossy().into_owned())
}

pub fn prepare(ctx: &mut Context) -> Result<StageReport> {
    let params = ctx.config.select(&["tokenize", "embedding_dim", "dataset"]);
    let inputs = ctx.dataset_inputs(true)?;
    let skipped = ctx.run_stage("prepare", params, inputs, |ctx| {
        let corpus = ctx.corpus()?;
        let stats = corpus.stats();
        let name = dataset_name(&ctx.config);
        ctx.write(CORPUS_SUMMARY, |w| {
            writeln!(w, "dataset\tC\tnum\tlen_mean\tlen_max\tvocab")?;
            writeln!(
                w,
                "{name}\t{}\t{}\t{:.2}\t{}\t{}",
                stats.num_classes, stats.num_documents, stats.mean_length, stats.max_length, stats.vocab_size
            )
        })?;
        let mut files = vec![CORPUS_SUMMARY.to_string()];
        if ctx.config.embeddings.is_some() {
            let cov = ctx.embeddings()?.coverage(&corpus);
            ctx.write(COVERAGE, |w| {
                writeln!(w, "dataset\tvocab_covered\tvocab_total\tvocab_pct\ttokens_covered\ttokens_total\ttokens_pct")?;
                writeln!(
                    w,
                    "{name}\t{}\t{}\t{:.2}\t{}\t{}\t{:.2}",
                    cov.vocab_covered,
                    cov.vocab_total,
                    100.0 * cov.vocab_fraction(),
                    cov.tokens_covered,
                    cov.tokens_total,
                    100.0 * cov.token_fraction()
                )
            })?;
            files.push(COVERAGE.to_string());
        }
        for (file, weighting) in [(TF_MATRIX, Weighting::Tf), (TFIDF_MATRIX, Weighting::TfIdf)] {
            let tm = term_matrix(&corpus, weighting);
            ctx.write(file, |w| io::write_sparse(&tm.matrix, w))?;
            files.push(file.to_string());
        }
        let info = [
            ("num_documents".to_string(), json!(stats.num_documents)),
            ("num_classes".to_string(), json!(stats.num_classes)),
            ("vocab_size".to_string(), json!(stats.vocab_size)),
        ]
        .into();
        Ok((files, info))
    })?;
    let mut summary = ctx.read_text(CORPUS_SUMMARY)?;
    if ctx.config.embeddings.is_some() {
        summary.push_str(&ctx.read_text(COVERAGE)?);
    }
    Ok(StageReport {
        stage: "prepare".into(),
        skipped,
        summary,
    })
}

pub fn reduce(ctx: &mut Context) -> Result<StageReport> {
    let corpus = ctx.corpus()?;
    let method = ctx.config.method;
    let q = ctx.config.resolve_q(corpus.num_classes())?;
    let mut params = ctx.config.select(&["tokenize", "method"]);
    params.push(("q".into(), q.to_string()));
    match method {
        Method::Ae => params.extend(ctx.config.select(&["ae_weighting", "embedding_dim", "seed"])),
        Method::Lsa => params.extend(ctx.config.select(&["weighting"])),
        Method::Le | Method::Lpi => {
            params.extend(ctx.config.select(&["weighting", "graph_k", "sigma"]))
        }
    }
    let inputs = ctx.dataset_inputs(method == Method::Ae)?;
    let skipped = ctx.run_stage("reduce", params, inputs, |ctx| {
        let cfg = &ctx.config;
        let mut info: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        info.insert("method".into(), json!(method.as_str()));
        info.insert("q".into(), json!(q));
        let codes = if method == Method::Ae {
            info.insert("weighting".into(), json!(weighting_name(cfg.ae_weighting)));
            reduce_ae(&corpus, &ctx.embeddings()?, cfg.ae_weighting)
        } else {
            info.insert("weighting".into(), json!(weighting_name(cfg.weighting)));
            info.insert("normalized_columns".into(), json!(true));
            let x = term_matrix(&corpus, cfg.weighting).normalized_columns();
            if method == Method::Lsa {
                reduce_lsa(&x, q)?
            } else {
                let graph = build_graph(&x, cfg.graph_k, cfg.sigma)?;
                info.insert("graph_k".into(), json!(graph.k_neighbors));
                info.insert("sigma".into(), json!(graph.sigma));
                if method == Method::Le {
                    reduce_le(&graph, q)?
                } else {
                    reduce_lpi(&x, &graph, q)?
                }
            }
        };
        info.insert("zero_documents".into(), json!(codes.zero_documents));
        info.insert("ridge".into(), json!(codes.ridge));
        let bin = binarize_median(&codes.y)?;
        ctx.write(CODES, |w| io::write_matrix(&codes.y, w))?;
        ctx.write(BITS, |w| io::write_bits(&bin.codes, w))?;
        let thresholds = stc_core::DenseMatrix::from_vec(bin.thresholds.len(), 1, bin.thresholds.clone())?;
        ctx.write(THRESHOLDS, |w| io::write_matrix(&thresholds, w))?;
        let mut files = vec![CODES.to_string(), BITS.to_string(), THRESHOLDS.to_string()];
        if let Some(m) = &codes.mapping {
            ctx.write(MAPPING, |w| io::write_matrix(m, w))?;
            files.push(MAPPING.to_string());
        }
        Ok((files, info))
    })?;
    let info = &ctx.manifest.stages["reduce"].info;
    let mut summary = format!("method={method} q={q}");
    for key in ["graph_k", "sigma"] {
        if let Some(v) = info.get(key) {
            summary.push_str(&format!(" {key}={v}"));
        }
    }
    summary.push('\n');
    Ok(StageReport {
        stage: "reduce".into(),
        skipped,
        summary,
    })
}

fn weighting_name(w: Weighting) -> &'static str {
    match w {
        Weighting::Tf => "tf",
        Weighting::TfIdf => "tfidf",
    }
}

/// The CNN configuration for this corpus and code length.
pub fn cnn_config(cfg: &PipelineConfig, corpus: &Corpus, q: usize) -> CnnConfig {
    CnnConfig {
        q,
        sentence_width: cfg
            .sentence_width
            .unwrap_or_else(|| corpus.stats().max_length.max(cfg.cnn.k_top).max(1)),
        seed: seed::derive(cfg.seed, SEED_CNN),
        ..cfg.cnn.clone()
    }
}

pub fn train_stage(ctx: &mut Context) -> Result<StageReport> {
    let mut params = ctx.config.select(&[
        "tokenize",
        "embedding_dim",
        "layers",
        "filter_widths",
        "feature_maps",
        "k_top",
        "sentence_width",
        "learning_rate",
        "batch_size",
        "dropout",
        "epochs",
        "dev_fraction",
        "seed",
    ]);
    let corpus = ctx.corpus()?;
    let expected_q = ctx.config.resolve_q(corpus.num_classes())?;
    params.push(("q".into(), expected_q.to_string()));
    let mut inputs = ctx.dataset_inputs(true)?;
    ctx.artifact_input(&mut inputs, "train", BITS, "reduce")?;
    let skipped = ctx.run_stage("train", params, inputs, |ctx| {
        let bits = io::read_bits(io::open(&ctx.out_path(BITS))?)?;
        if bits.n() != corpus.len() {
            return Err(CliError::invalid(format!(
                "{BITS} covers {} documents but the corpus has {}; rerun `stc reduce`",
                bits.n(),
                corpus.len()
            )));
        }
        if bits.q() != expected_q {
            return Err(CliError::invalid(format!(
                "{BITS} has q={} but the configuration resolves q={expected_q}; rerun `stc reduce`",
                bits.q()
            )));
        }
        let config = cnn_config(&ctx.config, &corpus, bits.q());
        let embedding = ctx.embeddings()?.embedding_matrix(&corpus.vocabulary);
        let mut model = CnnModel::new(config, embedding)?;
        let docs: Vec<&[usize]> = corpus.documents.iter().map(|d| d.token_ids.as_slice()).collect();
        let history = if ctx.config.dev_fraction > 0.0 && corpus.len() >= 2 {
            let (train_idx, dev_idx) =
                dev_split(corpus.len(), ctx.config.dev_fraction, seed::derive(ctx.config.seed, SEED_DEV))?;
            let pick = |idx: &[usize]| -> Result<TrainingSet<'_>> {
                let set = TrainingSet::new(idx.iter().map(|&i| docs[i]).collect(), &bits.select_columns(idx))?;
                Ok(set)
            };
            let train_set = pick(&train_idx)?;
            let dev_set = pick(&dev_idx)?;
            let dev = (!dev_set.is_empty()).then_some(&dev_set);
            train(&mut model, &train_set, dev)?
        } else {
            train(&mut model, &TrainingSet::new(docs.clone(), &bits)?, None)?
        };
        checkpoint::save(&model, &ctx.out_path(MODEL))?;
        ctx.write(LOSS, |w| write_loss_csv(&history, w))?;
        let mut info = BTreeMap::new();
        info.insert("q".into(), json!(model.config.q));
        info.insert("r".into(), json!(model.r()));
        info.insert("sentence_width".into(), json!(model.config.sentence_width));
        info.insert("epochs".into(), json!(history.len()));
        if let Some(last) = history.last() {
            info.insert("final_loss".into(), json!(last.mean_loss));
        }
        Ok((vec![MODEL.to_string(), LOSS.to_string()], info))
    })?;
    let info = &ctx.manifest.stages["train"].info;
    Ok(StageReport {
        stage: "train".into(),
        skipped,
        summary: format!(
            "q={} r={} epochs={} final_loss={}\n",
            info["q"],
            info["r"],
            info["epochs"],
            info.get("final_loss").map_or("n/a".into(), |v| v.to_string())
        ),
    })
}

/// Output file names for cluster-eval: plain for CNN features, prefixed in
/// baseline mode so both can live in one output directory.
pub fn metrics_file(baseline: Option<BaselineFeatures>) -> String {
    match baseline {
        None => METRICS.to_string(),
        Some(b) => format!("baseline_{}_{METRICS}", b.as_str()),
    }
}

pub fn assignments_file(baseline: Option<BaselineFeatures>, trial: usize) -> String {
    match baseline {
        None => format!("assignments_trial{trial}.csv"),
        Some(b) => format!("baseline_{}_assignments_trial{trial}.csv", b.as_str()),
    }
}

pub fn cluster_eval(ctx: &mut Context) -> Result<StageReport> {
    let baseline = ctx.config.baseline;
    let stage = match baseline {
        None => "cluster-eval".to_string(),
        Some(b) => format!("baseline-{}", b.as_str()),
    };
    let mut params = ctx.config.select(&[
        "tokenize", "k", "restarts", "max_iters", "tol", "seeding", "trials", "seed", "baseline",
    ]);
    let mut inputs = ctx.dataset_inputs(false)?;
    match baseline {
        None => ctx.artifact_input(&mut inputs, "cluster-eval", MODEL, "train")?,
        Some(BaselineFeatures::Codes) => {
            params.extend(ctx.config.select(&["method"]));
            ctx.artifact_input(&mut inputs, "cluster-eval", CODES, "reduce")?
        }
        Some(_) => {}
    }
    let corpus = ctx.corpus()?;
    let gold = corpus.labels();
    let k = if ctx.config.kmeans.k == 0 {
        corpus.num_classes()
    } else {
        ctx.config.kmeans.k
    };
    let metrics = metrics_file(baseline);
    let skipped = ctx.run_stage(&stage, params, inputs, |ctx| {
        let mut files = Vec::new();
        let mut info = BTreeMap::new();
        let points = match baseline {
            None => {
                let model = checkpoint::load(&ctx.out_path(MODEL))?;
                if model.vocab_size() != corpus.vocabulary.len() {
                    return Err(CliError::invalid(format!(
                        "{MODEL} has a {}-word vocabulary but the corpus has {}; rerun `stc train`",
                        model.vocab_size(),
                        corpus.vocabulary.len()
                    )));
                }
                let docs: Vec<&[usize]> =
                    corpus.documents.iter().map(|d| d.token_ids.as_slice()).collect();
                let h = model.extract_features(&docs);
                ctx.write(FEATURES, |w| io::write_matrix(&h, w))?;
                files.push(FEATURES.to_string());
                dense_points(&h, &mut info)
            }
            Some(BaselineFeatures::Codes) => {
                let y = io::read_matrix(io::open(&ctx.out_path(CODES))?)?;
                if y.cols() != corpus.len() {
                    return Err(CliError::invalid(format!(
                        "{CODES} covers {} documents but the corpus has {}; rerun `stc reduce`",
                        y.cols(),
                        corpus.len()
                    )));
                }
                dense_points(&y, &mut info)
            }
            Some(b) => {
                let weighting = if b == BaselineFeatures::Tf {
                    Weighting::Tf
                } else {
                    Weighting::TfIdf
                };
                let x = term_matrix(&corpus, weighting).normalized_columns();
                Points::from_sparse_columns(&x.matrix)
            }
        };
        let mut reports = Vec::with_capacity(ctx.config.trials);
        for t in 0..ctx.config.trials {
            let km = KMeansConfig {
                k,
                seed: seed::derive_indexed(ctx.config.seed, SEED_TRIAL, t as u64),
                ..ctx.config.kmeans.clone()
            };
            let assignment = kmeans_restarts(&points, &km)?;
            reports.push(evaluate(&gold, &assignment.labels)?);
            let file = assignments_file(baseline, t + 1);
            ctx.write(&file, |w| io::write_assignments(&assignment.labels, w))?;
            files.push(file);
        }
        ctx.write(&metrics, |w| write_metrics_csv(&reports, w))?;
        files.push(metrics.clone());
        let accs: Vec<f64> = reports.iter().map(|r| r.acc).collect();
        let nmis: Vec<f64> = reports.iter().map(|r| r.nmi).collect();
        info.insert("k".into(), json!(k));
        info.insert("acc".into(), json!(format_mean_std(&accs)));
        info.insert("nmi".into(), json!(format_mean_std(&nmis)));
        Ok((files, info))
    })?;
    let info = &ctx.manifest.stages[&stage].info;
    Ok(StageReport {
        stage: stage.clone(),
        skipped,
        summary: format!(
            "k={} ACC={} NMI={} ({})\n",
            info["k"],
            info["acc"].as_str().unwrap_or(""),
            info["nmi"].as_str().unwrap_or(""),
            ctx.out_path(&metrics).display()
        ),
    })
}

fn dense_points(f: &stc_core::DenseMatrix, info: &mut BTreeMap<String, serde_json::Value>) -> Points {
    let (normalized, zeros) = normalize_columns(f);
    if zeros > 0 {
        log::warn!("{zeros} feature columns are zero and stay unnormalized");
        info.insert("zero_columns".into(), json!(zeros));
    }
    Points::from_columns(&normalized)
}

/// `prepare → reduce → train → cluster-eval`, or the subset a baseline needs.
pub fn pipeline(ctx: &mut Context) -> Result<Vec<StageReport>> {
    let mut reports = vec![prepare(ctx)?];
    match ctx.config.baseline {
        None => {
            reports.push(reduce(ctx)?);
            reports.push(train_stage(ctx)?);
        }
        Some(BaselineFeatures::Codes) => reports.push(reduce(ctx)?),
        Some(_) => {}
    }
    reports.push(cluster_eval(ctx)?);
    Ok(reports)
}

pub fn run(stage: Option<Stage>, config: PipelineConfig) -> Result<Vec<StageReport>> {
    let mut ctx = Context::new(config)?;
    let reports = match stage {
        None => pipeline(&mut ctx)?,
        Some(Stage::Prepare) => vec![prepare(&mut ctx)?],
        Some(Stage::Reduce) => vec![reduce(&mut ctx)?],
        Some(Stage::Train) => vec![train_stage(&mut ctx)?],
        Some(Stage::ClusterEval) => vec![cluster_eval(&mut ctx)?],
    };
    ctx.finish()?;
    Ok(reports)
}
