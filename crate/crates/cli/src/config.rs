//! Flat `key=value` pipeline configuration.
//!
//! Files hold one `key = value` pair per line; `#` starts a comment. Command
//! line overrides are applied afterwards with the same keys, so they win.
//! Relative paths in a file are resolved against the file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use stc_core::{CnnConfig, KMeansConfig, Method, Seeding, TokenizeMode, Weighting};

use crate::error::{CliError, Result};

/// Known datasets whose best subspace sizes serve as `q` defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    SearchSnippets,
    StackOverflow,
    Biomedical,
}

impl Dataset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dataset::SearchSnippets => "searchsnippets",
            Dataset::StackOverflow => "stackoverflow",
            Dataset::Biomedical => "biomedical",
        }
    }

    /// Best `q` per reduction method; AE is pinned to the embedding width.
    pub fn default_q(&self, method: Method) -> Option<usize> {
        let (lsa, le, lpi) = match self {
            Dataset::SearchSnippets => (10, 20, 20),
            Dataset::StackOverflow => (20, 70, 80),
            Dataset::Biomedical => (20, 30, 30),
        };
        match method {
            Method::Ae => None,
            Method::Lsa => Some(lsa),
            Method::Le => Some(le),
            Method::Lpi => Some(lpi),
        }
    }
}

impl FromStr for Dataset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "searchsnippets" => Ok(Dataset::SearchSnippets),
            "stackoverflow" => Ok(Dataset::StackOverflow),
            "biomedical" => Ok(Dataset::Biomedical),
            other => Err(CliError::invalid(format!(
                "unknown dataset '{other}' (expected searchsnippets, stackoverflow or biomedical)"
            ))),
        }
    }
}

/// What `--baseline` clusters instead of CNN features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineFeatures {
    /// The continuous reduced codes Y of the configured method.
    Codes,
    Tf,
    TfIdf,
}

impl BaselineFeatures {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineFeatures::Codes => "codes",
            BaselineFeatures::Tf => "tf",
            BaselineFeatures::TfIdf => "tfidf",
        }
    }
}

impl FromStr for BaselineFeatures {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "codes" | "y" => Ok(BaselineFeatures::Codes),
            "tf" => Ok(BaselineFeatures::Tf),
            "tfidf" | "tf-idf" => Ok(BaselineFeatures::TfIdf),
            other => Err(CliError::invalid(format!(
                "unknown baseline features '{other}' (expected codes, tf or tfidf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub texts: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub tokenize: TokenizeMode,
    pub dataset: Option<Dataset>,
    pub method: Method,
    /// Explicit subspace size; see [`PipelineConfig::resolve_q`] for defaults.
    pub q: Option<usize>,
    /// Weighting of X for LSA, LE and LPI.
    pub weighting: Weighting,
    /// Weighting of the embedding average for AE.
    pub ae_weighting: Weighting,
    pub graph_k: usize,
    pub sigma: f64,
    /// CNN hyperparameters; `q` and `seed` are filled in by the stages.
    pub cnn: CnnConfig,
    /// `None` means the corpus max length.
    pub sentence_width: Option<usize>,
    pub dev_fraction: f64,
    /// K-means settings; `k = 0` means the number of gold classes.
    pub kmeans: KMeansConfig,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub baseline: Option<BaselineFeatures>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            texts: None,
            labels: None,
            embeddings: None,
            tokenize: TokenizeMode::Verbatim,
            dataset: None,
            method: Method::Lpi,
            q: None,
            weighting: Weighting::TfIdf,
            ae_weighting: Weighting::Tf,
            graph_k: 15,
            sigma: 1.0,
            cnn: CnnConfig::default(),
            sentence_width: None,
            dev_fraction: 0.1,
            kmeans: KMeansConfig {
                k: 0,
                ..KMeansConfig::default()
            },
            trials: 5,
            seed: 0,
            out: PathBuf::from("stc-out"),
            baseline: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::invalid(format!("bad value '{value}' for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect()
}

/// Empty, `auto` and `none` all mean "unset".
fn optional(v: &str) -> Option<&str> {
    (!v.is_empty() && v != "auto" && v != "none").then_some(v)
}

fn weighting_str(w: Weighting) -> &'static str {
    match w {
        Weighting::Tf => "tf",
        Weighting::TfIdf => "tfidf",
    }
}

fn join_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or(String::new(), |p| p.display().to_string())
}

impl PipelineConfig {
    /// Every key accepted by [`PipelineConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "texts",
        "labels",
        "embeddings",
        "tokenize",
        "dataset",
        "method",
        "q",
        "weighting",
        "ae_weighting",
        "graph_k",
        "sigma",
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
        "k",
        "restarts",
        "max_iters",
        "tol",
        "seeding",
        "trials",
        "seed",
        "out",
        "baseline",
    ];

    /// Applies one setting. `base` anchors relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let value = value.trim();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "texts" => self.texts = Some(path(value)),
            "labels" => self.labels = Some(path(value)),
            "embeddings" => self.embeddings = optional(value).map(path),
            "tokenize" => self.tokenize = value.parse()?,
            "dataset" => self.dataset = optional(value).map(str::parse).transpose()?,
            "method" => self.method = value.parse()?,
            "q" => self.q = optional(value).map(|v| parse(key, v)).transpose()?,
            "weighting" => self.weighting = value.parse()?,
            "ae_weighting" => self.ae_weighting = value.parse()?,
            "graph_k" => self.graph_k = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "embedding_dim" => self.cnn.d_w = parse(key, value)?,
            "layers" => self.cnn.num_layers = parse(key, value)?,
            "filter_widths" => self.cnn.filter_widths = parse_list(key, value)?,
            "feature_maps" => self.cnn.feature_maps = parse_list(key, value)?,
            "k_top" => self.cnn.k_top = parse(key, value)?,
            "sentence_width" => {
                self.sentence_width = optional(value).map(|v| parse(key, v)).transpose()?
            }
            "learning_rate" => self.cnn.learning_rate = parse(key, value)?,
            "batch_size" => self.cnn.batch_size = parse(key, value)?,
            "dropout" => self.cnn.dropout_rate = parse(key, value)?,
            "epochs" => self.cnn.epochs = parse(key, value)?,
            "dev_fraction" => self.dev_fraction = parse(key, value)?,
            "k" => self.kmeans.k = optional(value).map_or(Ok(0), |v| parse(key, v))?,
            "restarts" => self.kmeans.restarts = parse(key, value)?,
            "max_iters" => self.kmeans.max_iters = parse(key, value)?,
            "tol" => self.kmeans.tol = parse(key, value)?,
            "seeding" => self.kmeans.seeding = value.parse()?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = path(value),
            "baseline" => self.baseline = optional(value).map(str::parse).transpose()?,
            other => return Err(CliError::invalid(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines. `origin` names the source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &str, base: Option<&Path>) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::invalid(format!("{origin}:{}: expected key=value, got '{raw}'", i + 1))
            })?;
            self.set(key.trim(), value, base).map_err(|e| {
                CliError::invalid(format!("{origin}:{}: {}", i + 1, e))
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| stc_core::Error::io(path, e))?;
        let mut cfg = Self::default();
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        cfg.apply_text(&text, &path.display().to_string(), base)?;
        Ok(cfg)
    }

    /// `q` for the configured method: explicit value, else `d_w` for AE, else
    /// the dataset's best size, else the number of classes.
    pub fn resolve_q(&self, num_classes: usize) -> Result<usize> {
        let q = match (self.method, self.q) {
            (Method::Ae, Some(q)) if q != self.cnn.d_w => {
                return Err(CliError::invalid(format!(
                    "AE codes have the embedding width {}; q={q} is not allowed",
                    self.cnn.d_w
                )))
            }
            (Method::Ae, _) => self.cnn.d_w,
            (_, Some(q)) => q,
            (method, None) => self
                .dataset
                .and_then(|d| d.default_q(method))
                .unwrap_or(num_classes),
        };
        if q == 0 {
            return Err(CliError::invalid("q must be positive"));
        }
        Ok(q)
    }

    pub fn texts_path(&self) -> Result<&Path> {
        self.texts
            .as_deref()
            .ok_or_else(|| CliError::invalid("no texts file configured (set texts=PATH)"))
    }

    pub fn labels_path(&self) -> Result<&Path> {
        self.labels
            .as_deref()
            .ok_or_else(|| CliError::invalid("no labels file configured (set labels=PATH)"))
    }

    /// Checks value ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        for (what, p) in [
            ("texts", Some(self.texts_path()?)),
            ("labels", Some(self.labels_path()?)),
            ("embeddings", self.embeddings.as_deref()),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(CliError::invalid(format!(
                        "{what} file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.graph_k == 0 {
            return Err(CliError::invalid("graph_k must be at least 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(CliError::invalid("sigma must be positive"));
        }
        if !(self.dev_fraction >= 0.0 && self.dev_fraction < 1.0) {
            return Err(CliError::invalid("dev_fraction must lie in [0, 1)"));
        }
        if self.trials == 0 {
            return Err(CliError::invalid("trials must be at least 1"));
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iters == 0 {
            return Err(CliError::invalid("restarts and max_iters must be at least 1"));
        }
        if !(self.kmeans.tol >= 0.0) {
            return Err(CliError::invalid("tol must be nonnegative"));
        }
        if let Some(q) = self.q {
            if q == 0 {
                return Err(CliError::invalid("q must be positive"));
            }
        }
        Ok(())
    }

    /// Canonical `(key, value)` pairs, used for manifests and fingerprints.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.cnn;
        let k = &self.kmeans;
        vec![
            ("texts", path_str(&self.texts)),
            ("labels", path_str(&self.labels)),
            ("embeddings", path_str(&self.embeddings)),
            ("tokenize", tokenize_str(self.tokenize).into()),
            ("dataset", self.dataset.map_or("", |d| d.as_str()).into()),
            ("method", self.method.to_string()),
            ("q", self.q.map_or(String::new(), |q| q.to_string())),
            ("weighting", weighting_str(self.weighting).into()),
            ("ae_weighting", weighting_str(self.ae_weighting).into()),
            ("graph_k", self.graph_k.to_string()),
            ("sigma", self.sigma.to_string()),
            ("embedding_dim", c.d_w.to_string()),
            ("layers", c.num_layers.to_string()),
            ("filter_widths", join_list(&c.filter_widths)),
            ("feature_maps", join_list(&c.feature_maps)),
            ("k_top", c.k_top.to_string()),
            (
                "sentence_width",
                self.sentence_width.map_or(String::new(), |s| s.to_string()),
            ),
            ("learning_rate", c.learning_rate.to_string()),
            ("batch_size", c.batch_size.to_string()),
            ("dropout", c.dropout_rate.to_string()),
            ("epochs", c.epochs.to_string()),
            ("dev_fraction", self.dev_fraction.to_string()),
            ("k", if k.k == 0 { String::new() } else { k.k.to_string() }),
            ("restarts", k.restarts.to_string()),
            ("max_iters", k.max_iters.to_string()),
            ("tol", k.tol.to_string()),
            ("seeding", seeding_str(k.seeding).into()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("baseline", self.baseline.map_or("", |b| b.as_str()).into()),
        ]
    }

    /// The values of `keys`, in order.
    pub fn select(&self, keys: &[&str]) -> Vec<(String, String)> {
        let all = self.entries();
        keys.iter()
            .map(|k| {
                let v = all
                    .iter()
                    .find(|(name, _)| name == k)
                    .map(|(_, v)| v.clone())
                    .expect("selected keys are known");
                (k.to_string(), v)
            })
            .collect()
    }
}

fn tokenize_str(m: TokenizeMode) -> &'static str {
    match m {
        TokenizeMode::Verbatim => "verbatim",
        TokenizeMode::LowercaseStrip => "lowercase_strip",
    }
}

fn seeding_str(s: Seeding) -> &'static str {
    match s {
        Seeding::PlusPlus => "kmeans++",
        Seeding::Uniform => "uniform",
    }
}

impl fmt::Display for PipelineConfig {
    /// Renders the configuration back in the file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
