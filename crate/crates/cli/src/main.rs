use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stc_cli::{run, BaselineFeatures, CliError, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "stc", version, about = "Self-taught convolutional short-text clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Load the dataset, write corpus statistics, coverage and term matrices.
    Prepare,
    /// Reduce the term matrix to codes Y and median-binarized bits B.
    Reduce,
    /// Fit the CNN to the bits; writes model.bin and loss.csv.
    Train,
    /// Cluster CNN features (or baseline features) and score them.
    ClusterEval,
    /// Run every stage in order, skipping those already up to date.
    Pipeline,
}

#[derive(Args)]
struct Flags {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reduction method: ae, lsa, le or lpi.
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    q: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of K-means trials to average.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Skip the CNN and cluster baseline features instead: codes (Y), tf or tfidf.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "codes")]
    baseline: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Any other configuration key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(flags: &Flags) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &flags.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v, None)?;
    }
    if let Some(m) = &flags.method {
        cfg.set("method", m, None)?;
    }
    if let Some(q) = flags.q {
        cfg.q = Some(q);
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(t) = flags.trials {
        cfg.trials = t;
    }
    if let Some(b) = &flags.baseline {
        cfg.baseline = Some(b.parse::<BaselineFeatures>()?);
    }
    if let Some(o) = &flags.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let stage = match cli.command {
        Command::Prepare => Some(Stage::Prepare),
        Command::Reduce => Some(Stage::Reduce),
        Command::Train => Some(Stage::Train),
        Command::ClusterEval => Some(Stage::ClusterEval),
        Command::Pipeline => None,
    };
    let result = build_config(&cli.flags).and_then(|cfg| run(stage, cfg));
    match result {
        Ok(reports) => {
            for r in reports {
                let status = if r.skipped { "up to date" } else { "done" };
                println!("[{}] {status}", r.stage);
                print!("{}", r.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
