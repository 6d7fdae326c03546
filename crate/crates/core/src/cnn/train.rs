use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{sample_mask, CnnModel, Example};
use crate::dimred::BinaryCodes;
use crate::error::{Error, Result};
use crate::seed;

/// Documents as token-id lists paired with their target bits.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub docs: Vec<&'a [usize]>,
    pub targets: Vec<Vec<f64>>,
}

impl<'a> TrainingSet<'a> {
    /// Pairs document `i` with code column `i`.
    pub fn new(docs: Vec<&'a [usize]>, codes: &BinaryCodes) -> Result<Self> {
        if docs.len() != codes.n() {
            return Err(Error::Shape(format!(
                "{} documents but codes cover {}",
                docs.len(),
                codes.n()
            )));
        }
        let targets = (0..codes.n()).map(|i| codes.column(i)).collect();
        Ok(Self { docs, targets })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    /// Training loss per document, with dropout active.
    pub mean_loss: f64,
    pub dev_loss: Option<f64>,
}

/// Mini-batch Adagrad on the summed logistic loss. Batches are drawn from a
/// per-epoch seeded shuffle; the last partial batch is kept.
pub fn train(
    model: &mut CnnModel,
    data: &TrainingSet<'_>,
    dev: Option<&TrainingSet<'_>>,
) -> Result<Vec<EpochLoss>> {
    let q = model.config.q;
    if let Some(t) = data.targets.first().or(dev.and_then(|d| d.targets.first())) {
        if t.len() != q {
            return Err(Error::Shape(format!("codes have {} bits, network outputs {q}", t.len())));
        }
    }
    let vocab = model.vocab_size();
    if let Some(id) = data
        .docs
        .iter()
        .chain(dev.map_or(&[][..], |d| &d.docs))
        .flat_map(|d| d.iter())
        .find(|&&id| id >= vocab)
    {
        return Err(Error::Input(format!(
            "token id {id} outside the embedding table of {vocab} rows"
        )));
    }

    let cfg = model.config.clone();
    let n = data.len();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed::derive_indexed(cfg.seed, "cnn/shuffle", epoch as u64)));
        let mut mask_rng = seed::rng(seed::derive_indexed(cfg.seed, "cnn/dropout", epoch as u64));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let masks: Vec<Option<Vec<f64>>> = batch
                .iter()
                .map(|_| {
                    (cfg.dropout_rate > 0.0)
                        .then(|| sample_mask(cfg.dropout_rate, cfg.r(), &mut mask_rng))
                })
                .collect();
            let examples: Vec<Example<'_>> = batch
                .iter()
                .zip(&masks)
                .map(|(&i, mask)| Example {
                    token_ids: data.docs[i],
                    targets: &data.targets[i],
                    mask: mask.as_deref(),
                })
                .collect();
            let (loss, grads) = model.loss_and_grad(&examples);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss in epoch {epoch}")));
            }
            model.adagrad_step(&grads, cfg.learning_rate);
            total += loss;
        }
        let mean_loss = if n > 0 { total / n as f64 } else { 0.0 };
        let dev_loss = dev
            .filter(|d| !d.is_empty())
            .map(|d| model.loss(&d.docs, &d.targets) / d.len() as f64);
        log::info!("epoch {epoch}: loss {mean_loss:.6} dev {dev_loss:?}");
        history.push(EpochLoss {
            epoch,
            mean_loss,
            dev_loss,
        });
    }
    Ok(history)
}

/// CSV `epoch,mean_loss,dev_loss`; the dev column is empty without a dev set.
pub fn write_loss_csv<W: Write>(history: &[EpochLoss], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,mean_loss,dev_loss")?;
    for e in history {
        match e.dev_loss {
            Some(d) => writeln!(out, "{},{},{}", e.epoch, e.mean_loss, d)?,
            None => writeln!(out, "{},{},", e.epoch, e.mean_loss)?,
        }
    }
    Ok(())
}
