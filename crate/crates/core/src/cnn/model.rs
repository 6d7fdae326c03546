use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::config::{dynamic_k, CnnConfig};
use super::ops::{fold, k_max_pool, wide_conv_row_backward, wide_conv_row_into};
use crate::embeddings::{sentence_matrix_from_ids, SentenceMatrix};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::seed;

/// Lower clamp for probabilities inside the loss.
pub const PROB_EPS: f64 = 1e-7;
pub const ADAGRAD_EPS: f64 = 1e-6;
/// Examples per work unit in the parallel gradient reduction.
const CHUNK: usize = 4;

/// Trainable tensors. The same layout holds the Adagrad accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// `|V| × d_w`, one row per vocabulary entry.
    pub embedding: DenseMatrix,
    /// Per layer, indexed `((out_map · maps_in + in_map) · rows + row) · m + t`.
    pub conv_w: Vec<Vec<f64>>,
    /// Per layer, indexed `out_map · rows + row`.
    pub conv_b: Vec<Vec<f64>>,
    /// `q × r`
    pub w_out: DenseMatrix,
}

impl Parameters {
    fn zeros(config: &CnnConfig, vocab_size: usize) -> Self {
        let l = config.num_layers;
        Self {
            embedding: DenseMatrix::zeros(vocab_size, config.d_w),
            conv_w: (1..=l).map(|l| vec![0.0; conv_len(config, l)]).collect(),
            conv_b: (1..=l)
                .map(|l| vec![0.0; config.feature_maps[l - 1] * config.rows_in(l)])
                .collect(),
            w_out: DenseMatrix::zeros(config.q, config.r()),
        }
    }

    /// `(name, values)` for every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = vec![("embedding".to_string(), self.embedding.as_slice())];
        for (l, w) in self.conv_w.iter().enumerate() {
            out.push((format!("conv_w.{}", l + 1), w.as_slice()));
        }
        for (l, b) in self.conv_b.iter().enumerate() {
            out.push((format!("conv_b.{}", l + 1), b.as_slice()));
        }
        out.push(("w_out".to_string(), self.w_out.as_slice()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_mut_slice()];
        out.extend(self.conv_w.iter_mut().map(Vec::as_mut_slice));
        out.extend(self.conv_b.iter_mut().map(Vec::as_mut_slice));
        out.push(self.w_out.as_mut_slice());
        out
    }
}

fn conv_len(config: &CnnConfig, l: usize) -> usize {
    config.feature_maps[l - 1] * config.maps_in(l) * config.rows_in(l) * config.filter_widths[l - 1]
}

/// Gradients of the summed loss; embedding rows are kept sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub conv_w: Vec<Vec<f64>>,
    pub conv_b: Vec<Vec<f64>>,
    pub w_out: Vec<f64>,
}

impl Gradients {
    pub fn zeros(config: &CnnConfig) -> Self {
        let p = Parameters::zeros(config, 0);
        Self {
            embedding: BTreeMap::new(),
            conv_w: p.conv_w,
            conv_b: p.conv_b,
            w_out: p.w_out.into_vec(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (id, row) in &other.embedding {
            let dst = self
                .embedding
                .entry(*id)
                .or_insert_with(|| vec![0.0; row.len()]);
            add_into(dst, row);
        }
        for (a, b) in self.conv_w.iter_mut().zip(&other.conv_w) {
            add_into(a, b);
        }
        for (a, b) in self.conv_b.iter_mut().zip(&other.conv_b) {
            add_into(a, b);
        }
        add_into(&mut self.w_out, &other.w_out);
    }

    /// Embedding gradient as a dense `|V| × d_w` block.
    pub fn embedding_dense(&self, vocab_size: usize, d_w: usize) -> Vec<f64> {
        let mut out = vec![0.0; vocab_size * d_w];
        for (&id, row) in &self.embedding {
            out[id * d_w..(id + 1) * d_w].copy_from_slice(row);
        }
        out
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// What one convolutional layer produced for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Folded maps before pooling, one per output map.
    pub pre_pool: Vec<DenseMatrix>,
    /// Selected column indices per output map and row, strictly increasing.
    pub selections: Vec<Vec<Vec<usize>>>,
    /// `tanh` of the pooled maps; the next layer's input.
    pub activations: Vec<DenseMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Token ids actually read (truncated to the sentence width).
    pub token_ids: Vec<usize>,
    /// `d_w × w` input, `w = max(true length, minimal width)`.
    pub input: DenseMatrix,
    pub layers: Vec<LayerTrace>,
    /// Deep features before dropout.
    pub h: Vec<f64>,
    /// Inverted-dropout multipliers applied to `h`, if in training mode.
    pub mask: Option<Vec<f64>>,
    /// `O = W_O (h ⊙ mask)`
    pub output: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// One training example for [`CnnModel::loss_and_grad`].
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub token_ids: &'a [usize],
    /// Target bits as 0/1 reals, length `q`.
    pub targets: &'a [f64],
    pub mask: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub params: Parameters,
    pub accumulators: Parameters,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Negative log-likelihood of `targets` under `sigmoid(output)` and its
/// gradient with respect to `output`, using clamped probabilities.
pub fn logistic_loss(output: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = output
        .iter()
        .zip(targets)
        .map(|(&o, &b)| {
            let p = sigmoid(o).clamp(PROB_EPS, 1.0 - PROB_EPS);
            loss -= b * p.ln() + (1.0 - b) * (1.0 - p).ln();
            p - b
        })
        .collect();
    (loss, grad)
}

/// Inverted-dropout multipliers: `1/(1 − rate)` for kept units, 0 otherwise.
pub fn sample_mask(rate: f64, len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

fn glorot(rng: &mut impl Rng, values: &mut [f64], fan_in: usize, fan_out: usize) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = rng.random_range(-bound..=bound);
    }
}

impl CnnModel {
    /// Fresh model with the given `|V| × d_w` embedding matrix as `E`.
    pub fn new(config: CnnConfig, embedding: DenseMatrix) -> Result<Self> {
        config.validate()?;
        if embedding.cols() != config.d_w {
            return Err(Error::Shape(format!(
                "embedding matrix has {} columns, config d_w = {}",
                embedding.cols(),
                config.d_w
            )));
        }
        let vocab = embedding.rows();
        let mut params = Parameters::zeros(&config, vocab);
        params.embedding = embedding;
        let mut rng = seed::rng(seed::derive(config.seed, "cnn/init"));
        for l in 1..=config.num_layers {
            let m = config.filter_widths[l - 1];
            glorot(
                &mut rng,
                &mut params.conv_w[l - 1],
                config.maps_in(l) * m,
                config.feature_maps[l - 1] * m,
            );
        }
        glorot(&mut rng, params.w_out.as_mut_slice(), config.r(), config.q);
        let accumulators = Parameters::zeros(&config, vocab);
        Ok(Self {
            config,
            params,
            accumulators,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.params.embedding.rows()
    }

    pub fn r(&self) -> usize {
        self.config.r()
    }

    #[inline]
    fn filter(&self, l: usize, o: usize, i: usize, row: usize) -> &[f64] {
        let c = &self.config;
        let m = c.filter_widths[l - 1];
        let base = ((o * c.maps_in(l) + i) * c.rows_in(l) + row) * m;
        &self.params.conv_w[l - 1][base..base + m]
    }

    pub fn forward(&self, token_ids: &[usize], mask: Option<&[f64]>) -> ForwardTrace {
        let width = self.config.sentence_width;
        let sentence = sentence_matrix_from_ids(&self.params.embedding, token_ids, width);
        let mut trace = self.forward_sentence(&sentence, mask);
        trace.token_ids = token_ids[..sentence.true_length].to_vec();
        trace
    }

    /// Runs the network on an explicit sentence matrix. Only the first
    /// `max(true_length, minimal width)` columns are read, so the amount of
    /// trailing padding never changes the result.
    pub fn forward_sentence(&self, sentence: &SentenceMatrix, mask: Option<&[f64]>) -> ForwardTrace {
        let c = &self.config;
        let len = sentence.true_length;
        let w0 = len.max(c.min_input_width());
        let src = &sentence.matrix;
        let input = DenseMatrix::from_fn(c.d_w, w0, |i, j| {
            if j < len && j < src.cols() {
                src[(i, j)]
            } else {
                0.0
            }
        });

        let mut layers: Vec<LayerTrace> = Vec::with_capacity(c.num_layers);
        for l in 1..=c.num_layers {
            let inputs: &[DenseMatrix] = match layers.last() {
                None => std::slice::from_ref(&input),
                Some(prev) => &prev.activations,
            };
            let layer = self.layer_forward(l, inputs, len);
            layers.push(layer);
        }

        let h: Vec<f64> = layers
            .last()
            .expect("at least one layer")
            .activations
            .iter()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect();
        let dropped: Vec<f64> = match mask {
            Some(m) => h.iter().zip(m).map(|(x, k)| x * k).collect(),
            None => h.clone(),
        };
        let output = self.params.w_out.mul_vec(&dropped);
        let probabilities = output.iter().map(|&o| sigmoid(o)).collect();
        ForwardTrace {
            token_ids: Vec::new(),
            input,
            layers,
            h,
            mask: mask.map(<[f64]>::to_vec),
            output,
            probabilities,
        }
    }

    fn layer_forward(&self, l: usize, inputs: &[DenseMatrix], len: usize) -> LayerTrace {
        let c = &self.config;
        let rows = c.rows_in(l);
        let m = c.filter_widths[l - 1];
        let wc = inputs[0].cols() + m - 1;
        let k = dynamic_k(l, c.num_layers, len, c.k_top).min(wc);
        let bias = &self.params.conv_b[l - 1];
        let fout = c.feature_maps[l - 1];
        let mut trace = LayerTrace {
            pre_pool: Vec::with_capacity(fout),
            selections: Vec::with_capacity(fout),
            activations: Vec::with_capacity(fout),
        };
        for o in 0..fout {
            let mut conv = DenseMatrix::zeros(rows, wc);
            for row in 0..rows {
                let out = conv.row_mut(row);
                out.fill(bias[o * rows + row]);
                for (i, x) in inputs.iter().enumerate() {
                    wide_conv_row_into(x.row(row), self.filter(l, o, i, row), out);
                }
            }
            let folded = fold(&conv).expect("row count is even by config validation");
            let (mut pooled, sel) = k_max_pool(&folded, k).expect("k never exceeds the map width");
            pooled.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
            trace.pre_pool.push(folded);
            trace.selections.push(sel);
            trace.activations.push(pooled);
        }
        trace
    }

    /// Backpropagates one example, adding its gradients to `grads`.
    /// Returns the example's loss.
    pub fn accumulate_gradients(&self, example: &Example<'_>, grads: &mut Gradients) -> f64 {
        let c = &self.config;
        let trace = self.forward(example.token_ids, example.mask);
        let (loss, d_out) = logistic_loss(&trace.output, example.targets);

        let r = c.r();
        let mut dh = vec![0.0; r];
        for (qi, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let w_row = self.params.w_out.row(qi);
            let g_row = &mut grads.w_out[qi * r..(qi + 1) * r];
            match &trace.mask {
                Some(mask) => {
                    for j in 0..r {
                        g_row[j] += g * trace.h[j] * mask[j];
                        dh[j] += g * w_row[j] * mask[j];
                    }
                }
                None => {
                    for j in 0..r {
                        g_row[j] += g * trace.h[j];
                        dh[j] += g * w_row[j];
                    }
                }
            }
        }

        // Unflatten into per-map gradients of the last layer's activations.
        let last = trace.layers.last().expect("at least one layer");
        let mut d_act: Vec<DenseMatrix> = Vec::with_capacity(last.activations.len());
        let mut offset = 0;
        for a in &last.activations {
            let n = a.rows() * a.cols();
            d_act.push(
                DenseMatrix::from_vec(a.rows(), a.cols(), dh[offset..offset + n].to_vec())
                    .expect("finite gradients"),
            );
            offset += n;
        }

        for l in (1..=c.num_layers).rev() {
            let layer = &trace.layers[l - 1];
            let inputs: &[DenseMatrix] = if l == 1 {
                std::slice::from_ref(&trace.input)
            } else {
                &trace.layers[l - 2].activations
            };
            d_act = self.layer_backward(l, layer, inputs, &d_act, grads);
        }

        let d_input = &d_act[0];
        for (col, &id) in trace.token_ids.iter().enumerate() {
            let row = grads
                .embedding
                .entry(id)
                .or_insert_with(|| vec![0.0; c.d_w]);
            for (i, g) in row.iter_mut().enumerate() {
                *g += d_input[(i, col)];
            }
        }
        loss
    }

    fn layer_backward(
        &self,
        l: usize,
        layer: &LayerTrace,
        inputs: &[DenseMatrix],
        d_act: &[DenseMatrix],
        grads: &mut Gradients,
    ) -> Vec<DenseMatrix> {
        let c = &self.config;
        let rows = c.rows_in(l);
        let m = c.filter_widths[l - 1];
        let fin = inputs.len();
        let mut d_inputs: Vec<DenseMatrix> = inputs
            .iter()
            .map(|x| DenseMatrix::zeros(x.rows(), x.cols()))
            .collect();
        for (o, (act, d_a)) in layer.activations.iter().zip(d_act).enumerate() {
            let wc = layer.pre_pool[o].cols();
            let mut d_folded = vec![0.0; wc];
            for half in 0..rows / 2 {
                d_folded.fill(0.0);
                for (j, &col) in layer.selections[o][half].iter().enumerate() {
                    let a = act[(half, j)];
                    d_folded[col] += d_a[(half, j)] * (1.0 - a * a);
                }
                let bias_grad: f64 = d_folded.iter().sum();
                for row in [2 * half, 2 * half + 1] {
                    grads.conv_b[l - 1][o * rows + row] += bias_grad;
                    for i in 0..fin {
                        let base = ((o * fin + i) * rows + row) * m;
                        wide_conv_row_backward(
                            inputs[i].row(row),
                            self.filter(l, o, i, row),
                            &d_folded,
                            d_inputs[i].row_mut(row),
                            &mut grads.conv_w[l - 1][base..base + m],
                        );
                    }
                }
            }
        }
        d_inputs
    }

    /// Summed loss and gradients over a batch. Examples are processed in
    /// parallel in fixed chunks and reduced in order, so the result does not
    /// depend on thread scheduling.
    pub fn loss_and_grad(&self, batch: &[Example<'_>]) -> (f64, Gradients) {
        let partials: Vec<(f64, Gradients)> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = Gradients::zeros(&self.config);
                let loss = chunk
                    .iter()
                    .map(|ex| self.accumulate_gradients(ex, &mut g))
                    .sum();
                (loss, g)
            })
            .collect();
        let mut total = Gradients::zeros(&self.config);
        let mut loss = 0.0;
        for (l, g) in &partials {
            loss += l;
            total.add(g);
        }
        (loss, total)
    }

    /// Summed loss without dropout or gradients.
    pub fn loss(&self, docs: &[&[usize]], targets: &[Vec<f64>]) -> f64 {
        let losses: Vec<f64> = docs
            .par_iter()
            .zip(targets)
            .map(|(ids, b)| logistic_loss(&self.forward(ids, None).output, b).0)
            .collect();
        losses.iter().sum()
    }

    /// `acc += g²; θ −= λ g / (√acc + ε)` on every tensor.
    pub fn adagrad_step(&mut self, grads: &Gradients, learning_rate: f64) {
        let d_w = self.config.d_w;
        let p = &mut self.params;
        let a = &mut self.accumulators;
        for (&id, g) in &grads.embedding {
            let range = id * d_w..(id + 1) * d_w;
            adagrad(
                &mut p.embedding.as_mut_slice()[range.clone()],
                &mut a.embedding.as_mut_slice()[range],
                g,
                learning_rate,
            );
        }
        for l in 0..self.config.num_layers {
            adagrad(&mut p.conv_w[l], &mut a.conv_w[l], &grads.conv_w[l], learning_rate);
            adagrad(&mut p.conv_b[l], &mut a.conv_b[l], &grads.conv_b[l], learning_rate);
        }
        adagrad(
            p.w_out.as_mut_slice(),
            a.w_out.as_mut_slice(),
            &grads.w_out,
            learning_rate,
        );
    }

    /// Deep features `h` (no dropout) as an `r × n` matrix.
    pub fn extract_features(&self, docs: &[&[usize]]) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = docs.par_iter().map(|ids| self.forward(ids, None).h).collect();
        let mut out = DenseMatrix::zeros(self.r(), docs.len());
        for (j, col) in cols.iter().enumerate() {
            out.set_column(j, col);
        }
        out
    }
}

fn adagrad(param: &mut [f64], acc: &mut [f64], grad: &[f64], lr: f64) {
    for ((p, a), &g) in param.iter_mut().zip(acc.iter_mut()).zip(grad) {
        if g == 0.0 {
            continue;
        }
        *a += g * g;
        *p -= lr * g / (a.sqrt() + ADAGRAD_EPS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CnnConfig {
        CnnConfig {
            num_layers: 2,
            filter_widths: vec![3, 2],
            feature_maps: vec![2, 2],
            k_top: 2,
            d_w: 4,
            sentence_width: 6,
            q: 3,
            batch_size: 2,
            epochs: 1,
            seed: 1,
            ..Default::default()
        }
    }

    fn model() -> CnnModel {
        let e = DenseMatrix::from_fn(5, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
        CnnModel::new(tiny(), e).unwrap()
    }

    #[test]
    fn zero_weights_give_half_probability() {
        let mut m = model();
        for t in m.params.tensors_mut() {
            t.fill(0.0);
        }
        let tr = m.forward(&[0, 1, 2], None);
        assert!(tr.output.iter().all(|&o| o == 0.0));
        assert!(tr.probabilities.iter().all(|&p| p == 0.5));
        let (loss, _) = logistic_loss(&tr.output, &[1.0, 0.0, 1.0]);
        assert!((loss - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logistic_values() {
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        let (loss, g) = logistic_loss(&[40.0, -40.0], &[1.0, 0.0]);
        assert!(loss >= 0.0 && loss < 1e-6);
        assert!(g.iter().all(|v| v.abs() <= 1e-7));
    }

    #[test]
    fn shapes_and_selection_order() {
        let m = model();
        let tr = m.forward(&[0, 1, 2, 3, 4, 0, 1, 2], None);
        assert_eq!(tr.h.len(), m.r());
        assert_eq!(tr.token_ids.len(), 6);
        for layer in &tr.layers {
            for sel in layer.selections.iter().flatten() {
                assert!(sel.windows(2).all(|w| w[0] < w[1]));
            }
        }
        // Layer 1: width 6 + 3 − 1 = 8, k = max(2, ⌈6/2⌉) = 3.
        assert_eq!(tr.layers[0].pre_pool[0].cols(), 8);
        assert_eq!(tr.layers[0].activations[0].cols(), 3);
        assert_eq!(tr.layers[1].activations[0].cols(), 2);
    }

    #[test]
    fn empty_document_runs() {
        let m = model();
        let tr = m.forward(&[], None);
        assert_eq!(tr.h.len(), m.r());
        assert_eq!(tr.input.cols(), 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut m = model();
        let before = m.clone();
        m.adagrad_step(&Gradients::zeros(&m.config), 0.01);
        assert_eq!(m, before);
    }

    #[test]
    fn first_adagrad_step_moves_by_learning_rate() {
        let mut m = model();
        let mut g = Gradients::zeros(&m.config);
        g.w_out[0] = 5.0;
        g.w_out[1] = -0.3;
        let (a, b) = (m.params.w_out.as_slice()[0], m.params.w_out.as_slice()[1]);
        m.adagrad_step(&g, 0.01);
        assert!((m.params.w_out.as_slice()[0] - (a - 0.01)).abs() < 1e-8);
        assert!((m.params.w_out.as_slice()[1] - (b + 0.01)).abs() < 1e-7);
        assert_eq!(m.accumulators.w_out.as_slice()[0], 25.0);
    }
}
