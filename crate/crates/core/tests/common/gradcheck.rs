//! Central finite-difference oracle for the network gradients.

use rand::Rng;
use stc_core::cnn::{sample_mask, CnnConfig, CnnModel, Example, Gradients};
use stc_core::DenseMatrix;

use super::rng;

pub const FD_STEP: f64 = 1e-5;
/// Magnitude below which gradient components are compared on an absolute scale.
pub const FD_FLOOR: f64 = 1e-5;

pub struct Instance {
    pub model: CnnModel,
    pub docs: Vec<Vec<usize>>,
    pub targets: Vec<Vec<f64>>,
    pub masks: Vec<Option<Vec<f64>>>,
}

impl Instance {
    pub fn examples(&self) -> Vec<Example<'_>> {
        self.docs
            .iter()
            .zip(&self.targets)
            .zip(&self.masks)
            .map(|((d, t), m)| Example {
                token_ids: d,
                targets: t,
                mask: m.as_deref(),
            })
            .collect()
    }

    fn selections(&self, model: &CnnModel) -> Vec<Vec<Vec<Vec<usize>>>> {
        self.examples()
            .iter()
            .map(|ex| {
                model
                    .forward(ex.token_ids, ex.mask)
                    .layers
                    .into_iter()
                    .flat_map(|l| l.selections)
                    .collect()
            })
            .collect()
    }
}

/// Small random network (d_w=4, s=6, L=2, maps [2,2], q=3) with every
/// parameter, including biases, drawn at random.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let config = CnnConfig {
        num_layers: 2,
        filter_widths: vec![r.random_range(1..=3), r.random_range(1..=3)],
        feature_maps: vec![2, 2],
        k_top: r.random_range(1..=3),
        d_w: 4,
        sentence_width: 6,
        q: 3,
        learning_rate: 0.01,
        batch_size: 4,
        dropout_rate: 0.5,
        epochs: 1,
        seed,
    };
    let vocab = 7;
    let mut model = CnnModel::new(config.clone(), DenseMatrix::zeros(vocab, 4)).unwrap();
    for t in model.params.tensors_mut() {
        for v in t.iter_mut() {
            *v = r.random_range(-0.9..0.9);
        }
    }
    let batch = r.random_range(1..=3);
    let docs: Vec<Vec<usize>> = (0..batch)
        .map(|_| {
            let len = r.random_range(1..=8);
            (0..len).map(|_| r.random_range(0..vocab)).collect()
        })
        .collect();
    let targets = (0..batch)
        .map(|_| (0..3).map(|_| r.random_range(0..2) as f64).collect())
        .collect();
    let masks = (0..batch)
        .map(|_| r.random::<bool>().then(|| sample_mask(0.5, config.r(), &mut r)))
        .collect();
    Instance {
        model,
        docs,
        targets,
        masks,
    }
}

#[derive(Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Components whose ± perturbation changed a k-max selection (no derivative).
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    /// `(tensor index, component, analytic, numeric)` of the worst component.
    pub worst: Option<(usize, usize, f64, f64)>,
}

fn flat_gradients(g: &Gradients, model: &CnnModel) -> Vec<Vec<f64>> {
    let mut out = vec![g.embedding_dense(model.vocab_size(), model.config.d_w)];
    out.extend(g.conv_w.iter().cloned());
    out.extend(g.conv_b.iter().cloned());
    out.push(g.w_out.clone());
    out
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

pub fn gradient_check(inst: &Instance) -> GradCheckReport {
    let (_, grads) = inst.model.loss_and_grad(&inst.examples());
    let analytic = flat_gradients(&grads, &inst.model);
    let base_sel = inst.selections(&inst.model);
    let mut report = GradCheckReport::default();
    let mut model = inst.model.clone();
    for (ti, ga) in analytic.iter().enumerate() {
        for c in 0..ga.len() {
            let orig = model.params.tensors_mut()[ti][c];
            model.params.tensors_mut()[ti][c] = orig + FD_STEP;
            let (plus, _) = model.loss_and_grad(&inst.examples());
            let sel_plus = inst.selections(&model);
            model.params.tensors_mut()[ti][c] = orig - FD_STEP;
            let (minus, _) = model.loss_and_grad(&inst.examples());
            let sel_minus = inst.selections(&model);
            model.params.tensors_mut()[ti][c] = orig;
            if sel_plus != base_sel || sel_minus != base_sel {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let rel = relative_error(ga[c], numeric);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((ti, c, ga[c], numeric));
            }
        }
    }
    report
}
