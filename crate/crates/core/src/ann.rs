//! One-shot MLP baseline: a 784 -> H -> 10 rectifier network trained with
//! full-batch Adam on softmax cross-entropy until it overfits exactly one
//! example per class, then used as a frozen feature extractor whose hidden
//! activations feed a cosine w-kNN.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingSpace, ItemKind, Metric};
use crate::error::{Error, Result};
use crate::mnist::IMAGE_PIXELS;
use crate::rng::stream_rng;
use crate::scalar::Real;

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct MlpModel<T: Real> {
    pub hidden: usize,
    /// H x 784, row-major by hidden unit.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    /// 10 x H, row-major by class.
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Real> MlpModel<T> {
    /// Uniform init in +-1/sqrt(fan_in); biases start at zero.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let lim1 = 1.0 / (IMAGE_PIXELS as f64).sqrt();
        let lim2 = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..hidden * IMAGE_PIXELS).map(|_| T::from_f64_c(rng.gen_range(-lim1..lim1))).collect();
        let w2 = (0..N_CLASSES * hidden).map(|_| T::from_f64_c(rng.gen_range(-lim2..lim2))).collect();
        Self { hidden, w1, b1: vec![T::zero(); hidden], w2, b2: vec![T::zero(); N_CLASSES] }
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Hidden activations and logits for one input in [0, 1].
    pub fn forward(&self, x: &[T]) -> (Vec<T>, [T; N_CLASSES]) {
        debug_assert_eq!(x.len(), IMAGE_PIXELS);
        let mut hidden = vec![T::zero(); self.hidden];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * IMAGE_PIXELS..(j + 1) * IMAGE_PIXELS];
            let mut acc = self.b1[j];
            for (w, v) in row.iter().zip(x) {
                acc += *w * *v;
            }
            *h = acc.max(T::zero());
        }
        let mut logits = [T::zero(); N_CLASSES];
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &self.w2[c * self.hidden..(c + 1) * self.hidden];
            let mut acc = self.b2[c];
            for (w, h) in row.iter().zip(&hidden) {
                acc += *w * *h;
            }
            *l = acc;
        }
        (hidden, logits)
    }

    fn flatten(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.extend_from_slice(&self.b2);
        p
    }

    fn unflatten(&mut self, p: &[T]) {
        let (h, px) = (self.hidden, IMAGE_PIXELS);
        self.w1.copy_from_slice(&p[..h * px]);
        self.b1.copy_from_slice(&p[h * px..h * px + h]);
        self.w2.copy_from_slice(&p[h * px + h..h * px + h + N_CLASSES * h]);
        self.b2.copy_from_slice(&p[h * px + h + N_CLASSES * h..]);
    }
}

pub fn softmax<T: Real>(logits: &[T; N_CLASSES]) -> [T; N_CLASSES] {
    let max = logits.iter().cloned().fold(logits[0], T::max);
    let mut out = [T::zero(); N_CLASSES];
    let mut sum = T::zero();
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

pub fn cross_entropy<T: Real>(probs: &[T; N_CLASSES], label: u8) -> T {
    let p = probs[label as usize].max(T::from_f64_c(1e-300));
    -p.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "", deserialize = ""))]
pub struct AdamParams<T: Real> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> Default for AdamParams<T> {
    fn default() -> Self {
        let c = T::from_f64_c;
        Self { lr: c(1e-3), beta1: c(0.9), beta2: c(0.999), eps: c(1e-8) }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState<T: Real> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![T::zero(); n], v: vec![T::zero(); n], step: 0 }
    }

    pub fn apply(&mut self, params: &mut [T], grads: &[T], cfg: &AdamParams<T>) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = T::one() - cfg.beta1.powi(t);
        let bias2 = T::one() - cfg.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (T::one() - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (T::one() - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Mean cross-entropy and its gradient over a batch, flattened to match
/// [`MlpModel::flatten`].
pub fn batch_loss_and_grad<T: Real>(model: &MlpModel<T>, batch: &[(Vec<T>, u8)]) -> (f64, f64, Vec<T>) {
    let h = model.hidden;
    let n = batch.len();
    let inv_n = T::from_f64_c(1.0 / n as f64);
    let mut grad = vec![T::zero(); model.n_params()];
    let (gw1, rest) = grad.split_at_mut(h * IMAGE_PIXELS);
    let (gb1, rest) = rest.split_at_mut(h);
    let (gw2, gb2) = rest.split_at_mut(N_CLASSES * h);
    let mut loss = 0.0f64;
    let mut correct = 0usize;
    for (x, label) in batch {
        let (hidden, logits) = model.forward(x);
        let probs = softmax(&logits);
        loss += cross_entropy(&probs, *label).to_f64_c();
        let pred = (0..N_CLASSES).max_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap()).unwrap();
        if pred == *label as usize {
            correct += 1;
        }
        let mut dlogits = [T::zero(); N_CLASSES];
        for c in 0..N_CLASSES {
            let y = if c == *label as usize { T::one() } else { T::zero() };
            dlogits[c] = (probs[c] - y) * inv_n;
        }
        for c in 0..N_CLASSES {
            let d = dlogits[c];
            gb2[c] += d;
            let row = &mut gw2[c * h..(c + 1) * h];
            for (g, hv) in row.iter_mut().zip(&hidden) {
                *g += d * *hv;
            }
        }
        for j in 0..h {
            if hidden[j] <= T::zero() {
                continue;
            }
            let mut dh = T::zero();
            for c in 0..N_CLASSES {
                dh += dlogits[c] * model.w2[c * h + j];
            }
            gb1[j] += dh;
            let row = &mut gw1[j * IMAGE_PIXELS..(j + 1) * IMAGE_PIXELS];
            for (g, xv) in row.iter_mut().zip(x) {
                *g += dh * *xv;
            }
        }
    }
    (loss / n as f64, correct as f64 / n as f64, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneShotOutcome {
    pub converged: bool,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub final_accuracy: f64,
}

/// Full-batch Adam on ten images (one per class) until 10/10 training
/// accuracy and loss < 1e-3, or `max_epochs`. Non-convergence is reported,
/// not fatal.
pub fn train_one_shot<T: Real>(
    model: &mut MlpModel<T>,
    examples: &[(Vec<T>, u8)],
    max_epochs: usize,
    adam: &AdamParams<T>,
) -> Result<OneShotOutcome> {
    let mut counts = [0usize; N_CLASSES];
    for (_, label) in examples {
        counts[*label as usize] += 1;
    }
    if let Some(class) = (0..N_CLASSES).find(|&c| counts[c] != 1) {
        return Err(Error::OneShotClassCount { class: class as u8, count: counts[class] });
    }
    let mut params = model.flatten();
    let mut state = AdamState::new(params.len());
    let mut outcome = OneShotOutcome { converged: false, epochs_run: 0, final_loss: f64::INFINITY, final_accuracy: 0.0 };
    for epoch in 0..max_epochs {
        let (loss, accuracy, grad) = batch_loss_and_grad(model, examples);
        outcome.final_loss = loss;
        outcome.final_accuracy = accuracy;
        outcome.epochs_run = epoch;
        if accuracy == 1.0 && loss < 1e-3 {
            outcome.converged = true;
            return Ok(outcome);
        }
        state.apply(&mut params, &grad, adam);
        model.unflatten(&params);
    }
    let (loss, accuracy, _) = batch_loss_and_grad(model, examples);
    outcome.final_loss = loss;
    outcome.final_accuracy = accuracy;
    outcome.epochs_run = max_epochs;
    outcome.converged = accuracy == 1.0 && loss < 1e-3;
    Ok(outcome)
}

/// Hidden-layer activations of every image as an embedding space (cosine).
pub fn embed_hidden<T: Real>(model: &MlpModel<T>, images: &[Vec<T>], labels: Vec<u8>) -> EmbeddingSpace<T> {
    use rayon::prelude::*;
    let rows: Vec<Vec<T>> = images.par_iter().map(|x| model.forward(x).0).collect();
    EmbeddingSpace::from_rows(rows, labels, Metric::Cosine, ItemKind::HiddenActivation)
}

pub fn normalize_image<T: Real>(img: &[u8; IMAGE_PIXELS]) -> Vec<T> {
    img.iter().map(|&p| T::from_f64_c(p as f64 / 255.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Ann,
    Bnn,
}

/// Comparison-table parameter counts: `ann` counts the input-to-hidden block
/// including biases (785 H); `bnn` follows n^2 + 3n.
pub fn count_params(kind: ParamKind, size: u64) -> u64 {
    match kind {
        ParamKind::Ann => 785 * size,
        ParamKind::Bnn => size * size + 3 * size,
    }
}

/// Every trainable parameter of the MLP, output layer included.
pub fn ann_full_param_count(hidden: u64) -> u64 {
    795 * hidden + 10
}
