//! Softmax linear probe trained with plain minibatch SGD on frozen embeddings.
//!
//! Objective for a batch of size `B`:
//!
//! ```text
//! L(W, b) = (1/B) Σ -log softmax(W x + b)[y] + (wd/2) ||W||_F^2
//! ```
//!
//! The bias is not decayed. Parameters start at zero, so a seed only changes
//! the shuffle order. Stored embeddings are `f32`; all arithmetic here is `f64`.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embs::SplitView;
use crate::rng::{substream, Purpose};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid train config: {0}")]
    Config(String),
    #[error("training view is empty")]
    EmptyView,
    #[error("training view holds a single class ({0}); need at least two")]
    SingleClass(u32),
    #[error("label {label} out of range for {class_count} classes")]
    Label { label: u32, class_count: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("non-finite parameters at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("bad model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    #[default]
    None,
    /// Scale every vector to unit L2 norm. Zero vectors pass through unchanged.
    L2PerVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub wd: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub normalize: Normalize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            wd: 0.0,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            normalize: Normalize::None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(ProbeError::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.wd.is_finite() && self.wd >= 0.0) {
            return Err(ProbeError::Config(format!("wd must be >= 0, got {}", self.wd)));
        }
        if self.epochs == 0 {
            return Err(ProbeError::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ProbeError::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// `class_count x dim` weights (row-major) plus a bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub class_count: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn init_model(dim: usize, class_count: usize) -> LinearModel {
    assert!(dim >= 1 && class_count >= 2, "dim >= 1 and class_count >= 2");
    LinearModel {
        class_count,
        dim,
        weights: vec![0.0; class_count * dim],
        bias: vec![0.0; class_count],
    }
}

impl LinearModel {
    pub fn weight_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.dim..(c + 1) * self.dim]
    }

    pub fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.bias[c] + self.weight_row(c).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict_one(&self, x: &[f64]) -> u32 {
        let mut logits = vec![0.0; self.class_count];
        self.logits_into(x, &mut logits);
        argmax(&logits) as u32
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    /// Mean cross-entropy over `features` (row-major, `dim` wide) plus the
    /// weight-decay term.
    pub fn objective(&self, features: &[f64], labels: &[u32], wd: f64) -> Result<f64, ProbeError> {
        Ok(loss_and_grad(self, features, labels, wd)?.loss)
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<(), ProbeError> {
        let mut buf = Vec::with_capacity(16 + 8 * (self.weights.len() + self.bias.len()));
        buf.extend_from_slice(b"LINM");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(self.class_count as u32).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in self.weights.iter().chain(&self.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut source: R) -> Result<Self, ProbeError> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[..4] != b"LINM" {
            return Err(ProbeError::Format("missing LINM header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        if word(4) != 1 {
            return Err(ProbeError::Format(format!("unsupported version {}", word(4))));
        }
        let (class_count, dim) = (word(8), word(12));
        if class_count < 2 || dim == 0 {
            return Err(ProbeError::Format(format!("bad shape {class_count}x{dim}")));
        }
        let count = class_count as u128 * (dim as u128 + 1);
        if bytes.len() as u128 != 16 + 8 * count {
            return Err(ProbeError::Format(format!(
                "expected {} bytes, got {}",
                16 + 8 * count,
                bytes.len()
            )));
        }
        let mut values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let weights: Vec<f64> = values.by_ref().take(class_count * dim).collect();
        let bias: Vec<f64> = values.collect();
        let model = LinearModel { class_count, dim, weights, bias };
        if !model.is_finite() {
            return Err(ProbeError::Format("non-finite parameter".into()));
        }
        Ok(model)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Loss and gradient of the regularized objective on one batch.
///
/// `features` is `labels.len() x model.dim`, row-major.
pub fn loss_and_grad(model: &LinearModel, features: &[f64], labels: &[u32], wd: f64) -> Result<LossGrad, ProbeError> {
    let batch = labels.len();
    if batch == 0 {
        return Err(ProbeError::Shape("empty batch".into()));
    }
    if features.len() != batch * model.dim {
        return Err(ProbeError::Shape(format!(
            "{} feature values for {batch} examples of dim {}",
            features.len(),
            model.dim
        )));
    }
    if !wd.is_finite() || features.iter().any(|v| !v.is_finite()) || !model.is_finite() {
        return Err(ProbeError::NonFiniteInput);
    }
    let k = model.class_count;
    let dim = model.dim;
    let mut gw = vec![0.0; k * dim];
    let mut gb = vec![0.0; k];
    let mut probs = vec![0.0; k];
    let mut loss = 0.0;
    for (x, &y) in features.chunks_exact(dim).zip(labels) {
        let y = y as usize;
        if y >= k {
            return Err(ProbeError::Label { label: y as u32, class_count: k });
        }
        model.logits_into(x, &mut probs);
        let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = probs.iter().map(|z| (z - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - probs[y];
        for (c, p) in probs.iter_mut().enumerate() {
            *p = (*p - lse).exp();
            let delta = *p - if c == y { 1.0 } else { 0.0 };
            gb[c] += delta;
            for (g, v) in gw[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                *g += delta * v;
            }
        }
    }
    let inv = 1.0 / batch as f64;
    gw.iter_mut().zip(&model.weights).for_each(|(g, w)| *g = *g * inv + wd * w);
    gb.iter_mut().for_each(|g| *g *= inv);
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    Ok(LossGrad {
        loss: loss * inv + 0.5 * wd * sq,
        weights: gw,
        bias: gb,
    })
}

/// Copies a view's embeddings into an `f64` matrix, applying `normalize`.
pub fn features(view: &SplitView<'_>, normalize: Normalize) -> Vec<f64> {
    let dim = view.dataset().dim();
    let mut out = Vec::with_capacity(view.len() * dim);
    for k in 0..view.len() {
        let start = out.len();
        out.extend(view.row(k).iter().map(|&v| v as f64));
        if normalize == Normalize::L2PerVector {
            let n = out[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                out[start..].iter_mut().for_each(|v| *v /= n);
            }
        }
    }
    out
}

/// Trains from zero on `view` for `config.epochs` epochs of shuffled
/// minibatches. The final partial batch is kept and averaged over its own size.
pub fn train(view: &SplitView<'_>, config: &TrainConfig) -> Result<LinearModel, ProbeError> {
    config.validate()?;
    if view.is_empty() {
        return Err(ProbeError::EmptyView);
    }
    let ds = view.dataset();
    let labels = view.labels();
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(ProbeError::SingleClass(first));
    }
    let dim = ds.dim();
    let feats = features(view, config.normalize);
    let mut model = init_model(dim, ds.class_count() as usize);

    let n = view.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_x = Vec::with_capacity(config.batch_size * dim);
    let mut batch_y = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        let mut rng = substream(config.seed, Purpose::Shuffle, epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(&feats[i * dim..(i + 1) * dim]);
                batch_y.push(labels[i]);
            }
            let g = loss_and_grad(&model, &batch_x, &batch_y, config.wd)
                .map_err(|_| ProbeError::Diverged { epoch, batch })?;
            model.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= config.lr * d);
            model.bias.iter_mut().zip(&g.bias).for_each(|(b, d)| *b -= config.lr * d);
            if !model.is_finite() {
                return Err(ProbeError::Diverged { epoch, batch });
            }
        }
    }
    Ok(model)
}

pub fn predict(model: &LinearModel, view: &SplitView<'_>) -> Vec<u32> {
    predict_with(model, view, Normalize::None)
}

/// Predicts with the same input normalization used in training.
pub fn predict_with(model: &LinearModel, view: &SplitView<'_>, normalize: Normalize) -> Vec<u32> {
    assert_eq!(model.dim, view.dataset().dim(), "model/view dim mismatch");
    features(view, normalize)
        .chunks_exact(model.dim)
        .map(|x| model.predict_one(x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embs::{EmbeddingDataset, Split};

    #[test]
    fn zero_model_loss_is_log_k() {
        let m = init_model(4, 2);
        assert_eq!(m.weights, vec![0.0; 8]);
        let g = loss_and_grad(&m, &[1.0, -2.0, 0.5, 3.0], &[1], 0.0).unwrap();
        assert!((g.loss - 2f64.ln()).abs() < 1e-15);
        let m3 = init_model(2, 3);
        let g = loss_and_grad(&m3, &[1.0, 1.0], &[2], 0.0).unwrap();
        assert!((g.loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_model_gradient_closed_form() {
        let x = [2.0, -4.0, 6.0];
        let g = loss_and_grad(&init_model(3, 2), &x, &[0], 0.0).unwrap();
        assert_eq!(g.weights, vec![-1.0, 2.0, -3.0, 1.0, -2.0, 3.0]);
        assert_eq!(g.bias, vec![-0.5, 0.5]);
    }

    #[test]
    fn weight_decay_gradient_term() {
        let mut m = init_model(2, 2);
        m.weights = vec![1.0, -2.0, 0.5, 3.0];
        let x = [0.3, -0.7];
        let a = loss_and_grad(&m, &x, &[1], 0.0).unwrap();
        let b = loss_and_grad(&m, &x, &[1], 0.1).unwrap();
        for ((ga, gb), w) in a.weights.iter().zip(&b.weights).zip(&m.weights) {
            assert!((gb - ga - 0.1 * w).abs() < 1e-15);
        }
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = init_model(1, 2);
        assert!(matches!(loss_and_grad(&m, &[f64::NAN], &[0], 0.0), Err(ProbeError::NonFiniteInput)));
        assert!(matches!(loss_and_grad(&m, &[], &[], 0.0), Err(ProbeError::Shape(_))));
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ProbeError::Config(_))));
    }

    #[test]
    fn single_class_view_rejected() {
        let d = EmbeddingDataset::new(1, 2, 1, vec![0.0, 1.0], vec![1, 1], vec![0, 0], vec![Split::Train; 2]).unwrap();
        let err = train(&d.split_view(Split::Train), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ProbeError::SingleClass(1)));
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let d = EmbeddingDataset::new(2, 3, 1, vec![1.0, 2.0, -1.0, 0.5], vec![0, 2], vec![0, 0], vec![Split::Test; 2]).unwrap();
        assert_eq!(predict(&init_model(2, 3), &d.split_view(Split::Test)), vec![0, 0]);
    }

    #[test]
    fn divergence_is_reported() {
        let d = EmbeddingDataset::new(
            1,
            2,
            1,
            vec![3.0e38, -3.0e38],
            vec![0, 1],
            vec![0, 0],
            vec![Split::Train; 2],
        )
        .unwrap();
        let cfg = TrainConfig { lr: 1e300, ..Default::default() };
        assert!(matches!(train(&d.split_view(Split::Train), &cfg), Err(ProbeError::Diverged { epoch: 0, .. })));
    }

    #[test]
    fn linm_round_trip() {
        let m = LinearModel { class_count: 2, dim: 2, weights: vec![1.0, -0.25, 3.5, 1e-300], bias: vec![0.1, -0.1] };
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(LinearModel::read_from(&buf[..]).unwrap(), m);
        assert!(LinearModel::read_from(&buf[..20]).is_err());
    }

    #[test]
    fn l2_normalization_yields_unit_vectors() {
        let d = EmbeddingDataset::new(
            2,
            2,
            1,
            vec![3.0, 4.0, 0.0, 0.0, -1e-3, 2e-3],
            vec![0, 1, 0],
            vec![0; 3],
            vec![Split::Train; 3],
        )
        .unwrap();
        let f = features(&d.split_view(Split::Train), Normalize::L2PerVector);
        assert_eq!(&f[..2], &[0.6, 0.8]);
        assert_eq!(&f[2..4], &[0.0, 0.0]);
        assert!(((f[4] * f[4] + f[5] * f[5]).sqrt() - 1.0).abs() < 1e-9);
    }
}
