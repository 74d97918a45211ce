//! Deterministic mini-batch training with Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::layers::{LayerGrads, LayerState};
use super::{Batch, LayerSpec, Network, Shape, Tensor};

/// Loss attached to the network head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Mean squared error on a scalar (or small vector) output.
    Mse,
    /// Fused softmax + cross entropy; the stack must end in `Softmax`.
    SoftmaxCrossEntropy,
}

/// Training targets, matching the loss.
#[derive(Clone, Debug)]
pub enum Targets {
    Scalar(Vec<f64>),
    Class(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Scalar(v) => v.len(),
            Targets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Scalar(v) => Targets::Scalar(idx.iter().map(|&i| v[i]).collect()),
            Targets::Class(v) => Targets::Class(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Adam hyperparameters and loop configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to every weight gradient (the deep-learning-toolbox
    /// default the reference experiments ran with).
    pub weight_decay: f64,
    /// Cosine-anneal the learning rate to 1% of `lr` across the run.
    pub cosine_lr: bool,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
            cosine_lr: true,
            batch_size: 64,
            epochs: 30,
            loss: Loss::Mse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "learning rate must be >= 0 and batch size >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch loss record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

struct Adam {
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(net: &mut Network) -> Self {
        let sizes: Vec<usize> = net.param_arrays_mut().iter().map(|p| p.len()).collect();
        Adam {
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[LayerGrads], cfg: &TrainConfig, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        let grad_arrays: Vec<&[f64]> = grads.iter().flat_map(LayerState::grad_arrays).collect();
        let mut params = net.param_arrays_mut();
        debug_assert_eq!(grad_arrays.len(), params.len());
        for (slot, (param, grad)) in params.iter_mut().zip(grad_arrays).enumerate() {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for i in 0..param.len() {
                let g = grad[i] + cfg.weight_decay * param[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
    }
}

/// Learning rate at `epoch` under the configured schedule.
pub(crate) fn epoch_lr(cfg: &TrainConfig, epoch: usize) -> f64 {
    if !cfg.cosine_lr || cfg.epochs <= 1 {
        return cfg.lr;
    }
    let progress = epoch as f64 / (cfg.epochs - 1) as f64;
    let floor = 0.01;
    cfg.lr * (floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
}

/// Loss value and gradient at the network output for one batch.
///
/// For `SoftmaxCrossEntropy` the returned gradient is with respect to the
/// softmax *input* (the fused form), and backpropagation starts below the
/// trailing softmax layer.
pub(crate) fn loss_and_grad(
    loss: Loss,
    output: &Batch,
    targets: &Targets,
) -> Result<(f64, Batch)> {
    let b = output.count as f64;
    match (loss, targets) {
        (Loss::Mse, Targets::Scalar(y)) => {
            let stride = output.stride();
            if stride != 1 {
                return Err(Error::ShapeMismatch {
                    layer: "loss".into(),
                    details: format!("MSE on scalar targets needs 1 output, got {stride}"),
                });
            }
            let mut grad = Batch::zeros(output.shape, output.count);
            let mut total = 0.0;
            for i in 0..output.count {
                let diff = output.data[i] - y[i];
                total += diff * diff;
                grad.data[i] = 2.0 * diff / b;
            }
            Ok((total / b, grad))
        }
        (Loss::SoftmaxCrossEntropy, Targets::Class(labels)) => {
            let stride = output.stride();
            let mut grad = Batch::zeros(output.shape, output.count);
            let mut total = 0.0;
            for i in 0..output.count {
                let probs = output.sample(i);
                let label = labels[i];
                if label >= stride {
                    return Err(Error::Data(format!(
                        "class label {label} outside 0..{stride}"
                    )));
                }
                total += -(probs[label].max(1e-300)).ln();
                let dst = &mut grad.data[i * stride..(i + 1) * stride];
                for k in 0..stride {
                    let onehot = if k == label { 1.0 } else { 0.0 };
                    dst[k] = (probs[k] - onehot) / b;
                }
            }
            Ok((total / b, grad))
        }
        _ => Err(Error::InvalidArgument(
            "loss and target kinds do not match".into(),
        )),
    }
}

fn gather_batch(images: &[Tensor], idx: &[usize]) -> Result<Batch> {
    let refs: Vec<&Tensor> = idx.iter().map(|&i| &images[i]).collect();
    Batch::from_tensors(&refs)
}

/// Average loss over a dataset in inference mode (running batch-norm stats,
/// no dropout).
pub fn evaluate_loss(
    net: &Network,
    images: &[Tensor],
    targets: &Targets,
    loss: Loss,
) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for (i, img) in images.iter().enumerate() {
        let out = net.infer(img)?;
        let single = Batch {
            shape: out.shape,
            count: 1,
            data: out.data,
        };
        let one = targets.gather(&[i]);
        let (l, _) = loss_and_grad(loss, &single, &one)?;
        total += l;
    }
    Ok(total / images.len() as f64)
}

/// Train a network with shuffled mini-batch Adam.
///
/// Fully deterministic for a fixed `cfg.seed`: the shuffle order, dropout
/// masks, and update order are all derived from it. Aborts with diagnostics
/// if the loss goes non-finite.
pub fn train(
    net: &mut Network,
    images: &[Tensor],
    targets: &Targets,
    validation: Option<(&[Tensor], &Targets)>,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if images.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} images vs {} targets",
            images.len(),
            targets.len()
        )));
    }
    if cfg.loss == Loss::SoftmaxCrossEntropy
        && !matches!(net.specs().last(), Some(LayerSpec::Softmax))
    {
        return Err(Error::InvalidArgument(
            "softmax cross entropy needs a trailing softmax layer".into(),
        ));
    }

    net.reseed_dropout(seed::mix(cfg.seed, 0xd0));
    let mut adam = Adam::new(net);
    let mut history = Vec::with_capacity(cfg.epochs);
    let n = images.len();
    // With a validation set the returned network is chosen by validation
    // loss between the best per-epoch checkpoint and the tail weight
    // average (the mean over the cosine-annealed final quarter of epochs).
    let mut best: Option<(f64, Vec<f64>)> = None;
    let swa_start = cfg.epochs - cfg.epochs / 4;
    let mut swa_sum: Vec<f64> = Vec::new();
    let mut swa_count = 0.0_f64;

    for epoch in 0..cfg.epochs {
        // Deterministic shuffle per epoch.
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(seed::mix(cfg.seed, seed::SHUFFLE_STREAM + epoch as u64));
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = gather_batch(images, chunk)?;
            let batch_targets = targets.gather(chunk);
            let (output, caches) = net.forward_training(batch)?;
            let (loss, grad) = loss_and_grad(cfg.loss, &output, &batch_targets)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    norms: net.layer_norms(),
                });
            }
            epoch_loss += loss * chunk.len() as f64;

            // Fused softmax-CE: start below the softmax layer.
            let limit = match cfg.loss {
                Loss::SoftmaxCrossEntropy => net.specs().len() - 1,
                Loss::Mse => net.specs().len(),
            };
            let (grads, _) = net.backward_from(&caches, grad, limit)?;
            adam.step(net, &grads, cfg, epoch_lr(cfg, epoch));
        }

        if validation.is_some() && epoch >= swa_start {
            let params = net.serialize_params();
            if swa_sum.is_empty() {
                swa_sum = params;
            } else {
                for (acc, p) in swa_sum.iter_mut().zip(&params) {
                    *acc += p;
                }
            }
            swa_count += 1.0;
        }

        let val_loss = match validation {
            Some((vi, vt)) => {
                let loss = evaluate_loss(net, vi, vt, cfg.loss)?;
                if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                    best = Some((loss, net.serialize_params()));
                }
                Some(loss)
            }
            None => None,
        };
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n as f64,
            val_loss,
        });
    }

    let refresh =
        |net: &mut Network| -> Result<()> {
            if net
                .specs()
                .iter()
                .any(|s| matches!(s, LayerSpec::BatchNorm { .. }))
            {
                net.refresh_batch_norm(images)?;
            }
            Ok(())
        };
    match (validation, best) {
        (Some((vi, vt)), Some((_, best_params))) => {
            // Re-score both candidates with refreshed batch-norm statistics.
            net.load_params(&best_params)?;
            refresh(net)?;
            let best_loss = evaluate_loss(net, vi, vt, cfg.loss)?;
            if swa_count > 0.0 {
                let averaged: Vec<f64> = swa_sum.iter().map(|&s| s / swa_count).collect();
                let mut swa_net = net.clone();
                swa_net.load_params(&averaged)?;
                refresh(&mut swa_net)?;
                let swa_loss = evaluate_loss(&swa_net, vi, vt, cfg.loss)?;
                if swa_loss < best_loss {
                    *net = swa_net;
                }
            }
        }
        _ => {
            // Inference uses running batch-norm statistics; replace the
            // noisy training-time estimates with exact ones.
            refresh(net)?;
        }
    }
    Ok(history)
}

/// Scalar predictions (network output unit scale) for a batch of images.
pub fn predict_scalar(net: &Network, images: &[Tensor]) -> Result<Vec<f64>> {
    images
        .iter()
        .map(|img| {
            let out = net.infer(img)?;
            if out.shape != (Shape::Flat { len: 1 }) {
                return Err(Error::ShapeMismatch {
                    layer: "output".into(),
                    details: format!("expected one output unit, got {:?}", out.shape),
                });
            }
            Ok(out.data[0])
        })
        .collect()
}

/// Class predictions: argmax plus the full probability vector.
pub fn predict_class(net: &Network, images: &[Tensor]) -> Result<Vec<(usize, Vec<f64>)>> {
    images
        .iter()
        .map(|img| {
            let out = net.infer(img)?;
            let (mut best, mut best_p) = (0usize, f64::NEG_INFINITY);
            for (k, &p) in out.data.iter().enumerate() {
                if p > best_p {
                    best = k;
                    best_p = p;
                }
            }
            Ok((best, out.data))
        })
        .collect()
}
