//! Siamese similarity network.
//!
//! Two copies of one twin stack (hard weight sharing) embed a pair of
//! images; the head scores similarity as `sigmoid(w . |h1 - h2| + b)` and
//! trains with binary cross entropy. The twin is the reference conv trunk
//! with max pooling instead of average pooling, no batch normalization, and
//! a final dense embedding of 28^2 units; all weights start from N(0, 0.01).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::layers::{LayerGrads, LayerState};
use super::train::epoch_lr;
use super::{Batch, EpochStats, LayerSpec, Network, Shape, Tensor, TrainConfig, WeightInit};

/// Embedding width: 28 * 28.
pub const EMBED_DIM: usize = 784;

/// Twin layer stack for the similarity network.
pub fn twin_spec() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv { filters: 8 },
        LayerSpec::Relu,
        LayerSpec::MaxPool,
        LayerSpec::Conv { filters: 16 },
        LayerSpec::Relu,
        LayerSpec::MaxPool,
        LayerSpec::Conv { filters: 32 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: EMBED_DIM },
        LayerSpec::Relu,
    ]
}

/// A batch of image pairs with 0/1 similarity labels.
#[derive(Clone, Debug)]
pub struct SiamesePairBatch {
    pub left: Vec<Tensor>,
    pub right: Vec<Tensor>,
    pub labels: Vec<f64>,
}

impl SiamesePairBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.left.len() != self.right.len() || self.left.len() != self.labels.len() {
            return Err(Error::InvalidArgument(
                "pair batch sides and labels must have equal lengths".into(),
            ));
        }
        if self.labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument("pair labels must be 0 or 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SiameseHistory {
    pub epochs: Vec<EpochStats>,
}

/// Twin network plus L1-distance sigmoid head.
#[derive(Clone, Debug)]
pub struct SiameseNetwork {
    twin: Network,
    head_w: Vec<f64>,
    head_b: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SiameseNetwork {
    pub fn init(input_shape: Shape, seed_value: u64) -> Result<Self> {
        let twin = Network::init(
            &twin_spec(),
            input_shape,
            WeightInit::Normal { std: 0.01 },
            seed_value,
        )?;
        if twin.output_shape() != (Shape::Flat { len: EMBED_DIM }) {
            return Err(Error::ShapeMismatch {
                layer: "twin".into(),
                details: format!("embedding shape {:?}", twin.output_shape()),
            });
        }
        let mut rng = seed::rng(seed::mix(seed_value, 0x51a));
        let head_w = {
            use rand_distr::{Distribution, StandardNormal};
            (0..EMBED_DIM)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.01 * z
                })
                .collect()
        };
        Ok(SiameseNetwork {
            twin,
            head_w,
            head_b: 0.0,
        })
    }

    pub fn twin(&self) -> &Network {
        &self.twin
    }

    pub fn head_bias(&self) -> f64 {
        self.head_b
    }

    pub fn param_count(&self) -> usize {
        self.twin.param_count() + self.head_w.len() + 1
    }

    /// Twin embedding of one image (inference mode).
    pub fn embed(&self, image: &Tensor) -> Result<Vec<f64>> {
        Ok(self.twin.infer(image)?.data)
    }

    /// Similarity score in (0, 1) for a pair; symmetric in its inputs.
    pub fn predict_pair(&self, a: &Tensor, b: &Tensor) -> Result<f64> {
        let ha = self.embed(a)?;
        let hb = self.embed(b)?;
        let mut z = self.head_b;
        for ((&wa, &va), &vb) in self.head_w.iter().zip(&ha).zip(&hb) {
            z += wa * (va - vb).abs();
        }
        Ok(sigmoid(z))
    }

    /// Mean binary cross entropy of a labeled pair set (inference mode).
    pub fn evaluate_loss(&self, pairs: &SiamesePairBatch) -> Result<f64> {
        pairs.validate()?;
        let mut total = 0.0;
        for i in 0..pairs.len() {
            let p = self
                .predict_pair(&pairs.left[i], &pairs.right[i])?
                .clamp(1e-12, 1.0 - 1e-12);
            let y = pairs.labels[i];
            total += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        }
        Ok(total / pairs.len() as f64)
    }

    /// Train on labeled pairs with mini-batch Adam; shared twin weights
    /// receive the sum of both twins' gradients.
    pub fn train(
        &mut self,
        pairs: &SiamesePairBatch,
        validation: Option<&SiamesePairBatch>,
        cfg: &TrainConfig,
    ) -> Result<SiameseHistory> {
        cfg.validate()?;
        pairs.validate()?;
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("empty pair set".into()));
        }
        let n = pairs.len();
        let mut adam_twin = TwinAdam::new(&mut self.twin);
        let mut adam_head_m = vec![0.0; EMBED_DIM + 1];
        let mut adam_head_v = vec![0.0; EMBED_DIM + 1];
        let mut t = 0u64;
        let mut history = Vec::with_capacity(cfg.epochs);

        for epoch in 0..cfg.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = seed::rng(seed::mix(cfg.seed, seed::SHUFFLE_STREAM + epoch as u64));
            for i in (1..n).rev() {
                use rand::Rng;
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }

            let mut epoch_loss = 0.0;
            for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
                let left: Vec<&Tensor> = chunk.iter().map(|&i| &pairs.left[i]).collect();
                let right: Vec<&Tensor> = chunk.iter().map(|&i| &pairs.right[i]).collect();
                let labels: Vec<f64> = chunk.iter().map(|&i| pairs.labels[i]).collect();
                let batch_left = Batch::from_tensors(&left)?;
                let batch_right = Batch::from_tensors(&right)?;

                let (ha, caches_a) = self.twin.forward_training(batch_left)?;
                let (hb, caches_b) = self.twin.forward_training(batch_right)?;

                let bsize = chunk.len();
                let bf = bsize as f64;
                let mut loss = 0.0;
                let mut dz = vec![0.0; bsize];
                for i in 0..bsize {
                    let va = ha.sample(i);
                    let vb = hb.sample(i);
                    let mut z = self.head_b;
                    for k in 0..EMBED_DIM {
                        z += self.head_w[k] * (va[k] - vb[k]).abs();
                    }
                    let p = sigmoid(z).clamp(1e-12, 1.0 - 1e-12);
                    let y = labels[i];
                    loss += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
                    dz[i] = (p - y) / bf;
                }
                loss /= bf;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        norms: self.twin.layer_norms(),
                    });
                }
                epoch_loss += loss * bf;

                // Head gradients and the upstream gradients for both twins.
                let mut dw = vec![0.0; EMBED_DIM];
                let mut db = 0.0;
                let mut ga = Batch::zeros(ha.shape, bsize);
                let mut gb = Batch::zeros(hb.shape, bsize);
                for i in 0..bsize {
                    let va = ha.sample(i);
                    let vb = hb.sample(i);
                    db += dz[i];
                    for k in 0..EMBED_DIM {
                        let diff = va[k] - vb[k];
                        let s = if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        dw[k] += dz[i] * diff.abs();
                        ga.data[i * EMBED_DIM + k] = dz[i] * self.head_w[k] * s;
                        gb.data[i * EMBED_DIM + k] = -dz[i] * self.head_w[k] * s;
                    }
                }

                let (grads_a, _) = self.twin.backward(&caches_a, ga)?;
                let (grads_b, _) = self.twin.backward(&caches_b, gb)?;

                t += 1;
                let lr = epoch_lr(cfg, epoch);
                adam_twin.step(&mut self.twin, &grads_a, &grads_b, cfg, t, lr);

                // Head Adam update.
                let bc1 = 1.0 - cfg.beta1.powi(t as i32);
                let bc2 = 1.0 - cfg.beta2.powi(t as i32);
                for k in 0..=EMBED_DIM {
                    let base = if k < EMBED_DIM { dw[k] } else { db };
                    let p_val = if k < EMBED_DIM { self.head_w[k] } else { self.head_b };
                    let g = base + cfg.weight_decay * p_val;
                    adam_head_m[k] = cfg.beta1 * adam_head_m[k] + (1.0 - cfg.beta1) * g;
                    adam_head_v[k] = cfg.beta2 * adam_head_v[k] + (1.0 - cfg.beta2) * g * g;
                    let m_hat = adam_head_m[k] / bc1;
                    let v_hat = adam_head_v[k] / bc2;
                    let update = lr * m_hat / (v_hat.sqrt() + cfg.eps);
                    if k < EMBED_DIM {
                        self.head_w[k] -= update;
                    } else {
                        self.head_b -= update;
                    }
                }
            }

            let val_loss = match validation {
                Some(v) => Some(self.evaluate_loss(v)?),
                None => None,
            };
            history.push(EpochStats {
                epoch,
                train_loss: epoch_loss / n as f64,
                val_loss,
            });
        }
        Ok(SiameseHistory { epochs: history })
    }

    /// Flatten twin parameters then head parameters.
    pub fn serialize_params(&self) -> Vec<f64> {
        let mut out = self.twin.serialize_params();
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }

    pub fn load_params(&mut self, params: &[f64]) -> Result<()> {
        let twin_len = self.twin.serialize_params().len();
        let want = twin_len + EMBED_DIM + 1;
        if params.len() != want {
            return Err(Error::Data(format!(
                "siamese parameter stream has {} values, expected {want}",
                params.len()
            )));
        }
        self.twin.load_params(&params[..twin_len])?;
        self.head_w.copy_from_slice(&params[twin_len..twin_len + EMBED_DIM]);
        self.head_b = params[want - 1];
        Ok(())
    }
}

/// Adam over the twin parameters, fed the sum of both twins' gradients.
struct TwinAdam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl TwinAdam {
    fn new(net: &mut Network) -> Self {
        let sizes: Vec<usize> = net.param_arrays_mut().iter().map(|p| p.len()).collect();
        TwinAdam {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn step(
        &mut self,
        net: &mut Network,
        grads_a: &[LayerGrads],
        grads_b: &[LayerGrads],
        cfg: &TrainConfig,
        t: u64,
        lr: f64,
    ) {
        let bc1 = 1.0 - cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(t as i32);
        let ga: Vec<&[f64]> = grads_a.iter().flat_map(LayerState::grad_arrays).collect();
        let gb: Vec<&[f64]> = grads_b.iter().flat_map(LayerState::grad_arrays).collect();
        let mut params = net.param_arrays_mut();
        for (slot, param) in params.iter_mut().enumerate() {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for i in 0..param.len() {
                let g = ga[slot][i] + gb[slot][i] + cfg.weight_decay * param[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
    }
}
