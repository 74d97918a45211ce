//! Minimal trainable CNN engine.
//!
//! Layers: 3x3 valid convolution (stride 1), batch normalization, ReLU,
//! 2x2 average/max pooling (stride 2, floor), inverted dropout, dense, and
//! softmax. Backpropagation is hand-rolled, optimization is Adam, and the
//! whole training loop is single-threaded and deterministic for a fixed
//! seed. Activations are HWC row-major; all arithmetic is f64 so analytic
//! gradients can be checked against central finite differences.

mod layers;
mod siamese;
#[cfg(test)]
mod tests;
mod train;

pub use layers::ParamView;
pub use siamese::{SiameseNetwork, SiamesePairBatch};
pub use train::{evaluate_loss, predict_class, predict_scalar, train, EpochStats, Loss, Targets, TrainConfig};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::EncodedImage;
use crate::error::{Error, Result};
use crate::seed;
use layers::{LayerCache, LayerGrads, LayerState};

/// Tensor shape: spatial height x width x channels, or flat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Hwc { h: usize, w: usize, c: usize },
    Flat { len: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Hwc { h, w, c } => h * w * c,
            Shape::Flat { len } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense row-major value block with a shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if shape.len() != data.len() {
            return Err(Error::ShapeMismatch {
                layer: "input".into(),
                details: format!("shape holds {} values, data has {}", shape.len(), data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            data: vec![0.0; shape.len()],
            shape,
        }
    }

    /// Single-channel image tensor (h, w, 1).
    pub fn from_image(img: &EncodedImage) -> Self {
        Tensor {
            shape: Shape::Hwc {
                h: img.side(),
                w: img.side(),
                c: 1,
            },
            data: img.pixels().to_vec(),
        }
    }

    /// Stack same-sized images along the channel axis: (h, w, C).
    pub fn from_channels(imgs: &[&EncodedImage]) -> Result<Self> {
        if imgs.is_empty() {
            return Err(Error::InvalidArgument("no channels given".into()));
        }
        let side = imgs[0].side();
        if imgs.iter().any(|im| im.side() != side) {
            return Err(Error::InvalidArgument("channel images differ in size".into()));
        }
        let c = imgs.len();
        let mut data = vec![0.0; side * side * c];
        for (ch, im) in imgs.iter().enumerate() {
            for (px, &v) in im.pixels().iter().enumerate() {
                data[px * c + ch] = v;
            }
        }
        Ok(Tensor {
            shape: Shape::Hwc {
                h: side,
                w: side,
                c,
            },
            data,
        })
    }
}

/// A batch of equally shaped tensors, stored contiguously.
#[derive(Clone, Debug)]
pub(crate) struct Batch {
    pub shape: Shape,
    pub count: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn from_tensors(tensors: &[&Tensor]) -> Result<Self> {
        let shape = tensors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty batch".into()))?
            .shape;
        let stride = shape.len();
        let mut data = Vec::with_capacity(stride * tensors.len());
        for t in tensors {
            if t.shape != shape {
                return Err(Error::ShapeMismatch {
                    layer: "batch".into(),
                    details: "mixed shapes in one batch".into(),
                });
            }
            data.extend_from_slice(&t.data);
        }
        Ok(Batch {
            shape,
            count: tensors.len(),
            data,
        })
    }

    pub fn zeros(shape: Shape, count: usize) -> Self {
        Batch {
            shape,
            count,
            data: vec![0.0; shape.len() * count],
        }
    }

    pub fn stride(&self) -> usize {
        self.shape.len()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }
}

/// Layer descriptions. Convolutions are fixed at 3x3 valid stride 1, pools
/// at 2x2 stride 2, matching the output-shape chain 28 -> 26 -> 13 -> 11 ->
/// 5 -> 3 of the reference architecture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { filters: usize },
    BatchNorm { eps: f64, momentum: f64 },
    Relu,
    AvgPool,
    MaxPool,
    Dropout { rate: f64 },
    Dense { units: usize },
    Softmax,
}

/// Weight initialization scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightInit {
    /// Uniform on [-sqrt(6/fan_in), sqrt(6/fan_in)].
    HeUniform,
    /// Zero-mean normal with the given standard deviation.
    Normal { std: f64 },
}

/// A layer stack with its trainable state.
#[derive(Clone, Debug)]
pub struct Network {
    input_shape: Shape,
    specs: Vec<LayerSpec>,
    layers: Vec<LayerState>,
    shapes: Vec<Shape>,
    dropout_rng: ChaCha8Rng,
}

impl Network {
    /// Initialize a network for the given input shape. Layer output shapes
    /// are inferred and validated; weights are drawn from `init` with a
    /// stream seeded per layer.
    pub fn init(
        specs: &[LayerSpec],
        input_shape: Shape,
        init: WeightInit,
        seed: u64,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("empty layer stack".into()));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut shapes = Vec::with_capacity(specs.len());
        let mut shape = input_shape;
        for (idx, spec) in specs.iter().enumerate() {
            let mut rng = seed::rng(seed::mix(seed, idx as u64));
            let layer = LayerState::init(spec, shape, init, &mut rng, idx)?;
            shape = layer.output_shape(shape)?;
            layers.push(layer);
            shapes.push(shape);
        }
        Ok(Network {
            input_shape,
            specs: specs.to_vec(),
            layers,
            shapes,
            dropout_rng: seed::rng(seed::mix(seed, 0xd09)),
        })
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn output_shape(&self) -> Shape {
        *self.shapes.last().unwrap()
    }

    /// Output shape after every layer, in order.
    pub fn shape_chain(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    /// Trainable parameter count (batch-norm running stats excluded).
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Reset the dropout mask stream (training determinism).
    pub fn reseed_dropout(&mut self, seed: u64) {
        self.dropout_rng = seed::rng(seed);
    }

    /// Inference forward pass for one tensor: batch-norm uses running
    /// statistics, dropout is the identity.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        if input.shape != self.input_shape {
            return Err(Error::ShapeMismatch {
                layer: "input".into(),
                details: format!(
                    "expected {:?}, got {:?}",
                    self.input_shape, input.shape
                ),
            });
        }
        let mut batch = Batch {
            shape: input.shape,
            count: 1,
            data: input.data.clone(),
        };
        for (layer, &out_shape) in self.layers.iter().zip(&self.shapes) {
            batch = layer.forward_inference(&batch, out_shape);
        }
        Ok(Tensor {
            shape: batch.shape,
            data: batch.data,
        })
    }

    /// Training forward pass over a batch; returns the output batch and the
    /// per-layer caches backward needs. Batch statistics update the
    /// batch-norm running estimates; dropout draws fresh masks.
    pub(crate) fn forward_training(&mut self, input: Batch) -> Result<(Batch, Vec<LayerCache>)> {
        if input.shape != self.input_shape {
            return Err(Error::ShapeMismatch {
                layer: "input".into(),
                details: format!("expected {:?}, got {:?}", self.input_shape, input.shape),
            });
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut batch = input;
        for (idx, layer) in self.layers.iter_mut().enumerate() {
            let out_shape = self.shapes[idx];
            let (out, cache) = layer.forward_training(&batch, out_shape, &mut self.dropout_rng);
            caches.push(cache);
            batch = out;
        }
        Ok((batch, caches))
    }

    /// Backpropagate `grad` (d loss / d output) through layers
    /// `0..limit`, consuming the caches of a training forward pass.
    /// Returns per-layer parameter gradients and the input gradient.
    pub(crate) fn backward_from(
        &self,
        caches: &[LayerCache],
        grad: Batch,
        limit: usize,
    ) -> Result<(Vec<LayerGrads>, Batch)> {
        if caches.len() != self.layers.len() {
            return Err(Error::MissingForwardCache);
        }
        let mut grads = vec![LayerGrads::None; self.layers.len()];
        let mut upstream = grad;
        for idx in (0..limit).rev() {
            let (g, down) = self.layers[idx].backward(&caches[idx], upstream)?;
            grads[idx] = g;
            upstream = down;
        }
        Ok((grads, upstream))
    }

    pub(crate) fn backward(
        &self,
        caches: &[LayerCache],
        grad: Batch,
    ) -> Result<(Vec<LayerGrads>, Batch)> {
        self.backward_from(caches, grad, self.layers.len())
    }

    /// Replace every batch-norm layer's running statistics with the exact
    /// population statistics of `images` (inference-mode activations,
    /// biased variance), layer by layer from the input side. Removes the
    /// momentum wobble of the training-time running estimates.
    pub fn refresh_batch_norm(&mut self, images: &[Tensor]) -> Result<()> {
        if images.is_empty() {
            return Err(Error::InvalidArgument(
                "batch-norm refresh needs images".into(),
            ));
        }
        for target in 0..self.layers.len() {
            if !matches!(self.layers[target], LayerState::BatchNorm(_)) {
                continue;
            }
            // Accumulate per-channel mean and variance of the inputs that
            // reach this layer under the already-refreshed prefix.
            let mut count = 0.0_f64;
            let mut sum: Vec<f64> = Vec::new();
            let mut sum_sq: Vec<f64> = Vec::new();
            for img in images {
                let mut batch = Batch {
                    shape: img.shape,
                    count: 1,
                    data: img.data.clone(),
                };
                for (layer, &out_shape) in self.layers.iter().zip(&self.shapes).take(target) {
                    batch = layer.forward_inference(&batch, out_shape);
                }
                let channels = match batch.shape {
                    Shape::Hwc { c, .. } => c,
                    Shape::Flat { len } => len,
                };
                if sum.is_empty() {
                    sum = vec![0.0; channels];
                    sum_sq = vec![0.0; channels];
                }
                for chunk in batch.data.chunks_exact(channels) {
                    for (ch, &v) in chunk.iter().enumerate() {
                        sum[ch] += v;
                        sum_sq[ch] += v * v;
                    }
                }
                count += (batch.data.len() / channels) as f64;
            }
            if let LayerState::BatchNorm(bn) = &mut self.layers[target] {
                for ch in 0..sum.len() {
                    let mean = sum[ch] / count;
                    bn.running_mean[ch] = mean;
                    bn.running_var[ch] = (sum_sq[ch] / count - mean * mean).max(0.0);
                }
            }
        }
        Ok(())
    }

    /// Views of every trainable parameter array, in serialization order.
    pub fn param_views(&self) -> Vec<ParamView<'_>> {
        self.layers.iter().flat_map(|l| l.param_views()).collect()
    }

    /// Mutable parameter arrays in the same order as [`Self::param_views`].
    pub(crate) fn param_arrays_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.param_arrays_mut())
            .collect()
    }

    /// Flatten all parameters (including batch-norm running stats) in
    /// serialization order; used by the model store.
    pub fn serialize_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            layer.serialize_params(&mut out);
        }
        out
    }

    /// Load parameters written by [`Self::serialize_params`].
    pub fn load_params(&mut self, params: &[f64]) -> Result<()> {
        let mut offset = 0usize;
        for layer in &mut self.layers {
            offset = layer.load_params(params, offset)?;
        }
        if offset != params.len() {
            return Err(Error::Data(format!(
                "parameter stream has {} values, network consumes {offset}",
                params.len()
            )));
        }
        Ok(())
    }

    /// L2 norms of each layer's parameters, for diagnostics.
    pub fn layer_norms(&self) -> String {
        let mut parts = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(norm) = layer.param_norm() {
                parts.push(format!("layer{i}={norm:.3e}"));
            }
        }
        parts.join(", ")
    }
}

/// The reference architecture's convolutional trunk: three conv blocks whose
/// output chain is 26x26x8 -> 13x13x8 -> 11x11x16 -> 5x5x16 -> 3x3x32.
pub fn conv_trunk() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv { filters: 8 },
        LayerSpec::BatchNorm {
            eps: 1e-5,
            momentum: 0.9,
        },
        LayerSpec::Relu,
        LayerSpec::AvgPool,
        LayerSpec::Conv { filters: 16 },
        LayerSpec::BatchNorm {
            eps: 1e-5,
            momentum: 0.9,
        },
        LayerSpec::Relu,
        LayerSpec::AvgPool,
        LayerSpec::Conv { filters: 32 },
        LayerSpec::BatchNorm {
            eps: 1e-5,
            momentum: 0.9,
        },
        LayerSpec::Relu,
    ]
}
