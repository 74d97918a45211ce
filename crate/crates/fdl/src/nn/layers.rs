//! Per-layer state, forward passes, and backpropagation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::{Batch, LayerSpec, Shape, WeightInit};

const KERNEL: usize = 3;
const POOL: usize = 2;

/// Read-only view of one parameter array, labeled for serialization.
pub struct ParamView<'a> {
    pub name: &'static str,
    pub values: &'a [f64],
}

#[derive(Clone, Debug)]
pub(crate) struct ConvLayer {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub out_c: usize,
    /// Weights in [ky][kx][ic][oc] order (oc fastest, for the inner loops).
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct BatchNormLayer {
    pub channels: usize,
    pub eps: f64,
    pub momentum: f64,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// Running statistics use the same biased variance estimator as the
    /// training normalization, so momentum = 0 reproduces training
    /// activations at inference exactly.
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct DenseLayer {
    pub out_dim: usize,
    /// Weights in [in][out] order (out fastest).
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) enum LayerState {
    Conv(ConvLayer),
    BatchNorm(BatchNormLayer),
    Relu,
    AvgPool,
    MaxPool,
    Dropout { rate: f64 },
    Dense(DenseLayer),
    Softmax,
}

/// Cached activations of one training forward pass.
#[derive(Clone, Debug)]
pub(crate) enum LayerCache {
    Input(Batch),
    BatchNorm {
        xhat: Batch,
        inv_std: Vec<f64>,
    },
    MaxPool {
        input_shape: Shape,
        /// Index into the input sample slice chosen per output element.
        argmax: Vec<u32>,
    },
    AvgPool {
        input_shape: Shape,
    },
    Dropout {
        /// Element factors: 0 or 1/(1 - rate).
        mask: Vec<f64>,
    },
    Softmax {
        output: Batch,
    },
}

/// Parameter gradients of one layer.
#[derive(Clone, Debug)]
pub(crate) enum LayerGrads {
    Conv { dw: Vec<f64>, db: Vec<f64> },
    BatchNorm { dgamma: Vec<f64>, dbeta: Vec<f64> },
    Dense { dw: Vec<f64>, db: Vec<f64> },
    None,
}

fn draw(init: WeightInit, fan_in: usize, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match init {
        WeightInit::HeUniform => {
            let limit = (6.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..limit)).collect()
        }
        WeightInit::Normal { std } => (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            })
            .collect(),
    }
}

impl LayerState {
    pub fn init(
        spec: &LayerSpec,
        input: Shape,
        init: WeightInit,
        rng: &mut ChaCha8Rng,
        idx: usize,
    ) -> Result<Self> {
        let layer_name = |kind: &str| format!("{kind}#{idx}");
        match *spec {
            LayerSpec::Conv { filters } => {
                let Shape::Hwc { h, w, c } = input else {
                    return Err(Error::ShapeMismatch {
                        layer: layer_name("conv"),
                        details: "convolution needs a spatial input".into(),
                    });
                };
                if h < KERNEL || w < KERNEL || filters == 0 {
                    return Err(Error::ShapeMismatch {
                        layer: layer_name("conv"),
                        details: format!("cannot apply 3x3 valid kernel to {h}x{w}x{c}"),
                    });
                }
                let fan_in = KERNEL * KERNEL * c;
                Ok(LayerState::Conv(ConvLayer {
                    in_h: h,
                    in_w: w,
                    in_c: c,
                    out_c: filters,
                    weights: draw(init, fan_in, rng, KERNEL * KERNEL * c * filters),
                    bias: vec![0.0; filters],
                }))
            }
            LayerSpec::BatchNorm { eps, momentum } => {
                let channels = match input {
                    Shape::Hwc { c, .. } => c,
                    Shape::Flat { len } => len,
                };
                if !(eps > 0.0) || !(0.0..=1.0).contains(&momentum) {
                    return Err(Error::InvalidArgument(format!(
                        "batch norm needs eps > 0 and momentum in [0, 1], got {eps}, {momentum}"
                    )));
                }
                Ok(LayerState::BatchNorm(BatchNormLayer {
                    channels,
                    eps,
                    momentum,
                    gamma: vec![1.0; channels],
                    beta: vec![0.0; channels],
                    running_mean: vec![0.0; channels],
                    running_var: vec![1.0; channels],
                }))
            }
            LayerSpec::Relu => Ok(LayerState::Relu),
            LayerSpec::AvgPool | LayerSpec::MaxPool => {
                let Shape::Hwc { h, w, .. } = input else {
                    return Err(Error::ShapeMismatch {
                        layer: layer_name("pool"),
                        details: "pooling needs a spatial input".into(),
                    });
                };
                if h < POOL || w < POOL {
                    return Err(Error::ShapeMismatch {
                        layer: layer_name("pool"),
                        details: format!("cannot pool a {h}x{w} map"),
                    });
                }
                Ok(match spec {
                    LayerSpec::AvgPool => LayerState::AvgPool,
                    _ => LayerState::MaxPool,
                })
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::InvalidArgument(format!(
                        "dropout rate must be in [0, 1), got {rate}"
                    )));
                }
                Ok(LayerState::Dropout { rate })
            }
            LayerSpec::Dense { units } => {
                if units == 0 {
                    return Err(Error::InvalidArgument("dense layer with 0 units".into()));
                }
                let in_dim = input.len();
                Ok(LayerState::Dense(DenseLayer {
                    out_dim: units,
                    weights: draw(init, in_dim, rng, in_dim * units),
                    bias: vec![0.0; units],
                }))
            }
            LayerSpec::Softmax => Ok(LayerState::Softmax),
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(match self {
            LayerState::Conv(conv) => Shape::Hwc {
                h: conv.in_h - KERNEL + 1,
                w: conv.in_w - KERNEL + 1,
                c: conv.out_c,
            },
            LayerState::AvgPool | LayerState::MaxPool => {
                let Shape::Hwc { h, w, c } = input else {
                    unreachable!("validated at init");
                };
                Shape::Hwc {
                    h: h / POOL,
                    w: w / POOL,
                    c,
                }
            }
            LayerState::Dense(dense) => Shape::Flat { len: dense.out_dim },
            _ => input,
        })
    }

    pub fn param_count(&self) -> usize {
        match self {
            LayerState::Conv(c) => c.weights.len() + c.bias.len(),
            LayerState::BatchNorm(bn) => bn.gamma.len() + bn.beta.len(),
            LayerState::Dense(d) => d.weights.len() + d.bias.len(),
            _ => 0,
        }
    }

    pub fn param_norm(&self) -> Option<f64> {
        let sq: f64 = match self {
            LayerState::Conv(c) => c.weights.iter().chain(&c.bias).map(|v| v * v).sum(),
            LayerState::BatchNorm(bn) => bn.gamma.iter().chain(&bn.beta).map(|v| v * v).sum(),
            LayerState::Dense(d) => d.weights.iter().chain(&d.bias).map(|v| v * v).sum(),
            _ => return None,
        };
        Some(sq.sqrt())
    }

    pub fn param_views(&self) -> Vec<ParamView<'_>> {
        match self {
            LayerState::Conv(c) => vec![
                ParamView {
                    name: "conv.weights",
                    values: &c.weights,
                },
                ParamView {
                    name: "conv.bias",
                    values: &c.bias,
                },
            ],
            LayerState::BatchNorm(bn) => vec![
                ParamView {
                    name: "batch_norm.gamma",
                    values: &bn.gamma,
                },
                ParamView {
                    name: "batch_norm.beta",
                    values: &bn.beta,
                },
            ],
            LayerState::Dense(d) => vec![
                ParamView {
                    name: "dense.weights",
                    values: &d.weights,
                },
                ParamView {
                    name: "dense.bias",
                    values: &d.bias,
                },
            ],
            _ => Vec::new(),
        }
    }

    pub fn param_arrays_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            LayerState::Conv(c) => vec![&mut c.weights[..], &mut c.bias[..]],
            LayerState::BatchNorm(bn) => vec![&mut bn.gamma[..], &mut bn.beta[..]],
            LayerState::Dense(d) => vec![&mut d.weights[..], &mut d.bias[..]],
            _ => Vec::new(),
        }
    }

    pub fn grad_arrays(grads: &LayerGrads) -> Vec<&[f64]> {
        match grads {
            LayerGrads::Conv { dw, db } => vec![&dw[..], &db[..]],
            LayerGrads::BatchNorm { dgamma, dbeta } => vec![&dgamma[..], &dbeta[..]],
            LayerGrads::Dense { dw, db } => vec![&dw[..], &db[..]],
            LayerGrads::None => Vec::new(),
        }
    }

    /// Serialization order: trainable parameters, then batch-norm running
    /// statistics, per layer in stack order.
    pub fn serialize_params(&self, out: &mut Vec<f64>) {
        match self {
            LayerState::Conv(c) => {
                out.extend_from_slice(&c.weights);
                out.extend_from_slice(&c.bias);
            }
            LayerState::BatchNorm(bn) => {
                out.extend_from_slice(&bn.gamma);
                out.extend_from_slice(&bn.beta);
                out.extend_from_slice(&bn.running_mean);
                out.extend_from_slice(&bn.running_var);
            }
            LayerState::Dense(d) => {
                out.extend_from_slice(&d.weights);
                out.extend_from_slice(&d.bias);
            }
            _ => {}
        }
    }

    pub fn load_params(&mut self, params: &[f64], mut offset: usize) -> Result<usize> {
        let take = |dst: &mut [f64], offset: &mut usize| -> Result<()> {
            let end = *offset + dst.len();
            if end > params.len() {
                return Err(Error::Data("parameter stream too short".into()));
            }
            dst.copy_from_slice(&params[*offset..end]);
            *offset = end;
            Ok(())
        };
        match self {
            LayerState::Conv(c) => {
                take(&mut c.weights, &mut offset)?;
                take(&mut c.bias, &mut offset)?;
            }
            LayerState::BatchNorm(bn) => {
                take(&mut bn.gamma, &mut offset)?;
                take(&mut bn.beta, &mut offset)?;
                take(&mut bn.running_mean, &mut offset)?;
                take(&mut bn.running_var, &mut offset)?;
                if bn.running_var.iter().any(|&v| v < 0.0) {
                    return Err(Error::Data("negative running variance".into()));
                }
            }
            LayerState::Dense(d) => {
                take(&mut d.weights, &mut offset)?;
                take(&mut d.bias, &mut offset)?;
            }
            _ => {}
        }
        Ok(offset)
    }

    pub fn forward_inference(&self, input: &Batch, out_shape: Shape) -> Batch {
        match self {
            LayerState::Conv(conv) => conv.forward(input, out_shape),
            LayerState::BatchNorm(bn) => bn.forward_inference(input),
            LayerState::Relu => {
                let mut out = input.clone();
                out.data.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                });
                out
            }
            LayerState::AvgPool => avg_pool_forward(input, out_shape),
            LayerState::MaxPool => max_pool_forward(input, out_shape).0,
            LayerState::Dropout { .. } => input.clone(),
            LayerState::Dense(dense) => dense.forward(input, out_shape),
            LayerState::Softmax => softmax_forward(input),
        }
    }

    pub fn forward_training(
        &mut self,
        input: &Batch,
        out_shape: Shape,
        dropout_rng: &mut ChaCha8Rng,
    ) -> (Batch, LayerCache) {
        match self {
            LayerState::Conv(conv) => {
                let out = conv.forward(input, out_shape);
                (out, LayerCache::Input(input.clone()))
            }
            LayerState::BatchNorm(bn) => bn.forward_training(input),
            LayerState::Relu => {
                let mut out = input.clone();
                out.data.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                });
                (out, LayerCache::Input(input.clone()))
            }
            LayerState::AvgPool => (
                avg_pool_forward(input, out_shape),
                LayerCache::AvgPool {
                    input_shape: input.shape,
                },
            ),
            LayerState::MaxPool => {
                let (out, argmax) = max_pool_forward(input, out_shape);
                (
                    out,
                    LayerCache::MaxPool {
                        input_shape: input.shape,
                        argmax,
                    },
                )
            }
            LayerState::Dropout { rate } => {
                if *rate == 0.0 {
                    return (input.clone(), LayerCache::Dropout { mask: Vec::new() });
                }
                let keep = 1.0 - *rate;
                let scale = 1.0 / keep;
                let mut out = input.clone();
                let mask: Vec<f64> = (0..out.data.len())
                    .map(|_| {
                        if dropout_rng.random_range(0.0..1.0) < keep {
                            scale
                        } else {
                            0.0
                        }
                    })
                    .collect();
                out.data
                    .iter_mut()
                    .zip(&mask)
                    .for_each(|(v, &m)| *v *= m);
                (out, LayerCache::Dropout { mask })
            }
            LayerState::Dense(dense) => {
                let out = dense.forward(input, out_shape);
                (out, LayerCache::Input(input.clone()))
            }
            LayerState::Softmax => {
                let out = softmax_forward(input);
                (
                    out.clone(),
                    LayerCache::Softmax { output: out },
                )
            }
        }
    }

    pub fn backward(&self, cache: &LayerCache, upstream: Batch) -> Result<(LayerGrads, Batch)> {
        match (self, cache) {
            (LayerState::Conv(conv), LayerCache::Input(input)) => {
                let (grads, down) = conv.backward(input, &upstream);
                Ok((grads, down))
            }
            (LayerState::BatchNorm(bn), LayerCache::BatchNorm { xhat, inv_std }) => {
                Ok(bn.backward(xhat, inv_std, upstream))
            }
            (LayerState::Relu, LayerCache::Input(input)) => {
                let mut down = upstream;
                down.data
                    .iter_mut()
                    .zip(&input.data)
                    .for_each(|(g, &x)| {
                        if x <= 0.0 {
                            *g = 0.0;
                        }
                    });
                Ok((LayerGrads::None, down))
            }
            (LayerState::AvgPool, LayerCache::AvgPool { input_shape }) => {
                Ok((LayerGrads::None, avg_pool_backward(&upstream, *input_shape)))
            }
            (LayerState::MaxPool, LayerCache::MaxPool { input_shape, argmax }) => Ok((
                LayerGrads::None,
                max_pool_backward(&upstream, *input_shape, argmax),
            )),
            (LayerState::Dropout { .. }, LayerCache::Dropout { mask }) => {
                let mut down = upstream;
                if !mask.is_empty() {
                    down.data.iter_mut().zip(mask).for_each(|(g, &m)| *g *= m);
                }
                Ok((LayerGrads::None, down))
            }
            (LayerState::Dense(dense), LayerCache::Input(input)) => {
                let (grads, down) = dense.backward(input, &upstream);
                Ok((grads, down))
            }
            (LayerState::Softmax, LayerCache::Softmax { output }) => {
                // dx_i = p_i (g_i - sum_j g_j p_j)
                let mut down = Batch::zeros(output.shape, output.count);
                let stride = output.stride();
                for b in 0..output.count {
                    let p = &output.data[b * stride..(b + 1) * stride];
                    let g = &upstream.data[b * stride..(b + 1) * stride];
                    let dot: f64 = p.iter().zip(g).map(|(&pi, &gi)| pi * gi).sum();
                    let dst = &mut down.data[b * stride..(b + 1) * stride];
                    for i in 0..stride {
                        dst[i] = p[i] * (g[i] - dot);
                    }
                }
                Ok((LayerGrads::None, down))
            }
            _ => Err(Error::MissingForwardCache),
        }
    }
}

impl ConvLayer {
    fn forward(&self, input: &Batch, out_shape: Shape) -> Batch {
        let Shape::Hwc {
            h: out_h,
            w: out_w,
            c: out_c,
        } = out_shape
        else {
            unreachable!()
        };
        let (in_w, in_c) = (self.in_w, self.in_c);
        let mut out = Batch::zeros(out_shape, input.count);
        let in_stride = input.stride();
        let out_stride = out_shape.len();
        let mut acc = vec![0.0; out_c];
        for b in 0..input.count {
            let x = &input.data[b * in_stride..(b + 1) * in_stride];
            let y = &mut out.data[b * out_stride..(b + 1) * out_stride];
            for oy in 0..out_h {
                for ox in 0..out_w {
                    acc.copy_from_slice(&self.bias);
                    for ky in 0..KERNEL {
                        for kx in 0..KERNEL {
                            let in_base = ((oy + ky) * in_w + (ox + kx)) * in_c;
                            let w_base = ((ky * KERNEL + kx) * in_c) * out_c;
                            for ic in 0..in_c {
                                let v = x[in_base + ic];
                                let wrow = &self.weights[w_base + ic * out_c..][..out_c];
                                for (a, &wv) in acc.iter_mut().zip(wrow) {
                                    *a += v * wv;
                                }
                            }
                        }
                    }
                    y[(oy * out_w + ox) * out_c..][..out_c].copy_from_slice(&acc);
                }
            }
        }
        out
    }

    fn backward(&self, input: &Batch, upstream: &Batch) -> (LayerGrads, Batch) {
        let out_h = self.in_h - KERNEL + 1;
        let out_w = self.in_w - KERNEL + 1;
        let (in_w, in_c, out_c) = (self.in_w, self.in_c, self.out_c);
        let mut dw = vec![0.0; self.weights.len()];
        let mut db = vec![0.0; self.bias.len()];
        let mut dinput = Batch::zeros(input.shape, input.count);
        let in_stride = input.stride();
        let out_stride = upstream.stride();
        for b in 0..input.count {
            let x = &input.data[b * in_stride..(b + 1) * in_stride];
            let g = &upstream.data[b * out_stride..(b + 1) * out_stride];
            let dx = &mut dinput.data[b * in_stride..(b + 1) * in_stride];
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let grow = &g[(oy * out_w + ox) * out_c..][..out_c];
                    for (dbv, &gv) in db.iter_mut().zip(grow) {
                        *dbv += gv;
                    }
                    for ky in 0..KERNEL {
                        for kx in 0..KERNEL {
                            let in_base = ((oy + ky) * in_w + (ox + kx)) * in_c;
                            let w_base = ((ky * KERNEL + kx) * in_c) * out_c;
                            for ic in 0..in_c {
                                let v = x[in_base + ic];
                                let wrow = &self.weights[w_base + ic * out_c..][..out_c];
                                let dwrow = &mut dw[w_base + ic * out_c..][..out_c];
                                let mut acc = 0.0;
                                for ((dwv, &wv), &gv) in
                                    dwrow.iter_mut().zip(wrow).zip(grow)
                                {
                                    *dwv += v * gv;
                                    acc += wv * gv;
                                }
                                dx[in_base + ic] += acc;
                            }
                        }
                    }
                }
            }
        }
        (LayerGrads::Conv { dw, db }, dinput)
    }
}

impl BatchNormLayer {
    fn channel_count(&self, batch: &Batch) -> (usize, usize) {
        // Elements per channel: batch * spatial for HWC, batch for flat.
        let spatial = batch.shape.len() / self.channels;
        (spatial, batch.count * spatial)
    }

    fn forward_inference(&self, input: &Batch) -> Batch {
        let mut out = input.clone();
        let c = self.channels;
        for v in out.data.chunks_exact_mut(c) {
            for (ch, x) in v.iter_mut().enumerate() {
                let inv = 1.0 / (self.running_var[ch] + self.eps).sqrt();
                *x = self.gamma[ch] * (*x - self.running_mean[ch]) * inv + self.beta[ch];
            }
        }
        out
    }

    fn forward_training(&mut self, input: &Batch) -> (Batch, LayerCache) {
        let c = self.channels;
        let (_, n_per_channel) = self.channel_count(input);
        let nf = n_per_channel as f64;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for chunk in input.data.chunks_exact(c) {
            for (ch, &x) in chunk.iter().enumerate() {
                mean[ch] += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nf);
        for chunk in input.data.chunks_exact(c) {
            for (ch, &x) in chunk.iter().enumerate() {
                let d = x - mean[ch];
                var[ch] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= nf);

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = input.clone();
        for chunk in xhat.data.chunks_exact_mut(c) {
            for (ch, x) in chunk.iter_mut().enumerate() {
                *x = (*x - mean[ch]) * inv_std[ch];
            }
        }
        let mut out = xhat.clone();
        for chunk in out.data.chunks_exact_mut(c) {
            for (ch, x) in chunk.iter_mut().enumerate() {
                *x = self.gamma[ch] * *x + self.beta[ch];
            }
        }
        for ch in 0..c {
            self.running_mean[ch] =
                self.momentum * self.running_mean[ch] + (1.0 - self.momentum) * mean[ch];
            self.running_var[ch] =
                self.momentum * self.running_var[ch] + (1.0 - self.momentum) * var[ch];
        }
        (out, LayerCache::BatchNorm { xhat, inv_std })
    }

    fn backward(&self, xhat: &Batch, inv_std: &[f64], upstream: Batch) -> (LayerGrads, Batch) {
        let c = self.channels;
        let (_, n_per_channel) = self.channel_count(xhat);
        let nf = n_per_channel as f64;
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for (chunk, xh) in upstream
            .data
            .chunks_exact(c)
            .zip(xhat.data.chunks_exact(c))
        {
            for ch in 0..c {
                dbeta[ch] += chunk[ch];
                dgamma[ch] += chunk[ch] * xh[ch];
            }
        }
        let mut down = Batch::zeros(xhat.shape, xhat.count);
        for ((g, xh), dst) in upstream
            .data
            .chunks_exact(c)
            .zip(xhat.data.chunks_exact(c))
            .zip(down.data.chunks_exact_mut(c))
        {
            for ch in 0..c {
                let term = g[ch] - dbeta[ch] / nf - xh[ch] * dgamma[ch] / nf;
                dst[ch] = self.gamma[ch] * inv_std[ch] * term;
            }
        }
        (LayerGrads::BatchNorm { dgamma, dbeta }, down)
    }
}

impl DenseLayer {
    fn forward(&self, input: &Batch, out_shape: Shape) -> Batch {
        let mut out = Batch::zeros(out_shape, input.count);
        let in_stride = input.stride();
        for b in 0..input.count {
            let x = &input.data[b * in_stride..(b + 1) * in_stride];
            let y = &mut out.data[b * self.out_dim..(b + 1) * self.out_dim];
            y.copy_from_slice(&self.bias);
            for (i, &xv) in x.iter().enumerate() {
                let wrow = &self.weights[i * self.out_dim..][..self.out_dim];
                for (yv, &wv) in y.iter_mut().zip(wrow) {
                    *yv += xv * wv;
                }
            }
        }
        out
    }

    fn backward(&self, input: &Batch, upstream: &Batch) -> (LayerGrads, Batch) {
        let mut dw = vec![0.0; self.weights.len()];
        let mut db = vec![0.0; self.bias.len()];
        let mut dinput = Batch::zeros(input.shape, input.count);
        let in_stride = input.stride();
        for b in 0..input.count {
            let x = &input.data[b * in_stride..(b + 1) * in_stride];
            let g = &upstream.data[b * self.out_dim..(b + 1) * self.out_dim];
            let dx = &mut dinput.data[b * in_stride..(b + 1) * in_stride];
            for (gv, dbv) in g.iter().zip(db.iter_mut()) {
                *dbv += gv;
            }
            for (i, &xv) in x.iter().enumerate() {
                let wrow = &self.weights[i * self.out_dim..][..self.out_dim];
                let dwrow = &mut dw[i * self.out_dim..][..self.out_dim];
                let mut acc = 0.0;
                for ((dwv, &wv), &gv) in dwrow.iter_mut().zip(wrow).zip(g) {
                    *dwv += xv * gv;
                    acc += wv * gv;
                }
                dx[i] += acc;
            }
        }
        (LayerGrads::Dense { dw, db }, dinput)
    }
}

fn avg_pool_forward(input: &Batch, out_shape: Shape) -> Batch {
    let Shape::Hwc { h, w, c } = input.shape else {
        unreachable!()
    };
    let Shape::Hwc {
        h: out_h,
        w: out_w,
        ..
    } = out_shape
    else {
        unreachable!()
    };
    let _ = (h, w);
    let mut out = Batch::zeros(out_shape, input.count);
    let in_stride = input.stride();
    let out_stride = out_shape.len();
    let in_w = w;
    for b in 0..input.count {
        let x = &input.data[b * in_stride..(b + 1) * in_stride];
        let y = &mut out.data[b * out_stride..(b + 1) * out_stride];
        for oy in 0..out_h {
            for ox in 0..out_w {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for py in 0..POOL {
                        for px in 0..POOL {
                            acc += x[((oy * POOL + py) * in_w + ox * POOL + px) * c + ch];
                        }
                    }
                    y[(oy * out_w + ox) * c + ch] = acc / (POOL * POOL) as f64;
                }
            }
        }
    }
    out
}

fn avg_pool_backward(upstream: &Batch, input_shape: Shape) -> Batch {
    let Shape::Hwc { h: _, w: in_w, c } = input_shape else {
        unreachable!()
    };
    let Shape::Hwc {
        h: out_h,
        w: out_w,
        ..
    } = upstream.shape
    else {
        unreachable!()
    };
    let mut down = Batch::zeros(input_shape, upstream.count);
    let in_stride = input_shape.len();
    let out_stride = upstream.stride();
    let inv = 1.0 / (POOL * POOL) as f64;
    for b in 0..upstream.count {
        let g = &upstream.data[b * out_stride..(b + 1) * out_stride];
        let dx = &mut down.data[b * in_stride..(b + 1) * in_stride];
        for oy in 0..out_h {
            for ox in 0..out_w {
                for ch in 0..c {
                    let gv = g[(oy * out_w + ox) * c + ch] * inv;
                    for py in 0..POOL {
                        for px in 0..POOL {
                            dx[((oy * POOL + py) * in_w + ox * POOL + px) * c + ch] += gv;
                        }
                    }
                }
            }
        }
    }
    down
}

fn max_pool_forward(input: &Batch, out_shape: Shape) -> (Batch, Vec<u32>) {
    let Shape::Hwc { h: _, w: in_w, c } = input.shape else {
        unreachable!()
    };
    let Shape::Hwc {
        h: out_h,
        w: out_w,
        ..
    } = out_shape
    else {
        unreachable!()
    };
    let mut out = Batch::zeros(out_shape, input.count);
    let mut argmax = vec![0u32; out_shape.len() * input.count];
    let in_stride = input.stride();
    let out_stride = out_shape.len();
    for b in 0..input.count {
        let x = &input.data[b * in_stride..(b + 1) * in_stride];
        let y = &mut out.data[b * out_stride..(b + 1) * out_stride];
        let am = &mut argmax[b * out_stride..(b + 1) * out_stride];
        for oy in 0..out_h {
            for ox in 0..out_w {
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for py in 0..POOL {
                        for px in 0..POOL {
                            let idx = ((oy * POOL + py) * in_w + ox * POOL + px) * c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    y[(oy * out_w + ox) * c + ch] = best;
                    am[(oy * out_w + ox) * c + ch] = best_idx as u32;
                }
            }
        }
    }
    (out, argmax)
}

fn max_pool_backward(upstream: &Batch, input_shape: Shape, argmax: &[u32]) -> Batch {
    let mut down = Batch::zeros(input_shape, upstream.count);
    let in_stride = input_shape.len();
    let out_stride = upstream.stride();
    for b in 0..upstream.count {
        let g = &upstream.data[b * out_stride..(b + 1) * out_stride];
        let am = &argmax[b * out_stride..(b + 1) * out_stride];
        let dx = &mut down.data[b * in_stride..(b + 1) * in_stride];
        for (gv, &idx) in g.iter().zip(am) {
            dx[idx as usize] += gv;
        }
    }
    down
}

fn softmax_forward(input: &Batch) -> Batch {
    let mut out = input.clone();
    let stride = input.stride();
    for row in out.data.chunks_exact_mut(stride) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = 1.0 / sum;
        row.iter_mut().for_each(|v| *v *= inv);
    }
    out
}
