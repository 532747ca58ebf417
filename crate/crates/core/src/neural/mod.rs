//! Small feed-forward networks with exact reverse-mode gradients.
//!
//! A network is a set of input branches whose outputs are concatenated,
//! a shared trunk, and any number of output heads. A plain layer stack is the
//! special case of one branch, an empty trunk and no heads. Parameters live
//! in one flat vector so the optimizer and checkpoints can treat them as a
//! single block.

mod adam;
mod categorical;
mod checkpoint;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use categorical::{softmax_categorical, Categorical};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("unsupported checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NeuralError>;

fn mismatch(context: impl Into<String>, expected: &[usize], got: &[usize]) -> NeuralError {
    NeuralError::ShapeMismatch {
        context: context.into(),
        expected: expected.to_vec(),
        got: got.to_vec(),
    }
}

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(mismatch("tensor data", &[n], &[data.len()]));
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activated output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    /// Unpadded convolution over `[channels, length]` inputs.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Flatten,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            inputs,
            outputs,
            activation,
        }
    }

    pub fn conv1d(in_channels: usize, out_channels: usize, kernel: usize, activation: Activation) -> Self {
        LayerSpec::Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => outputs * inputs + outputs,
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel + out_channels,
            LayerSpec::Flatten => 0,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => {
                if input != [inputs] {
                    return Err(mismatch("dense input", &[inputs], input));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if kernel == 0 || stride == 0 {
                    return Err(NeuralError::InvalidSpec(
                        "conv1d kernel and stride must be positive".into(),
                    ));
                }
                match input {
                    [c, l] if *c == in_channels && *l >= kernel => Ok(vec![out_channels, (l - kernel) / stride + 1]),
                    _ => Err(mismatch("conv1d input", &[in_channels, kernel], input)),
                }
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => (inputs, outputs),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (in_channels * kernel, out_channels * kernel),
            LayerSpec::Flatten => (0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub layers: Vec<LayerSpec>,
    /// Multiplier on the initial weight range.
    pub init_scale: f64,
}

/// Branches are concatenated at the junction, then fed through the trunk
/// and every head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub branches: Vec<BranchSpec>,
    pub trunk: Vec<LayerSpec>,
    pub heads: Vec<HeadSpec>,
}

impl NetworkSpec {
    pub fn sequential(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Self {
        Self {
            branches: vec![BranchSpec { input_shape, layers }],
            trunk: Vec::new(),
            heads: Vec::new(),
        }
    }

    fn all_layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.branches
            .iter()
            .flat_map(|b| b.layers.iter())
            .chain(self.trunk.iter())
            .chain(self.heads.iter().flat_map(|h| h.layers.iter()))
    }

    pub fn param_count(&self) -> usize {
        self.all_layers().map(LayerSpec::param_count).sum()
    }

    pub fn output_count(&self) -> usize {
        self.heads.len().max(1)
    }

    /// Checks shape compatibility and returns the output shapes.
    pub fn validate(&self) -> Result<Vec<Vec<usize>>> {
        Ok(Layout::build(self)?.output_shapes())
    }
}

#[derive(Debug, Clone)]
struct CompiledLayer {
    spec: LayerSpec,
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Clone)]
struct Stage {
    layers: Vec<CompiledLayer>,
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    branches: Vec<Stage>,
    trunk: Stage,
    heads: Vec<Stage>,
    params: usize,
}

impl Layout {
    fn build(spec: &NetworkSpec) -> Result<Self> {
        if spec.branches.is_empty() {
            return Err(NeuralError::InvalidSpec(
                "network needs at least one input branch".into(),
            ));
        }
        let mut offset = 0;
        let mut stage = |input: &[usize], layers: &[LayerSpec]| -> Result<Stage> {
            let mut shape = input.to_vec();
            let mut compiled = Vec::with_capacity(layers.len());
            for l in layers {
                let out = l.output_shape(&shape)?;
                compiled.push(CompiledLayer {
                    spec: *l,
                    in_shape: shape,
                    out_shape: out.clone(),
                    offset,
                });
                offset += l.param_count();
                shape = out;
            }
            Ok(Stage {
                layers: compiled,
                in_shape: input.to_vec(),
                out_shape: shape,
            })
        };
        let branches = spec
            .branches
            .iter()
            .map(|b| stage(&b.input_shape, &b.layers))
            .collect::<Result<Vec<_>>>()?;
        let junction = if branches.len() == 1 {
            branches[0].out_shape.clone()
        } else {
            let mut width = 0;
            for b in &branches {
                if b.out_shape.len() != 1 {
                    return Err(NeuralError::InvalidSpec(format!(
                        "branch output {:?} must be flat to concatenate",
                        b.out_shape
                    )));
                }
                width += b.out_shape[0];
            }
            vec![width]
        };
        let trunk = stage(&junction, &spec.trunk)?;
        let heads = spec
            .heads
            .iter()
            .map(|h| stage(&trunk.out_shape, &h.layers))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            branches,
            trunk,
            heads,
            params: offset,
        })
    }

    fn output_shapes(&self) -> Vec<Vec<usize>> {
        if self.heads.is_empty() {
            vec![self.trunk.out_shape.clone()]
        } else {
            self.heads.iter().map(|h| h.out_shape.clone()).collect()
        }
    }
}

/// Layer inputs and outputs recorded during [`Network::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    branches: Vec<Vec<Vec<f64>>>,
    trunk: Vec<Vec<f64>>,
    heads: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub inputs: Vec<Tensor>,
}

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layout: Layout,
    pub params: Vec<f64>,
}

impl Network {
    /// Uniform weights in `±sqrt(6/(fan_in+fan_out))` (times the head's
    /// init scale), zero biases.
    pub fn init<R: Rng>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let layout = Layout::build(&spec)?;
        let mut params = vec![0.0; layout.params];
        let scaled = layout
            .branches
            .iter()
            .chain(std::iter::once(&layout.trunk))
            .map(|s| (s, 1.0))
            .chain(layout.heads.iter().zip(spec.heads.iter().map(|h| h.init_scale)));
        for (stage, scale) in scaled {
            for l in &stage.layers {
                if l.spec.param_count() == 0 {
                    continue;
                }
                let (fan_in, fan_out) = l.spec.fans();
                let bias = l.out_shape[0];
                let weights = l.spec.param_count() - bias;
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for p in &mut params[l.offset..l.offset + weights] {
                    *p = scale * rng.gen_range(-bound..=bound);
                }
            }
        }
        Ok(Self { spec, layout, params })
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<f64>) -> Result<Self> {
        let layout = Layout::build(&spec)?;
        if params.len() != layout.params {
            return Err(mismatch("parameter vector", &[layout.params], &[params.len()]));
        }
        Ok(Self { spec, layout, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.layout.params
    }

    pub fn input_shapes(&self) -> Vec<Vec<usize>> {
        self.layout.branches.iter().map(|b| b.in_shape.clone()).collect()
    }

    pub fn output_shapes(&self) -> Vec<Vec<usize>> {
        self.layout.output_shapes()
    }

    pub fn forward(&self, inputs: &[Tensor]) -> Result<(Vec<Tensor>, ForwardCache)> {
        if inputs.len() != self.layout.branches.len() {
            return Err(mismatch(
                "network inputs",
                &[self.layout.branches.len()],
                &[inputs.len()],
            ));
        }
        let mut branches = Vec::with_capacity(inputs.len());
        let mut junction = Vec::new();
        for (stage, x) in self.layout.branches.iter().zip(inputs) {
            if x.shape != stage.in_shape {
                return Err(mismatch("branch input", &stage.in_shape, &x.shape));
            }
            let acts = self.run_stage(stage, x.data.clone());
            junction.extend_from_slice(acts.last().expect("stage keeps its input"));
            branches.push(acts);
        }
        let trunk = self.run_stage(&self.layout.trunk, junction);
        let trunk_out = trunk.last().expect("stage keeps its input");
        let heads: Vec<_> = self
            .layout
            .heads
            .iter()
            .map(|h| self.run_stage(h, trunk_out.clone()))
            .collect();
        let outputs: Vec<Tensor> = if heads.is_empty() {
            vec![Tensor {
                shape: self.layout.trunk.out_shape.clone(),
                data: trunk_out.clone(),
            }]
        } else {
            heads
                .iter()
                .zip(&self.layout.heads)
                .map(|(acts, stage)| Tensor {
                    shape: stage.out_shape.clone(),
                    data: acts.last().expect("stage keeps its input").clone(),
                })
                .collect()
        };
        if outputs.iter().any(|t| t.data.iter().any(|v| !v.is_finite())) {
            return Err(NeuralError::NonFinite("network output"));
        }
        Ok((outputs, ForwardCache { branches, trunk, heads }))
    }

    /// Gradients of a scalar loss whose derivatives with respect to the
    /// network outputs are `output_grads`.
    pub fn backward(&self, cache: &ForwardCache, output_grads: &[Tensor]) -> Result<Gradients> {
        let mut params = vec![0.0; self.layout.params];
        let inputs = self.backward_accumulate(cache, output_grads, &mut params)?;
        Ok(Gradients { params, inputs })
    }

    /// Like [`Network::backward`] but adds parameter gradients into `param_grads`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grads: &[Tensor],
        param_grads: &mut [f64],
    ) -> Result<Vec<Tensor>> {
        if param_grads.len() != self.layout.params {
            return Err(mismatch(
                "parameter gradient",
                &[self.layout.params],
                &[param_grads.len()],
            ));
        }
        let expected = self.output_shapes();
        if output_grads.len() != expected.len() {
            return Err(mismatch("output gradients", &[expected.len()], &[output_grads.len()]));
        }
        for (g, shape) in output_grads.iter().zip(&expected) {
            if &g.shape != shape {
                return Err(mismatch("output gradient", shape, &g.shape));
            }
        }
        if cache.branches.len() != self.layout.branches.len() || cache.heads.len() != self.layout.heads.len() {
            return Err(NeuralError::InvalidSpec("cache does not belong to this network".into()));
        }

        let trunk_grad = if self.layout.heads.is_empty() {
            output_grads[0].data.clone()
        } else {
            let mut acc = vec![0.0; self.layout.trunk.out_shape.iter().product()];
            for ((stage, acts), g) in self.layout.heads.iter().zip(&cache.heads).zip(output_grads) {
                let gi = self.back_stage(stage, acts, g.data.clone(), param_grads);
                for (a, b) in acc.iter_mut().zip(gi) {
                    *a += b;
                }
            }
            acc
        };
        let junction_grad = self.back_stage(&self.layout.trunk, &cache.trunk, trunk_grad, param_grads);

        let mut inputs = Vec::with_capacity(self.layout.branches.len());
        let mut start = 0;
        for (stage, acts) in self.layout.branches.iter().zip(&cache.branches) {
            let width: usize = stage.out_shape.iter().product();
            let g = junction_grad[start..start + width].to_vec();
            start += width;
            let gi = self.back_stage(stage, acts, g, param_grads);
            inputs.push(Tensor {
                shape: stage.in_shape.clone(),
                data: gi,
            });
        }
        Ok(inputs)
    }

    fn run_stage(&self, stage: &Stage, input: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(stage.layers.len() + 1);
        acts.push(input);
        for l in &stage.layers {
            let out = self.layer_forward(l, acts.last().expect("non-empty"));
            acts.push(out);
        }
        acts
    }

    fn back_stage(&self, stage: &Stage, acts: &[Vec<f64>], mut grad: Vec<f64>, param_grads: &mut [f64]) -> Vec<f64> {
        for (i, l) in stage.layers.iter().enumerate().rev() {
            grad = self.layer_backward(l, &acts[i], &acts[i + 1], grad, param_grads);
        }
        grad
    }

    fn layer_forward(&self, l: &CompiledLayer, x: &[f64]) -> Vec<f64> {
        let p = &self.params[l.offset..l.offset + l.spec.param_count()];
        match l.spec {
            LayerSpec::Dense {
                inputs,
                outputs,
                activation,
            } => {
                let (w, b) = p.split_at(outputs * inputs);
                (0..outputs)
                    .map(|o| {
                        let row = &w[o * inputs..(o + 1) * inputs];
                        let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                        activation.apply(z)
                    })
                    .collect()
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                activation,
            } => {
                let len = l.in_shape[1];
                let out_len = l.out_shape[1];
                let (w, b) = p.split_at(out_channels * in_channels * kernel);
                let mut out = vec![0.0; out_channels * out_len];
                for oc in 0..out_channels {
                    for t in 0..out_len {
                        let mut z = b[oc];
                        for ic in 0..in_channels {
                            let wk = &w[(oc * in_channels + ic) * kernel..][..kernel];
                            let xs = &x[ic * len + t * stride..][..kernel];
                            z += wk.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                        }
                        out[oc * out_len + t] = activation.apply(z);
                    }
                }
                out
            }
            LayerSpec::Flatten => x.to_vec(),
        }
    }

    fn layer_backward(&self, l: &CompiledLayer, x: &[f64], y: &[f64], mut g: Vec<f64>, pg: &mut [f64]) -> Vec<f64> {
        let n = l.spec.param_count();
        let p = &self.params[l.offset..l.offset + n];
        let pg = &mut pg[l.offset..l.offset + n];
        match l.spec {
            LayerSpec::Dense {
                inputs,
                outputs,
                activation,
            } => {
                for (gi, yi) in g.iter_mut().zip(y) {
                    *gi *= activation.derivative(*yi);
                }
                let (w, _) = p.split_at(outputs * inputs);
                let (gw, gb) = pg.split_at_mut(outputs * inputs);
                let mut gx = vec![0.0; inputs];
                for o in 0..outputs {
                    let go = g[o];
                    gb[o] += go;
                    let row = &w[o * inputs..(o + 1) * inputs];
                    let grow = &mut gw[o * inputs..(o + 1) * inputs];
                    for i in 0..inputs {
                        grow[i] += go * x[i];
                        gx[i] += go * row[i];
                    }
                }
                gx
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                activation,
            } => {
                for (gi, yi) in g.iter_mut().zip(y) {
                    *gi *= activation.derivative(*yi);
                }
                let len = l.in_shape[1];
                let out_len = l.out_shape[1];
                let (w, _) = p.split_at(out_channels * in_channels * kernel);
                let (gw, gb) = pg.split_at_mut(out_channels * in_channels * kernel);
                let mut gx = vec![0.0; in_channels * len];
                for oc in 0..out_channels {
                    for t in 0..out_len {
                        let go = g[oc * out_len + t];
                        gb[oc] += go;
                        for ic in 0..in_channels {
                            let base = (oc * in_channels + ic) * kernel;
                            let xb = ic * len + t * stride;
                            for j in 0..kernel {
                                gw[base + j] += go * x[xb + j];
                                gx[xb + j] += go * w[base + j];
                            }
                        }
                    }
                }
                gx
            }
            LayerSpec::Flatten => g,
        }
    }
}
