//! Per-view feedforward networks with hand-written forward and backward passes.
//!
//! A network maps a `d × B` batch (columns are samples) to an `o × B`
//! output through `h_k = s(W_k h_(k-1) + b_k)`. Hidden layers share one
//! activation; the output layer is linear. `backward` takes the gradient of
//! some objective with respect to the output and returns parameter gradients.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_magic, read_matrix, read_string, read_u32, read_u64, write_matrix, write_string};
use crate::linalg::Matrix;

pub const NETWORK_MAGIC: &[u8; 4] = b"MVNN";
pub const NETWORK_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
    #[serde(alias = "linear")]
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `pre`, given `post = apply(pre)`.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

/// One affine layer: `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// L1 and L2 penalties on weight matrices (biases are not penalized).
///
/// The penalty added to the objective is `l1·Σ|W| + l2·Σ W²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub l1: f64,
    pub l2: f64,
}

impl Regularization {
    pub fn is_zero(&self) -> bool {
        self.l1 == 0.0 && self.l2 == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    widths: Vec<usize>,
    activation: Activation,
    layers: Vec<Layer>,
}

/// Per-layer values from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    /// `W_k h_(k-1) + b_k` for every layer.
    pub pre_activations: Vec<Matrix>,
    /// `s(pre)` for hidden layers; the last entry is the network output.
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace has at least one layer")
    }
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGradients {
    /// Flat views in `[W_1, b_1, W_2, b_2, …]` order, matching
    /// [`MlpNetwork::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }
}

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Randomly initialized network: weights uniform on `±√(6/(fan_in+fan_out))`,
/// biases zero. Deterministic in `seed`.
pub fn init_network(widths: &[usize], activation: Activation, seed: u64) -> Result<MlpNetwork> {
    validate_widths(widths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = widths
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = glorot_limit(fan_in, fan_out);
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit));
            Layer { weights, bias: vec![0.0; fan_out] }
        })
        .collect();
    Ok(MlpNetwork { widths: widths.to_vec(), activation, layers })
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a network needs an input and an output width, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::InvalidArgument(format!("layer widths must be >= 1, got {widths:?}")));
    }
    Ok(())
}

impl MlpNetwork {
    /// Assemble a network from explicit layers.
    pub fn from_layers(activation: Activation, layers: Vec<Layer>) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::InvalidArgument("network has no layers".into()))?;
        let mut widths = vec![first.weights.cols()];
        for (k, layer) in layers.iter().enumerate() {
            let expected_in = *widths.last().unwrap();
            if layer.weights.cols() != expected_in || layer.bias.len() != layer.weights.rows() {
                return Err(Error::Shape(format!(
                    "layer {k}: weights {:?}, bias {}, expected input width {expected_in}",
                    layer.weights.shape(),
                    layer.bias.len()
                )));
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {k}")));
            }
            widths.push(layer.weights.rows());
        }
        Ok(Self { widths, activation, layers })
    }

    /// `depth` square identity layers with zero biases.
    pub fn identity(width: usize, depth: usize, activation: Activation) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(Error::InvalidArgument("identity network needs width and depth >= 1".into()));
        }
        let layers = (0..depth).map(|_| Layer { weights: Matrix::identity(width), bias: vec![0.0; width] }).collect();
        Self::from_layers(activation, layers)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Mutable flat views in `[W_1, b_1, W_2, b_2, …]` order.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn layer_activation(&self, k: usize) -> Activation {
        if k + 1 == self.layers.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }

    /// Forward pass over a batch whose columns are samples.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        if x.rows() != self.input_width() {
            return Err(Error::Shape(format!(
                "network expects {} input features, batch has {}",
                self.input_width(),
                x.rows()
            )));
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap_or(x);
            let mut z = layer.weights.matmul(prev);
            for (i, &b) in layer.bias.iter().enumerate() {
                z.row_mut(i).iter_mut().for_each(|v| *v += b);
            }
            let act = self.layer_activation(k);
            let h = z.map(|v| act.apply(v));
            pre_activations.push(z);
            activations.push(h);
        }
        Ok(ForwardTrace { input: x.clone(), pre_activations, activations })
    }

    /// Output only.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut trace = self.forward(x)?;
        Ok(trace.activations.pop().unwrap())
    }

    /// Chain rule from `output_grad = ∂F/∂output` down to every weight and
    /// bias, plus the gradient of the configured penalty. L1 uses the
    /// subgradient 0 at exactly-zero weights.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &Matrix, reg: Regularization) -> Result<ParamGradients> {
        let layers = self.layers.len();
        if trace.activations.len() != layers
            || trace.input.rows() != self.input_width()
            || trace.activations.iter().zip(&self.widths[1..]).any(|(a, &w)| a.rows() != w)
        {
            return Err(Error::Shape("trace was not produced by this network".into()));
        }
        if output_grad.shape() != trace.output().shape() {
            return Err(Error::Shape(format!(
                "output gradient is {:?}, output is {:?}",
                output_grad.shape(),
                trace.output().shape()
            )));
        }

        let mut weights = vec![Matrix::zeros(1, 1); layers];
        let mut biases = vec![Vec::new(); layers];
        // delta = ∂F/∂pre for the current layer; the output layer is linear
        let mut delta = output_grad.clone();
        for k in (0..layers).rev() {
            let prev = if k == 0 { &trace.input } else { &trace.activations[k - 1] };
            let mut gw = delta.matmul_nt(prev);
            if !reg.is_zero() {
                let w = &self.layers[k].weights;
                gw = gw.zip_with(w, |g, w| g + reg.l1 * sign(w) + 2.0 * reg.l2 * w);
            }
            weights[k] = gw;
            biases[k] = (0..delta.rows()).map(|i| delta.row(i).iter().sum()).collect();
            if k > 0 {
                let upstream = self.layers[k].weights.matmul_tn(&delta);
                let act = self.layer_activation(k - 1);
                let pre = &trace.pre_activations[k - 1];
                let post = &trace.activations[k - 1];
                delta = Matrix::from_fn(upstream.rows(), upstream.cols(), |i, j| {
                    upstream[(i, j)] * act.derivative(pre[(i, j)], post[(i, j)])
                });
            }
        }
        Ok(ParamGradients { weights, biases })
    }

    /// `l1·Σ|W| + l2·Σ W²` over all weight matrices.
    pub fn penalty(&self, reg: Regularization) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                let w = l.weights.as_slice();
                reg.l1 * w.iter().map(|v| v.abs()).sum::<f64>() + reg.l2 * w.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    /// Serialize as an MVNN block:
    ///
    /// ```text
    /// b"MVNN" | u32 version | u64+bytes activation name | u64 layer count
    /// then per layer: MVMX weights (out × in), MVMX bias (out × 1)
    /// ```
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(NETWORK_MAGIC)?;
        w.write_all(&NETWORK_VERSION.to_le_bytes())?;
        write_string(w, self.activation.name())?;
        w.write_all(&(self.layers.len() as u64).to_le_bytes())?;
        for layer in &self.layers {
            write_matrix(w, &layer.weights)?;
            write_matrix(w, &Matrix::from_vec(layer.bias.len(), 1, layer.bias.clone())?)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_magic(r, NETWORK_MAGIC)?;
        let version = read_u32(r, "network header")?;
        if version != NETWORK_VERSION {
            return Err(Error::Format(format!("unsupported network format version {version}")));
        }
        let activation: Activation = read_string(r, "activation name")?.parse()?;
        let count = read_u64(r, "network header")?;
        if count == 0 || count > 4096 {
            return Err(Error::Format(format!("implausible layer count {count}")));
        }
        let mut layers = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let weights = read_matrix(r)?;
            let bias = read_matrix(r)?;
            if bias.cols() != 1 {
                return Err(Error::Format(format!("bias block has shape {:?}", bias.shape())));
            }
            layers.push(Layer { weights, bias: bias.into_vec() });
        }
        Self::from_layers(activation, layers).map_err(|e| Error::Format(format!("inconsistent network: {e}")))
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch() -> Matrix {
        Matrix::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.5, 0.25, -0.75]]).unwrap()
    }

    #[test]
    fn paper_architecture_shapes() {
        let net = init_network(&[2, 10, 10, 10, 2], Activation::Sigmoid, 1).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(|l| l.weights.shape()).collect();
        assert_eq!(shapes, vec![(10, 2), (10, 10), (10, 10), (2, 10)]);
        assert!(net.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(net.num_params(), 20 + 10 + 100 + 10 + 100 + 10 + 20 + 2);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_network(&[3, 5, 2], Activation::Tanh, 42).unwrap();
        let b = init_network(&[3, 5, 2], Activation::Tanh, 42).unwrap();
        let c = init_network(&[3, 5, 2], Activation::Tanh, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let limit = glorot_limit(3, 5);
        assert!(a.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_rejects_bad_widths() {
        assert!(init_network(&[], Activation::Relu, 0).is_err());
        assert!(init_network(&[3], Activation::Relu, 0).is_err());
        assert!(init_network(&[3, 0, 2], Activation::Relu, 0).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let layers = vec![
            Layer { weights: Matrix::zeros(4, 2), bias: vec![0.0; 4] },
            Layer { weights: Matrix::zeros(3, 4), bias: vec![0.0; 3] },
        ];
        let net = MlpNetwork::from_layers(Activation::Sigmoid, layers).unwrap();
        let out = net.predict(&batch()).unwrap();
        assert_eq!(out.shape(), (3, 3));
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn identity_network_is_identity() {
        let net = MlpNetwork::identity(2, 3, Activation::Identity).unwrap();
        assert_eq!(net.predict(&batch()).unwrap(), batch());
    }

    #[test]
    fn two_layer_forward_by_hand() {
        let w1 = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap();
        let w2 = Matrix::from_rows(&[vec![2.0, -3.0]]).unwrap();
        let net = MlpNetwork::from_layers(
            Activation::Tanh,
            vec![Layer { weights: w1, bias: vec![0.1, -0.2] }, Layer { weights: w2, bias: vec![0.3] }],
        )
        .unwrap();
        let x = batch();
        let out = net.predict(&x).unwrap();
        for col in 0..3 {
            let (a, b) = (x[(0, col)], x[(1, col)]);
            let h1 = (a - b + 0.1).tanh();
            let h2 = (0.5 * a + 2.0 * b - 0.2).tanh();
            let expected = 2.0 * h1 - 3.0 * h2 + 0.3;
            assert!((out[(0, col)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn relu_trace_is_exact() {
        let net = init_network(&[2, 6, 6, 2], Activation::Relu, 9).unwrap();
        let trace = net.forward(&batch()).unwrap();
        for k in 0..2 {
            let expected = trace.pre_activations[k].map(|v| v.max(0.0));
            assert_eq!(trace.activations[k], expected);
        }
    }

    #[test]
    fn zero_upstream_gradient() {
        let net = init_network(&[2, 4, 2], Activation::Sigmoid, 3).unwrap();
        let trace = net.forward(&batch()).unwrap();
        let grads = net.backward(&trace, &Matrix::zeros(2, 3), Regularization::default()).unwrap();
        assert!(grads.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let w = Matrix::from_rows(&[vec![0.3, -0.7], vec![1.2, 0.4], vec![0.0, 1.0]]).unwrap();
        let net = MlpNetwork::from_layers(Activation::Sigmoid, vec![Layer { weights: w, bias: vec![0.0; 3] }]).unwrap();
        let x = batch();
        let delta = Matrix::from_fn(3, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let grads = net.backward(&net.forward(&x).unwrap(), &delta, Regularization::default()).unwrap();
        assert!(grads.weights[0].max_abs_diff(&delta.matmul_nt(&x)) < 1e-15);
        assert_eq!(grads.biases[0], vec![-1.5, 1.5, 4.5]);
    }

    #[test]
    fn l1_subgradient_is_zero_at_zero_weights() {
        let w = Matrix::from_rows(&[vec![0.0, -2.0]]).unwrap();
        let net = MlpNetwork::from_layers(Activation::Identity, vec![Layer { weights: w, bias: vec![0.0] }]).unwrap();
        let trace = net.forward(&batch()).unwrap();
        let reg = Regularization { l1: 0.5, l2: 0.25 };
        let grads = net.backward(&trace, &Matrix::zeros(1, 3), reg).unwrap();
        assert_eq!(grads.weights[0].as_slice(), &[0.0, -0.5 - 1.0]);
        assert_eq!(grads.biases[0], vec![0.0]);
        assert_eq!(net.penalty(reg), 0.5 * 2.0 + 0.25 * 4.0);
    }

    #[test]
    fn shape_errors() {
        let net = init_network(&[2, 4, 2], Activation::Sigmoid, 3).unwrap();
        assert!(net.forward(&Matrix::zeros(3, 5)).is_err());
        let trace = net.forward(&batch()).unwrap();
        assert!(net.backward(&trace, &Matrix::zeros(2, 4), Regularization::default()).is_err());
        let other = init_network(&[2, 5, 2], Activation::Sigmoid, 3).unwrap();
        assert!(other.backward(&trace, &Matrix::zeros(2, 3), Regularization::default()).is_err());
    }

    #[test]
    fn serialization_round_trip_and_corruption() {
        let net = init_network(&[3, 7, 2], Activation::Tanh, 5).unwrap();
        let mut buf = Vec::new();
        net.write_to(&mut buf).unwrap();
        assert_eq!(MlpNetwork::read_from(&mut buf.as_slice()).unwrap(), net);
        assert!(MlpNetwork::read_from(&mut &buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'Z';
        assert!(MlpNetwork::read_from(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn activation_names() {
        for a in [Activation::Sigmoid, Activation::Relu, Activation::Tanh, Activation::Identity] {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("softplus".parse::<Activation>().is_err());
    }
}
