//! Multilayer perceptrons for classification.
//!
//! A network with layer widths `k_0, k_1, ..., k_r` maps an input of length
//! `k_0` through `r - 1` hidden layers to `k_r` outputs. Layer `j` computes
//! `g_j = W_j h_{j-1} + b_j` followed by the elementwise activation
//! `h_j = phi_j(g_j)`.
//!
//! Parameters live in one flat vector. For each layer in order, the
//! `k_j x k_{j-1}` weight matrix is stored row-wise, followed by the bias
//! vector of length `k_j`. Chain files written by this crate use the same
//! layout, so the order is part of the on-disk format.

mod likelihood;
mod network;

pub use likelihood::{
    grad_log_posterior, log_likelihood, log_likelihood_binary, log_likelihood_multiclass, log_likelihood_with_gradient,
    log_posterior, log_prior, PROBABILITY_FLOOR,
};
pub use network::Activations;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Softmax,
    Identity,
    Tanh,
    #[serde(rename = "relu")]
    ReLU,
}

impl Activation {
    /// Elementwise activation. Softmax is vector-valued and is applied by
    /// [`softmax_in_place`] instead.
    #[inline]
    pub(crate) fn apply(self, g: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(g),
            Activation::Identity => g,
            Activation::Tanh => g.tanh(),
            Activation::ReLU => g.max(0.0),
            Activation::Softmax => unreachable!("softmax is not elementwise"),
        }
    }

    /// Derivative expressed through the pre-activation `g` and the output `h`.
    #[inline]
    pub(crate) fn derivative(self, g: f64, h: f64) -> f64 {
        match self {
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - h * h,
            // subgradient 0 at the kink
            Activation::ReLU => {
                if g > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softmax => unreachable!("softmax is not elementwise"),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(g: f64) -> f64 {
    1.0 / (1.0 + (-g).exp())
}

/// Max-subtracted softmax.
pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

/// Classification task implied by the output width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ArchitectureSpec", into = "ArchitectureSpec")]
pub struct Architecture {
    widths: Vec<usize>,
    hidden: Activation,
    output: Activation,
    /// Offset of each layer's weight block in the parameter vector.
    offsets: Vec<usize>,
    num_params: usize,
}

/// Serialized form of an [`Architecture`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub layer_widths: Vec<usize>,
    #[serde(default = "default_hidden")]
    pub hidden_activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_activation: Option<Activation>,
}

fn default_hidden() -> Activation {
    Activation::Sigmoid
}

impl TryFrom<ArchitectureSpec> for Architecture {
    type Error = Error;

    fn try_from(spec: ArchitectureSpec) -> Result<Self> {
        match spec.output_activation {
            Some(out) => Architecture::with_activations(spec.layer_widths, spec.hidden_activation, out),
            None => Architecture::new(spec.layer_widths, spec.hidden_activation),
        }
    }
}

impl From<Architecture> for ArchitectureSpec {
    fn from(arch: Architecture) -> Self {
        ArchitectureSpec {
            layer_widths: arch.widths,
            hidden_activation: arch.hidden,
            output_activation: Some(arch.output),
        }
    }
}

impl Architecture {
    /// Network with the given widths and hidden activation. The output
    /// activation follows from the output width: sigmoid for one output
    /// neuron, softmax otherwise.
    pub fn new(widths: Vec<usize>, hidden: Activation) -> Result<Self> {
        let output = match widths.last() {
            Some(1) => Activation::Sigmoid,
            _ => Activation::Softmax,
        };
        Self::with_activations(widths, hidden, output)
    }

    pub fn with_activations(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::InvalidArchitecture(format!(
                "need input, at least one hidden and an output layer, got {} layer widths",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidArchitecture("layer widths must be positive".into()));
        }
        if hidden == Activation::Softmax {
            return Err(Error::InvalidArchitecture(
                "softmax is only permitted at the output layer".into(),
            ));
        }
        let out_width = widths[widths.len() - 1];
        match (output, out_width) {
            (Activation::Sigmoid, 1) => {}
            (Activation::Softmax, w) if w >= 2 => {}
            (o, w) => {
                return Err(Error::InvalidArchitecture(format!(
                    "output activation {o:?} incompatible with output width {w} \
                     (sigmoid needs exactly 1 output, softmax at least 2)"
                )))
            }
        }
        let mut offsets = Vec::with_capacity(widths.len() - 1);
        let mut total = 0;
        for pair in widths.windows(2) {
            offsets.push(total);
            total += pair[1] * (pair[0] + 1);
        }
        Ok(Self {
            widths,
            hidden,
            output,
            offsets,
            num_params: total,
        })
    }

    /// The default MLP used throughout: sigmoid hidden layers.
    pub fn mlp(widths: &[usize]) -> Result<Self> {
        Self::new(widths.to_vec(), Activation::Sigmoid)
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    /// Number of weight layers (the `r` in `k_0..k_r`).
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.num_params
    }

    /// Number of class labels: 2 for a sigmoid output, the output width otherwise.
    pub fn num_classes(&self) -> usize {
        match self.task() {
            Task::Binary => 2,
            Task::Multiclass => self.output_width(),
        }
    }

    pub fn task(&self) -> Task {
        if self.output == Activation::Sigmoid {
            Task::Binary
        } else {
            Task::Multiclass
        }
    }

    /// Flat index of weight `W_j[k, l]`; `layer` is 1-based as in `W_1..W_r`.
    pub fn weight_index(&self, layer: usize, row: usize, col: usize) -> usize {
        assert!(layer >= 1 && layer <= self.depth(), "layer {layer} out of range");
        let (rows, cols) = (self.widths[layer], self.widths[layer - 1]);
        assert!(row < rows && col < cols, "weight ({row}, {col}) out of range");
        self.offsets[layer - 1] + row * cols + col
    }

    /// Flat index of bias `b_j[k]`; `layer` is 1-based.
    pub fn bias_index(&self, layer: usize, row: usize) -> usize {
        assert!(layer >= 1 && layer <= self.depth(), "layer {layer} out of range");
        let (rows, cols) = (self.widths[layer], self.widths[layer - 1]);
        assert!(row < rows, "bias {row} out of range");
        self.offsets[layer - 1] + rows * cols + row
    }

    pub(crate) fn activation(&self, layer: usize) -> Activation {
        if layer == self.depth() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Splits a parameter vector into `(W_j, b_j)` slices for layer `layer` (1-based).
    pub(crate) fn layer_params<'a>(&self, theta: &'a [f64], layer: usize) -> (&'a [f64], &'a [f64]) {
        let (rows, cols) = (self.widths[layer], self.widths[layer - 1]);
        let start = self.offsets[layer - 1];
        let w_end = start + rows * cols;
        (&theta[start..w_end], &theta[w_end..w_end + rows])
    }

    pub(crate) fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::DimensionMismatch {
                what: "parameter vector length",
                expected: self.num_params,
                actual: theta.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::DimensionMismatch {
                what: "input length",
                expected: self.input_width(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Output `h_r(x, theta)`: a probability for sigmoid output, a
    /// probability vector for softmax output.
    pub fn forward(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        self.check_input(x)?;
        let mut acts = Activations::new(self);
        acts.run(self, theta, x);
        Ok(acts.output().to_vec())
    }

    /// Event probabilities over the class labels. For a sigmoid output this
    /// is `(1 - h, h)`.
    pub fn event_probabilities(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.forward(theta, x)?;
        if self.task() == Task::Binary {
            let h = out[0];
            out = vec![1.0 - h, h];
        }
        Ok(out)
    }
}

pub fn parameter_count(arch: &Architecture) -> usize {
    arch.parameter_count()
}
