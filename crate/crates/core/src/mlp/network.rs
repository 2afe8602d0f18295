use super::{softmax_in_place, Activation, Architecture};

/// Per-layer pre-activations `g_j` and outputs `h_j` of one forward pass.
///
/// Reused across samples so a likelihood evaluation allocates once per
/// dataset pass rather than once per sample.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `pre[j-1]` holds `g_j` for `j = 1..=r`.
    pre: Vec<Vec<f64>>,
    /// `post[j]` holds `h_j` for `j = 0..=r`; `post[0]` is the input.
    post: Vec<Vec<f64>>,
}

impl Activations {
    pub fn new(arch: &Architecture) -> Self {
        let widths = arch.layer_widths();
        Self {
            pre: widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
            post: widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }

    /// Runs the forward recursion. Lengths must already be validated.
    pub fn run(&mut self, arch: &Architecture, theta: &[f64], x: &[f64]) {
        self.post[0].copy_from_slice(x);
        for layer in 1..=arch.depth() {
            let (weights, bias) = arch.layer_params(theta, layer);
            let cols = arch.layer_widths()[layer - 1];
            let (before, after) = self.post.split_at_mut(layer);
            let input = &before[layer - 1];
            let g = &mut self.pre[layer - 1];
            for (k, gk) in g.iter_mut().enumerate() {
                let row = &weights[k * cols..(k + 1) * cols];
                *gk = bias[k] + row.iter().zip(input).map(|(w, h)| w * h).sum::<f64>();
            }
            let h = &mut after[0];
            match arch.activation(layer) {
                Activation::Softmax => {
                    h.copy_from_slice(g);
                    softmax_in_place(h);
                }
                act => {
                    for (hk, &gk) in h.iter_mut().zip(g.iter()) {
                        *hk = act.apply(gk);
                    }
                }
            }
        }
    }

    pub fn output(&self) -> &[f64] {
        &self.post[self.post.len() - 1]
    }

    /// Output-layer pre-activations `g_r`.
    pub(crate) fn output_logits(&self) -> &[f64] {
        &self.pre[self.pre.len() - 1]
    }

    /// Accumulates into `grad` the gradient of a per-sample objective, given
    /// `delta = d objective / d g_r` at the output layer. `delta` and
    /// `scratch` are overwritten.
    pub(crate) fn backpropagate(
        &self,
        arch: &Architecture,
        theta: &[f64],
        delta: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
        grad: &mut [f64],
    ) {
        let widths = arch.layer_widths();
        for layer in (1..=arch.depth()).rev() {
            let (rows, cols) = (widths[layer], widths[layer - 1]);
            let input = &self.post[layer - 1];
            let w_start = arch.weight_index(layer, 0, 0);
            let b_start = w_start + rows * cols;
            for k in 0..rows {
                let d = delta[k];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[w_start + k * cols..w_start + (k + 1) * cols];
                for (gw, h) in row.iter_mut().zip(input) {
                    *gw += d * h;
                }
                grad[b_start + k] += d;
            }
            if layer == 1 {
                break;
            }
            let (weights, _) = arch.layer_params(theta, layer);
            let act = arch.activation(layer - 1);
            let g_prev = &self.pre[layer - 2];
            scratch.clear();
            scratch.extend((0..cols).map(|l| {
                let back: f64 = (0..rows).map(|k| weights[k * cols + l] * delta[k]).sum();
                back * act.derivative(g_prev[l], input[l])
            }));
            std::mem::swap(delta, scratch);
        }
    }
}
