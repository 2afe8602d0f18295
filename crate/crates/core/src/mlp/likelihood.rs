use std::f64::consts::PI;

use super::network::Activations;
use super::{sigmoid, Architecture, Task};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Event probabilities are clamped to `[PROBABILITY_FLOOR, 1 - PROBABILITY_FLOOR]`
/// before taking logs, so log-targets stay finite.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

fn check_data(arch: &Architecture, data: &LabeledDataset) -> Result<()> {
    if data.num_features() != arch.input_width() {
        return Err(Error::DimensionMismatch {
            what: "dataset feature count",
            expected: arch.input_width(),
            actual: data.num_features(),
        });
    }
    if data.num_classes() != arch.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "dataset class count",
            expected: arch.num_classes(),
            actual: data.num_classes(),
        });
    }
    Ok(())
}

/// Clamped log-probability, plus whether `p` was inside the clamp window
/// (outside it the derivative is zero).
#[inline]
fn clamped_log(p: f64) -> (f64, bool) {
    if p < PROBABILITY_FLOOR {
        (PROBABILITY_FLOOR.ln(), false)
    } else if p > 1.0 - PROBABILITY_FLOOR {
        ((1.0 - PROBABILITY_FLOOR).ln(), false)
    } else {
        (p.ln(), true)
    }
}

/// `log(1 + exp(z))` without overflow or cancellation.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Clamped log-probability of label `y` under a sigmoid output with logit
/// `g`. Works on the log scale, `log h = -softplus(-g)` and
/// `log(1 - h) = -softplus(g)`, so that `1 - h` is never formed; clamping
/// the log is the same as clamping the probability.
#[inline]
fn binary_log_prob(g: f64, y: usize) -> (f64, bool) {
    let lp = if y == 1 { -softplus(-g) } else { -softplus(g) };
    let (lo, hi) = (PROBABILITY_FLOOR.ln(), (1.0 - PROBABILITY_FLOOR).ln());
    if lp < lo {
        (lo, false)
    } else if lp > hi {
        (hi, false)
    } else {
        (lp, true)
    }
}

/// Log-likelihood for the architecture's task (binary cross entropy or cross
/// entropy, negated).
pub fn log_likelihood(arch: &Architecture, theta: &[f64], data: &LabeledDataset) -> Result<f64> {
    arch.check_params(theta)?;
    check_data(arch, data)?;
    let mut acts = Activations::new(arch);
    let mut total = 0.0;
    for (x, y) in data.rows() {
        acts.run(arch, theta, x);
        total += match arch.task() {
            Task::Binary => binary_log_prob(acts.output_logits()[0], y).0,
            Task::Multiclass => clamped_log(acts.output()[y]).0,
        };
    }
    Ok(total)
}

/// Sum over samples of `y log h + (1 - y) log(1 - h)` for a single sigmoid output.
pub fn log_likelihood_binary(arch: &Architecture, theta: &[f64], data: &LabeledDataset) -> Result<f64> {
    if arch.task() != Task::Binary {
        return Err(Error::InvalidArchitecture(
            "binary log-likelihood needs a single sigmoid output".into(),
        ));
    }
    log_likelihood(arch, theta, data)
}

/// Sum over samples of `log h_{y_i}` for a softmax output.
pub fn log_likelihood_multiclass(arch: &Architecture, theta: &[f64], data: &LabeledDataset) -> Result<f64> {
    if arch.task() != Task::Multiclass {
        return Err(Error::InvalidArchitecture(
            "multiclass log-likelihood needs a softmax output".into(),
        ));
    }
    log_likelihood(arch, theta, data)
}

/// Normalized log-density of the isotropic normal prior `N(0, variance I)`.
pub fn log_prior(theta: &[f64], variance: f64) -> f64 {
    debug_assert!(variance > 0.0);
    let n = theta.len() as f64;
    let sq: f64 = theta.iter().map(|t| t * t).sum();
    -0.5 * n * (2.0 * PI * variance).ln() - sq / (2.0 * variance)
}

/// Unnormalized log-posterior: log-likelihood plus normalized log-prior.
pub fn log_posterior(arch: &Architecture, theta: &[f64], data: &LabeledDataset, variance: f64) -> Result<f64> {
    Ok(log_likelihood(arch, theta, data)? + log_prior(theta, variance))
}

/// Log-likelihood together with its gradient, written into `grad`
/// (overwritten, same layout as `theta`).
pub fn log_likelihood_with_gradient(
    arch: &Architecture,
    theta: &[f64],
    data: &LabeledDataset,
    grad: &mut [f64],
) -> Result<f64> {
    arch.check_params(theta)?;
    check_data(arch, data)?;
    if grad.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            what: "gradient buffer length",
            expected: theta.len(),
            actual: grad.len(),
        });
    }
    grad.fill(0.0);
    let mut acts = Activations::new(arch);
    let mut total = 0.0;
    let width = arch.output_width();
    let widest = arch.layer_widths().iter().copied().max().unwrap_or(1);
    let mut delta = Vec::with_capacity(widest);
    let mut scratch = Vec::with_capacity(widest);
    for (x, y) in data.rows() {
        acts.run(arch, theta, x);
        let out = acts.output();
        delta.clear();
        delta.resize(width, 0.0);
        match arch.task() {
            Task::Binary => {
                let g = acts.output_logits()[0];
                let (lp, live) = binary_log_prob(g, y);
                total += lp;
                if live {
                    // d/dg log h = 1 - h = sigmoid(-g) ; d/dg log(1 - h) = -h
                    delta[0] = if y == 1 { sigmoid(-g) } else { -out[0] };
                }
            }
            Task::Multiclass => {
                let (lp, live) = clamped_log(out[y]);
                total += lp;
                if live {
                    for (k, d) in delta.iter_mut().enumerate() {
                        *d = if k == y { 1.0 } else { 0.0 } - out[k];
                    }
                }
            }
        }
        if delta.iter().any(|&d| d != 0.0) {
            acts.backpropagate(arch, theta, &mut delta, &mut scratch, grad);
        }
    }
    Ok(total)
}

/// Exact gradient of [`log_posterior`] by reverse-mode differentiation.
pub fn grad_log_posterior(
    arch: &Architecture,
    theta: &[f64],
    data: &LabeledDataset,
    variance: f64,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; theta.len()];
    log_likelihood_with_gradient(arch, theta, data, &mut grad)?;
    for (g, t) in grad.iter_mut().zip(theta) {
        *g -= t / variance;
    }
    Ok(grad)
}
