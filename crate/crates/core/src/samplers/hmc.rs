use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, SamplerKind};
use super::mh::accept;
use super::target::GradientLogDensity;
use super::{check_init, rng_from_seed};
use crate::error::{Error, Result};

/// Energy errors larger than this reject the trajectory outright.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub leapfrog_steps: usize,
    pub step_size: f64,
}

impl HmcConfig {
    pub fn new(leapfrog_steps: usize, step_size: f64) -> Result<Self> {
        let c = Self {
            leapfrog_steps,
            step_size,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("HMC needs at least one leapfrog step".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "HMC step size must be positive, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Integrates Hamiltonian dynamics for `H = -log p(theta) + |r|^2 / 2` with
/// `steps` leapfrog steps of size `step_size`, updating `theta` and
/// `momentum` in place.
///
/// `grad` must hold the gradient of the log-density at the starting
/// `theta`; on return it holds the gradient at the final position. Returns
/// the log-density at the final position.
pub fn leapfrog<T: GradientLogDensity + ?Sized>(
    target: &T,
    theta: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    step_size: f64,
    steps: usize,
) -> f64 {
    let half = 0.5 * step_size;
    for (r, g) in momentum.iter_mut().zip(grad.iter()) {
        *r += half * g;
    }
    let mut lp = f64::NAN;
    for step in 0..steps {
        for (t, r) in theta.iter_mut().zip(momentum.iter()) {
            *t += step_size * r;
        }
        lp = target.log_density_and_gradient(theta, grad);
        if !lp.is_finite() {
            return lp;
        }
        let scale = if step + 1 == steps { half } else { step_size };
        for (r, g) in momentum.iter_mut().zip(grad.iter()) {
            *r += scale * g;
        }
    }
    lp
}

fn kinetic(momentum: &[f64]) -> f64 {
    0.5 * momentum.iter().map(|r| r * r).sum::<f64>()
}

/// Runs `iterations` HMC transitions with identity mass matrix, refreshing
/// the momentum from `N(0, I)` every iteration.
pub fn hmc_chain<T: GradientLogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    config: &HmcConfig,
    iterations: usize,
    seed: u64,
) -> Result<Chain> {
    config.validate()?;
    check_init(target.dim(), init)?;
    let dim = init.len();
    let mut grad = vec![0.0; dim];
    let mut current_lp = target.log_density_and_gradient(init, &mut grad);
    if !current_lp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Startup(
            "log-target or its gradient is not finite at the initial state".into(),
        ));
    }
    let started = Instant::now();
    let mut rng = rng_from_seed(seed);
    let mut chain = Chain::with_capacity(dim, iterations, SamplerKind::Hmc, seed);
    let mut current = init.to_vec();
    let mut current_grad = grad.clone();
    let mut theta = vec![0.0; dim];
    let mut momentum = vec![0.0; dim];
    for _ in 0..iterations {
        for r in momentum.iter_mut() {
            *r = rng.sample(StandardNormal);
        }
        let h0 = -current_lp + kinetic(&momentum);
        theta.copy_from_slice(&current);
        grad.copy_from_slice(&current_grad);
        let lp = leapfrog(
            target,
            &mut theta,
            &mut momentum,
            &mut grad,
            config.step_size,
            config.leapfrog_steps,
        );
        let h1 = -lp + kinetic(&momentum);
        let delta = h1 - h0;
        if !delta.is_finite() || delta.abs() > DIVERGENCE_THRESHOLD {
            chain.stats.divergences += 1;
        } else if accept(-delta, &mut rng) {
            std::mem::swap(&mut current, &mut theta);
            std::mem::swap(&mut current_grad, &mut grad);
            current_lp = lp;
            chain.accepted += 1;
        }
        chain.push(&current);
    }
    chain.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(chain)
}
