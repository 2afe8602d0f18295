use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, SamplerKind};
use super::target::LogDensity;
use super::{check_init, rng_from_seed};
use crate::error::{Error, Result};

/// Random-walk Metropolis with proposal `N(theta, proposal_variance * I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    pub proposal_variance: f64,
}

impl MhConfig {
    pub fn new(proposal_variance: f64) -> Result<Self> {
        let c = Self { proposal_variance };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_variance > 0.0 && self.proposal_variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "MH proposal variance must be positive, got {}",
                self.proposal_variance
            )));
        }
        Ok(())
    }
}

/// `min{1, exp(proposed - current)}` for a symmetric proposal. Non-finite
/// proposals get probability 0.
pub fn acceptance_probability(current_log_density: f64, proposed_log_density: f64) -> f64 {
    let delta = proposed_log_density - current_log_density;
    if delta.is_nan() || proposed_log_density.is_nan() || proposed_log_density == f64::NEG_INFINITY {
        0.0
    } else if delta >= 0.0 {
        1.0
    } else {
        delta.exp()
    }
}

/// Metropolis accept/reject in log space: accepts with probability
/// `min{1, exp(log_ratio)}`. Draws a uniform only when `log_ratio < 0`.
pub(crate) fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Fills `proposal` with `current + sd * z`, `z ~ N(0, I)`.
pub(crate) fn propose<R: Rng + ?Sized>(current: &[f64], sd: f64, proposal: &mut [f64], rng: &mut R) {
    for (p, c) in proposal.iter_mut().zip(current) {
        let z: f64 = rng.sample(StandardNormal);
        *p = c + sd * z;
    }
}

/// Runs `iterations` random-walk Metropolis steps from `init`.
///
/// Each row of the returned chain is the state after one step; rejected
/// proposals repeat the current state.
pub fn mh_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    config: &MhConfig,
    iterations: usize,
    seed: u64,
) -> Result<Chain> {
    config.validate()?;
    check_init(target.dim(), init)?;
    let mut current_lp = target.log_density(init);
    if !current_lp.is_finite() {
        return Err(Error::Startup(format!(
            "log-target is not finite at the initial state ({current_lp})"
        )));
    }
    let started = Instant::now();
    let mut rng = rng_from_seed(seed);
    let sd = config.proposal_variance.sqrt();
    let mut chain = Chain::with_capacity(target.dim(), iterations, SamplerKind::Mh, seed);
    let mut current = init.to_vec();
    let mut proposal = vec![0.0; init.len()];
    for _ in 0..iterations {
        propose(&current, sd, &mut proposal, &mut rng);
        let proposed_lp = target.log_density(&proposal);
        if proposed_lp.is_finite() && accept(proposed_lp - current_lp, &mut rng) {
            std::mem::swap(&mut current, &mut proposal);
            current_lp = proposed_lp;
            chain.accepted += 1;
        }
        chain.push(&current);
    }
    chain.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(chain)
}
