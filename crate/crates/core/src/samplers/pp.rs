//! Power-posterior population sampling.
//!
//! Chains `0..=m` target the tempered densities `t_i * loglik + logprior`
//! with `t_m = 1`. Every iteration each chain takes one random-walk
//! Metropolis step against its own tempered target, then one swap of states
//! between a pair of chains is attempted. The first chain `i` of the pair is
//! uniform over `0..=m`; its partner `j` is drawn with probability
//! proportional to `exp(-beta |j - i|)`, so nearby temperatures are
//! proposed more often.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, SamplerKind};
use super::mh::{accept, propose, MhConfig};
use super::target::TemperedDensity;
use super::{check_init, rng_from_seed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpConfig {
    pub temperatures: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub within_chain: MhConfig,
}

fn default_beta() -> f64 {
    0.5
}

impl PpConfig {
    /// `chains` copies of the untempered posterior, all at temperature 1.
    pub fn untempered(chains: usize, within_chain: MhConfig) -> Self {
        Self {
            temperatures: vec![1.0; chains],
            beta: default_beta(),
            within_chain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.within_chain.validate()?;
        if self.temperatures.len() < 2 {
            return Err(Error::InvalidConfig(
                "power-posterior sampling needs at least two chains".into(),
            ));
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidConfig(format!("temperature {t} outside [0, 1]")));
        }
        if self.temperatures.last() != Some(&1.0) {
            return Err(Error::InvalidConfig(
                "the last temperature of the schedule must be 1".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Index `m` of the untempered chain.
    pub fn max_index(&self) -> usize {
        self.temperatures.len() - 1
    }
}

/// `gamma_i = sum_{j != i} exp(-beta |j - i|)` over `j in 0..=m`, in closed form.
pub fn pp_normalizer(i: usize, m: usize, beta: f64) -> Result<f64> {
    check_swap_args(i, m, beta)?;
    Ok((-beta).exp() * scaled_normalizer(i, m, beta))
}

/// `gamma_i * exp(beta)`, which stays finite for large `beta`.
fn scaled_normalizer(i: usize, m: usize, beta: f64) -> f64 {
    let (i, m) = (i as f64, m as f64);
    (2.0 - (-beta * i).exp() - (-beta * (m - i)).exp()) / -(-beta).exp_m1()
}

fn check_swap_args(i: usize, m: usize, beta: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("a single chain has no swap partner".into()));
    }
    if i > m {
        return Err(Error::InvalidInput(format!("chain index {i} exceeds {m}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Categorical distribution of the swap partner `j` of chain `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDistribution {
    from: usize,
    /// Probability of each `j in 0..=m`; zero at `j = from`.
    probabilities: Vec<f64>,
}

impl SwapDistribution {
    pub fn from_index(&self) -> usize {
        self.from
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, j: usize) -> f64 {
        self.probabilities[j]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = self.from;
        for (j, &p) in self.probabilities.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
        // rounding left u above the final cumulative sum
        last
    }
}

/// Swap-partner distribution `alpha_i(j) = exp(-beta |j - i|) / gamma_i`.
pub fn pp_swap_pmf(i: usize, m: usize, beta: f64) -> Result<SwapDistribution> {
    check_swap_args(i, m, beta)?;
    let scaled = scaled_normalizer(i, m, beta);
    let probabilities = (0..=m)
        .map(|j| {
            if j == i {
                0.0
            } else {
                let distance = i.abs_diff(j) as f64;
                (-beta * (distance - 1.0)).exp() / scaled
            }
        })
        .collect();
    Ok(SwapDistribution { from: i, probabilities })
}

/// Log acceptance ratio for exchanging the states of chains at temperatures
/// `t_i` and `t_j` whose current log-likelihoods are `ll_i` and `ll_j`. The
/// untempered prior cancels.
pub fn swap_log_ratio(t_i: f64, t_j: f64, ll_i: f64, ll_j: f64) -> f64 {
    if t_i == t_j {
        return 0.0;
    }
    (t_i - t_j) * (ll_j - ll_i)
}

/// Output of a population run.
#[derive(Debug, Clone)]
pub struct PpRun {
    /// Trajectory of the temperature-1 slot.
    pub chain: Chain,
    /// Trajectory of every temperature slot, index-aligned with the schedule.
    pub population: Vec<Chain>,
}

impl PpRun {
    pub fn swap_acceptance_rate(&self) -> f64 {
        let s = &self.chain.stats;
        if s.swap_attempts == 0 {
            0.0
        } else {
            s.swap_accepts as f64 / s.swap_attempts as f64
        }
    }
}

struct Slot {
    theta: Vec<f64>,
    log_likelihood: f64,
    log_prior: f64,
    rng: ChaCha8Rng,
}

/// Runs power-posterior sampling for `iterations` iterations.
///
/// `inits` holds one starting vector per temperature. Within-chain moves
/// and swap selection use independent ChaCha streams derived from `seed`.
pub fn pp_chain<T: TemperedDensity + ?Sized>(
    target: &T,
    inits: &[Vec<f64>],
    config: &PpConfig,
    iterations: usize,
    seed: u64,
) -> Result<PpRun> {
    config.validate()?;
    if inits.len() != config.temperatures.len() {
        return Err(Error::DimensionMismatch {
            what: "initial states (one per temperature)",
            expected: config.temperatures.len(),
            actual: inits.len(),
        });
    }
    let dim = target.dim();
    let mut slots = Vec::with_capacity(inits.len());
    for (i, init) in inits.iter().enumerate() {
        check_init(dim, init)?;
        let log_likelihood = target.log_likelihood(init);
        let log_prior = target.log_prior(init);
        if !(log_likelihood.is_finite() && log_prior.is_finite()) {
            return Err(Error::Startup(format!(
                "log-target is not finite at the initial state of chain {i}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        rng.set_stream(i as u64 + 1);
        slots.push(Slot {
            theta: init.clone(),
            log_likelihood,
            log_prior,
            rng,
        });
    }
    let m = config.max_index();
    let pmfs: Vec<SwapDistribution> = (0..=m).map(|i| pp_swap_pmf(i, m, config.beta)).collect::<Result<_>>()?;
    let temps = &config.temperatures;
    let sd = config.within_chain.proposal_variance.sqrt();

    let started = Instant::now();
    let mut swap_rng = rng_from_seed(seed);
    swap_rng.set_stream(0);
    let mut population: Vec<Chain> = (0..=m)
        .map(|_| Chain::with_capacity(dim, iterations, SamplerKind::Pp, seed))
        .collect();
    let mut proposal = vec![0.0; dim];
    let mut swap_attempts = 0;
    let mut swap_accepts = 0;

    for _ in 0..iterations {
        for (i, slot) in slots.iter_mut().enumerate() {
            let t = temps[i];
            propose(&slot.theta, sd, &mut proposal, &mut slot.rng);
            let ll = target.log_likelihood(&proposal);
            let lp = target.log_prior(&proposal);
            if ll.is_finite() && lp.is_finite() {
                let log_ratio = t * (ll - slot.log_likelihood) + (lp - slot.log_prior);
                if accept(log_ratio, &mut slot.rng) {
                    std::mem::swap(&mut slot.theta, &mut proposal);
                    slot.log_likelihood = ll;
                    slot.log_prior = lp;
                    population[i].accepted += 1;
                }
            }
        }

        let i = swap_rng.random_range(0..=m);
        let j = pmfs[i].sample(&mut swap_rng);
        swap_attempts += 1;
        let log_ratio = swap_log_ratio(temps[i], temps[j], slots[i].log_likelihood, slots[j].log_likelihood);
        if accept(log_ratio, &mut swap_rng) {
            swap_accepts += 1;
            let (lo, hi) = (i.min(j), i.max(j));
            let (left, right) = slots.split_at_mut(hi);
            let (a, b) = (&mut left[lo], &mut right[0]);
            std::mem::swap(&mut a.theta, &mut b.theta);
            std::mem::swap(&mut a.log_likelihood, &mut b.log_likelihood);
            std::mem::swap(&mut a.log_prior, &mut b.log_prior);
        }

        for (chain, slot) in population.iter_mut().zip(&slots) {
            chain.push(&slot.theta);
        }
    }

    let runtime = started.elapsed().as_secs_f64();
    for chain in population.iter_mut() {
        chain.runtime_seconds = runtime;
        chain.stats.swap_attempts = swap_attempts;
        chain.stats.swap_accepts = swap_accepts;
    }
    let chain = population[m].clone();
    Ok(PpRun { chain, population })
}
