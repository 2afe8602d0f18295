//! Markov chain samplers for MLP parameter posteriors, plus an SGD ensemble
//! baseline.
//!
//! Every sampler is driven by a ChaCha8 generator seeded from a `u64`, so a
//! chain is a pure function of its target, initial state, configuration and
//! seed.

mod chain;
pub mod hmc;
pub mod mh;
pub mod pp;
pub mod sgd;
mod target;

pub use chain::{Chain, ChainStats, SamplerKind};
pub use hmc::{hmc_chain, leapfrog, HmcConfig};
pub use mh::{acceptance_probability, mh_chain, MhConfig};
pub use pp::{pp_chain, pp_normalizer, pp_swap_pmf, swap_log_ratio, PpConfig, PpRun, SwapDistribution};
pub use sgd::{sgd_ensemble, sgd_train, SgdConfig, SgdEnsemble};
pub use target::{GradientLogDensity, IsotropicNormal, LogDensity, MlpPosterior, Tempered, TemperedDensity};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of chain `index` in a multi-chain run.
pub fn chain_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

/// A draw from the prior `N(0, variance I)`, used as the default initial state.
pub fn sample_prior<R: Rng + ?Sized>(dim: usize, variance: f64, rng: &mut R) -> Vec<f64> {
    let sd = variance.sqrt();
    (0..dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Stream reserved for initial states, separate from the sampler streams.
const INIT_STREAM: u64 = u64::MAX;

/// `count` independent prior draws used as starting points of the chain
/// seeded with `seed`.
pub fn initial_states(dim: usize, variance: f64, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(INIT_STREAM);
    (0..count).map(|_| sample_prior(dim, variance, &mut rng)).collect()
}

pub(crate) fn check_init(dim: usize, init: &[f64]) -> Result<()> {
    if init.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "initial state length",
            expected: dim,
            actual: init.len(),
        });
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::Startup("initial state has non-finite entries".into()));
    }
    Ok(())
}
