use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mh,
    Hmc,
    Pp,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Mh => "MH",
            SamplerKind::Hmc => "HMC",
            SamplerKind::Pp => "PP",
        })
    }
}

/// Sampler-specific counters beyond the plain acceptance count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// HMC trajectories rejected for a non-finite or huge energy error.
    #[serde(default)]
    pub divergences: usize,
    #[serde(default)]
    pub swap_attempts: usize,
    #[serde(default)]
    pub swap_accepts: usize,
}

/// Realized Markov chain, stored iteration-major (one row per iteration).
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    draws: Vec<f64>,
    dim: usize,
    burnin: usize,
    pub seed: u64,
    pub accepted: usize,
    pub sampler: SamplerKind,
    pub runtime_seconds: f64,
    pub stats: ChainStats,
}

impl Chain {
    pub fn new(draws: Vec<f64>, dim: usize, sampler: SamplerKind, seed: u64) -> Result<Self> {
        if dim == 0 || !draws.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                what: "chain values (a multiple of the dimension)",
                expected: dim.max(1) * (draws.len() / dim.max(1)),
                actual: draws.len(),
            });
        }
        Ok(Self {
            draws,
            dim,
            burnin: 0,
            seed,
            accepted: 0,
            sampler,
            runtime_seconds: 0.0,
            stats: ChainStats::default(),
        })
    }

    pub(crate) fn with_capacity(dim: usize, iterations: usize, sampler: SamplerKind, seed: u64) -> Self {
        Self {
            draws: Vec::with_capacity(dim * iterations),
            dim,
            burnin: 0,
            seed,
            accepted: 0,
            sampler,
            runtime_seconds: 0.0,
            stats: ChainStats::default(),
        }
    }

    pub(crate) fn push(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.draws.extend_from_slice(state);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total number of iterations, burn-in included.
    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn burnin(&self) -> usize {
        self.burnin
    }

    pub fn set_burnin(&mut self, burnin: usize) -> Result<()> {
        if burnin >= self.len() {
            return Err(Error::InvalidConfig(format!(
                "burn-in {burnin} must be smaller than the chain length {}",
                self.len()
            )));
        }
        self.burnin = burnin;
        Ok(())
    }

    pub fn with_burnin(mut self, burnin: usize) -> Result<Self> {
        self.set_burnin(burnin)?;
        Ok(self)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.draws.chunks_exact(self.dim)
    }

    /// All draws, row-major, burn-in included.
    pub fn values(&self) -> &[f64] {
        &self.draws
    }

    /// Post-burn-in draws, row-major.
    pub fn post_burnin(&self) -> &[f64] {
        &self.draws[self.burnin * self.dim..]
    }

    /// The last `len` draws (all post-burn-in draws if fewer are available).
    pub fn tail(&self, len: usize) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let available = self.len() - self.burnin;
        let start = self.len() - len.min(available);
        self.draws[start * self.dim..].chunks_exact(self.dim)
    }

    /// Trace of one coordinate over all iterations.
    pub fn coordinate(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.dim {
            return Err(Error::InvalidInput(format!(
                "coordinate {index} out of range for dimension {}",
                self.dim
            )));
        }
        Ok(self.rows().map(|r| r[index]).collect())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.accepted as f64 / self.len() as f64
        }
    }
}
