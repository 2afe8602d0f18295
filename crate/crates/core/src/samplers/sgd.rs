use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng_from_seed;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::mlp::{self, Architecture};
use crate::predictive;

/// Ensemble training by repeated minibatch gradient ascent on the
/// log-likelihood, keeping solutions whose test accuracy exceeds a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Accuracy fraction a solution must exceed to be kept.
    pub accept_threshold: f64,
    pub ensemble_size: usize,
    /// Initial values are drawn from `N(0, init_variance I)`.
    #[serde(default = "default_init_variance")]
    pub init_variance: f64,
    /// Give up after this many training sessions.
    #[serde(default = "default_max_sessions")]
    pub max_sessions: usize,
}

fn default_init_variance() -> f64 {
    10.0
}

fn default_max_sessions() -> usize {
    100_000
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 50,
            learning_rate: 0.002,
            accept_threshold: 0.85,
            ensemble_size: 1000,
            init_variance: default_init_variance(),
            max_sessions: default_max_sessions(),
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.ensemble_size == 0 || self.max_sessions == 0 {
            return Err(Error::InvalidConfig(
                "epochs, batch size, ensemble size and max sessions must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.accept_threshold > 0.0 && self.accept_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "acceptance threshold must lie in (0, 1), got {}",
                self.accept_threshold
            )));
        }
        if !(self.init_variance > 0.0) {
            return Err(Error::InvalidConfig("init variance must be positive".into()));
        }
        Ok(())
    }
}

/// One training session from `theta`: `epochs` passes over shuffled
/// minibatches, each applying `theta <- theta + lr * grad loglik(batch)`.
pub fn sgd_train<R: Rng + ?Sized>(
    arch: &Architecture,
    train: &LabeledDataset,
    theta: &mut [f64],
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    rng: &mut R,
) -> Result<()> {
    arch.check_params(theta)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; theta.len()];
    for _ in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(batch_size) {
            let subset = train.select(batch);
            mlp::log_likelihood_with_gradient(arch, theta, &subset, &mut grad)?;
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t += learning_rate * g;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdEnsemble {
    pub solutions: Vec<Vec<f64>>,
    /// Test accuracy of each accepted solution, as a fraction.
    pub accuracies: Vec<f64>,
    /// Sessions run, accepted or not.
    pub sessions: usize,
}

/// Trains sessions until `ensemble_size` solutions beat the accuracy
/// threshold on `test`. Session `k` uses ChaCha stream `k` of `seed`.
pub fn sgd_ensemble(
    arch: &Architecture,
    train: &LabeledDataset,
    test: &LabeledDataset,
    config: &SgdConfig,
    seed: u64,
) -> Result<SgdEnsemble> {
    config.validate()?;
    let sd = config.init_variance.sqrt();
    let mut out = SgdEnsemble {
        solutions: Vec::new(),
        accuracies: Vec::new(),
        sessions: 0,
    };
    while out.solutions.len() < config.ensemble_size {
        if out.sessions == config.max_sessions {
            return Err(Error::Numerical(format!(
                "only {} of {} solutions reached the accuracy threshold after {} sessions",
                out.solutions.len(),
                config.ensemble_size,
                out.sessions
            )));
        }
        let mut rng = rng_from_seed(seed);
        rng.set_stream(out.sessions as u64);
        out.sessions += 1;
        let mut theta: Vec<f64> = (0..arch.parameter_count())
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        sgd_train(
            arch,
            train,
            &mut theta,
            config.epochs,
            config.batch_size,
            config.learning_rate,
            &mut rng,
        )?;
        let report = predictive::accuracy(arch, std::iter::once(theta.as_slice()), test)?;
        if report.accuracy > config.accept_threshold {
            out.solutions.push(theta);
            out.accuracies.push(report.accuracy);
        }
    }
    Ok(out)
}
