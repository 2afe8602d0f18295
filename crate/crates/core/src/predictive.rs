//! Posterior predictive distributions by Monte Carlo averaging over chain draws.
//!
//! The predictive probability of each class at `x` is the arithmetic mean,
//! over the supplied parameter draws, of the network's event probabilities.

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::mlp::{Activations, Architecture, Task};
use crate::samplers::{chain_seed, rng_from_seed, sample_prior};

/// Default number of trailing chain iterations used for prediction.
pub const DEFAULT_TAIL: usize = 10_000;

/// Class probabilities at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub probabilities: Vec<f64>,
}

impl PredictiveDistribution {
    /// Probability of label 1 in a binary task.
    pub fn positive(&self) -> f64 {
        self.probabilities[1]
    }
}

/// Averages event probabilities over draws for many inputs at once.
struct Averager<'a> {
    arch: &'a Architecture,
    acts: Activations,
}

impl<'a> Averager<'a> {
    fn new(arch: &'a Architecture) -> Self {
        Self {
            arch,
            acts: Activations::new(arch),
        }
    }

    /// Adds the event probabilities at `x` under `theta` into `sums`.
    fn accumulate(&mut self, theta: &[f64], x: &[f64], sums: &mut [f64]) {
        self.acts.run(self.arch, theta, x);
        let out = self.acts.output();
        match self.arch.task() {
            Task::Binary => {
                sums[0] += 1.0 - out[0];
                sums[1] += out[0];
            }
            Task::Multiclass => {
                for (s, p) in sums.iter_mut().zip(out) {
                    *s += p;
                }
            }
        }
    }

    fn distributions<'t, I>(&mut self, tail: I, inputs: &[&[f64]]) -> Result<Vec<PredictiveDistribution>>
    where
        I: IntoIterator<Item = &'t [f64]>,
    {
        for x in inputs {
            self.arch.check_input(x)?;
        }
        let classes = self.arch.num_classes();
        let mut sums = vec![vec![0.0; classes]; inputs.len()];
        let mut count = 0usize;
        for theta in tail {
            self.arch.check_params(theta)?;
            for (x, s) in inputs.iter().zip(sums.iter_mut()) {
                self.accumulate(theta, x, s);
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::InvalidInput(
                "posterior predictive needs at least one parameter draw".into(),
            ));
        }
        let scale = 1.0 / count as f64;
        Ok(sums
            .into_iter()
            .map(|s| PredictiveDistribution {
                probabilities: s.into_iter().map(|v| v * scale).collect(),
            })
            .collect())
    }
}

/// Monte Carlo posterior predictive distribution at `x`.
pub fn predictive_distribution<'t, I>(arch: &Architecture, tail: I, x: &[f64]) -> Result<PredictiveDistribution>
where
    I: IntoIterator<Item = &'t [f64]>,
{
    let mut d = Averager::new(arch).distributions(tail, &[x])?;
    Ok(d.pop().expect("one input"))
}

/// Predicted label: for binary tasks 1 iff `p(y = 1) >= 0.5`; otherwise the
/// most probable class, ties going to the lowest index.
pub fn classify(dist: &PredictiveDistribution, task: Task) -> usize {
    match task {
        Task::Binary => usize::from(dist.positive() >= 0.5),
        Task::Multiclass => {
            let mut best = 0;
            for (k, &p) in dist.probabilities.iter().enumerate().skip(1) {
                if p > dist.probabilities[best] {
                    best = k;
                }
            }
            best
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPrediction {
    pub index: usize,
    pub true_label: usize,
    pub predicted: usize,
    pub prob_predicted: f64,
    pub prob_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub points: Vec<PointPrediction>,
    pub distributions: Vec<PredictiveDistribution>,
    /// Fraction of correctly predicted test points.
    pub accuracy: f64,
}

impl PredictionReport {
    pub fn correct(&self) -> usize {
        self.points.iter().filter(|p| p.predicted == p.true_label).count()
    }
}

/// Classifies every test point with the posterior predictive built from
/// `tail` and scores the predictions.
pub fn accuracy<'t, I>(arch: &Architecture, tail: I, test: &LabeledDataset) -> Result<PredictionReport>
where
    I: IntoIterator<Item = &'t [f64]>,
{
    if test.num_features() != arch.input_width() {
        return Err(Error::DimensionMismatch {
            what: "test feature count",
            expected: arch.input_width(),
            actual: test.num_features(),
        });
    }
    if test.num_classes() != arch.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "test class count",
            expected: arch.num_classes(),
            actual: test.num_classes(),
        });
    }
    if test.is_empty() {
        return Err(Error::InvalidInput("test set is empty".into()));
    }
    let inputs: Vec<&[f64]> = (0..test.len()).map(|i| test.row(i)).collect();
    let distributions = Averager::new(arch).distributions(tail, &inputs)?;
    let task = arch.task();
    let points: Vec<PointPrediction> = distributions
        .iter()
        .zip(test.labels())
        .enumerate()
        .map(|(index, (dist, &true_label))| {
            let predicted = classify(dist, task);
            PointPrediction {
                index,
                true_label,
                predicted,
                prob_predicted: dist.probabilities[predicted],
                prob_true: dist.probabilities[true_label],
            }
        })
        .collect();
    let correct = points.iter().filter(|p| p.predicted == p.true_label).count();
    Ok(PredictionReport {
        accuracy: correct as f64 / points.len() as f64,
        points,
        distributions,
    })
}

/// Baseline accuracy with `num_draws` parameter vectors drawn i.i.d. from
/// the prior `N(0, prior_variance I)` in place of chain draws.
pub fn prior_predictive_accuracy(
    arch: &Architecture,
    prior_variance: f64,
    test: &LabeledDataset,
    num_draws: usize,
    seed: u64,
) -> Result<PredictionReport> {
    if num_draws == 0 {
        return Err(Error::InvalidInput("need at least one prior draw".into()));
    }
    if !(prior_variance > 0.0) {
        return Err(Error::InvalidConfig("prior variance must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let draws: Vec<Vec<f64>> = (0..num_draws)
        .map(|_| sample_prior(arch.parameter_count(), prior_variance, &mut rng))
        .collect();
    accuracy(arch, draws.iter().map(Vec::as_slice), test)
}

/// Prior-predictive accuracies of `replicates` independent draw sets, set
/// `k` seeded with `chain_seed(seed, k)`. Mirrors running one baseline per
/// chain of a sampler run.
pub fn prior_baseline(
    arch: &Architecture,
    prior_variance: f64,
    test: &LabeledDataset,
    num_draws: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<f64>> {
    (0..replicates)
        .map(|k| {
            prior_predictive_accuracy(arch, prior_variance, test, num_draws, chain_seed(seed, k)).map(|r| r.accuracy)
        })
        .collect()
}

/// Square grid of predictive probabilities `p(y = 1 | cell centre)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveGrid {
    /// Cell-centre coordinates along each axis.
    pub centers: Vec<f64>,
    /// `values[r][c]` is the probability at `(centers[c], centers[r])`, so
    /// rows follow increasing `x2` and columns increasing `x1`.
    pub values: Vec<Vec<f64>>,
}

/// Cell centres `lo + (i + 0.5) (hi - lo) / resolution`.
pub fn grid_centers(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    let width = (hi - lo) / resolution as f64;
    (0..resolution).map(|i| lo + (i as f64 + 0.5) * width).collect()
}

/// Evaluates the binary posterior predictive at each cell centre of a
/// `resolution x resolution` grid over `[lo, hi]^2`.
pub fn grid_predictive<'t, I>(
    arch: &Architecture,
    tail: I,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<PredictiveGrid>
where
    I: IntoIterator<Item = &'t [f64]>,
{
    if arch.input_width() != 2 || arch.task() != Task::Binary {
        return Err(Error::InvalidArchitecture(
            "grid prediction needs a binary model with two input features".into(),
        ));
    }
    if resolution == 0 || !(hi > lo) {
        return Err(Error::InvalidInput(
            "grid needs hi > lo and a positive resolution".into(),
        ));
    }
    let centers = grid_centers(lo, hi, resolution);
    let points: Vec<[f64; 2]> = centers
        .iter()
        .flat_map(|&x2| centers.iter().map(move |&x1| [x1, x2]))
        .collect();
    let inputs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let dists = Averager::new(arch).distributions(tail, &inputs)?;
    let values = dists
        .chunks(resolution)
        .map(|row| row.iter().map(PredictiveDistribution::positive).collect())
        .collect();
    Ok(PredictiveGrid { centers, values })
}
