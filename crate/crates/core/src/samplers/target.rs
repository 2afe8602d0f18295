use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::mlp::{self, Architecture};

/// Unnormalized log-density on `R^dim`.
///
/// Evaluation never fails; a non-finite value marks a point outside the
/// support and is always rejected by the samplers.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, theta: &[f64]) -> f64;
}

/// Log-density with gradient, as required by HMC.
pub trait GradientLogDensity: LogDensity {
    /// Returns the log-density and overwrites `grad` with its gradient.
    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

/// Target split into log-likelihood and log-prior, so it can be tempered as
/// `t * loglik + logprior`.
pub trait TemperedDensity: Sync {
    fn dim(&self) -> usize;
    fn log_likelihood(&self, theta: &[f64]) -> f64;
    fn log_prior(&self, theta: &[f64]) -> f64;
}

/// Power posterior `t * loglik + logprior` of a [`TemperedDensity`].
#[derive(Debug, Clone, Copy)]
pub struct Tempered<'a, T: ?Sized> {
    pub target: &'a T,
    pub temperature: f64,
}

impl<T: TemperedDensity + ?Sized> LogDensity for Tempered<'_, T> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        self.temperature * self.target.log_likelihood(theta) + self.target.log_prior(theta)
    }
}

/// Parameter posterior of an MLP classifier under the prior `N(0, variance I)`.
#[derive(Debug, Clone)]
pub struct MlpPosterior<'a> {
    arch: &'a Architecture,
    data: &'a LabeledDataset,
    prior_variance: f64,
}

impl<'a> MlpPosterior<'a> {
    pub fn new(arch: &'a Architecture, data: &'a LabeledDataset, prior_variance: f64) -> Result<Self> {
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "prior variance must be positive, got {prior_variance}"
            )));
        }
        // validates feature and class counts once up front
        mlp::log_likelihood(arch, &vec![0.0; arch.parameter_count()], data)?;
        Ok(Self {
            arch,
            data,
            prior_variance,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        self.arch
    }

    pub fn data(&self) -> &LabeledDataset {
        self.data
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }
}

// Dimensions were validated in `new`, and samplers only pass vectors of
// length `dim()`, so the `expect`s below cannot fire.
impl TemperedDensity for MlpPosterior<'_> {
    fn dim(&self) -> usize {
        self.arch.parameter_count()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        mlp::log_likelihood(self.arch, theta, self.data).expect("validated dimensions")
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        mlp::log_prior(theta, self.prior_variance)
    }
}

impl LogDensity for MlpPosterior<'_> {
    fn dim(&self) -> usize {
        self.arch.parameter_count()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        TemperedDensity::log_likelihood(self, theta) + TemperedDensity::log_prior(self, theta)
    }
}

impl GradientLogDensity for MlpPosterior<'_> {
    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let ll = mlp::log_likelihood_with_gradient(self.arch, theta, self.data, grad).expect("validated dimensions");
        for (g, t) in grad.iter_mut().zip(theta) {
            *g -= t / self.prior_variance;
        }
        ll + mlp::log_prior(theta, self.prior_variance)
    }
}

/// Isotropic normal `N(mean, sd^2 I)`; the analytic target used in tests.
#[derive(Debug, Clone)]
pub struct IsotropicNormal {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl IsotropicNormal {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            sd: 1.0,
        }
    }
}

impl LogDensity for IsotropicNormal {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let var = self.sd * self.sd;
        -0.5 * theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| (t - m) * (t - m))
            .sum::<f64>()
            / var
    }
}

impl GradientLogDensity for IsotropicNormal {
    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let var = self.sd * self.sd;
        for ((g, t), m) in grad.iter_mut().zip(theta).zip(&self.mean) {
            *g = -(t - m) / var;
        }
        self.log_density(theta)
    }
}
