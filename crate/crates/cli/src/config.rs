//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use bnn_mcmc::data::{self, NoisyXorConfig, PreparedData};
use bnn_mcmc::mlp::{Architecture, ArchitectureSpec};
use bnn_mcmc::samplers::{HmcConfig, MhConfig, PpConfig, SamplerKind, SgdConfig};
use bnn_mcmc::{Error, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    NoisyXor(NoisyXorConfig),
    /// Dataset manifest; a relative path is resolved against the config file.
    Manifest {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplerSpec {
    Mh(MhConfig),
    Hmc(HmcConfig),
    Pp(PpConfig),
}

impl SamplerSpec {
    pub fn kind(&self) -> SamplerKind {
        match self {
            SamplerSpec::Mh(_) => SamplerKind::Mh,
            SamplerSpec::Hmc(_) => SamplerKind::Hmc,
            SamplerSpec::Pp(_) => SamplerKind::Pp,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::Mh(c) => c.validate(),
            SamplerSpec::Hmc(c) => c.validate(),
            SamplerSpec::Pp(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Free text, e.g. where the sampler settings come from.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    pub dataset: DatasetSpec,
    pub architecture: ArchitectureSpec,
    #[serde(default = "defaults::prior_variance")]
    pub prior_variance: f64,
    /// Required by `sample`; SGD-only configs may omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default = "defaults::chains")]
    pub chains: usize,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::burnin")]
    pub burnin: usize,
    /// Number of final draws of each chain used for prediction.
    #[serde(default = "defaults::tail")]
    pub tail: usize,
    #[serde(default)]
    pub seed: u64,
    /// Independent prior draw sets averaged for the prior baseline, each of
    /// `tail` draws.
    #[serde(default = "defaults::prior_replicates")]
    pub prior_replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd: Option<SgdConfig>,
}

mod defaults {
    pub fn prior_variance() -> f64 {
        10.0
    }
    pub fn chains() -> usize {
        10
    }
    pub fn iterations() -> usize {
        110_000
    }
    pub fn burnin() -> usize {
        10_000
    }
    pub fn tail() -> usize {
        10_000
    }
    pub fn prior_replicates() -> usize {
        100
    }
}

/// Command-line overrides of config fields. A flag, when given, wins over
/// the config file, which wins over the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Number of chains m.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Iterations per chain, burn-in included.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Draws per chain used for prediction.
    #[arg(long)]
    pub tail: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub prior_variance: Option<f64>,
}

impl ExperimentConfig {
    /// Reads a config file and resolves a relative manifest path against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text)?;
        if let DatasetSpec::Manifest { path: manifest } = &mut config.dataset {
            let dir = path.parent().unwrap_or_else(|| Path::new("."));
            let joined = dir.join(&*manifest);
            *manifest = std::fs::canonicalize(&joined).map_err(|e| Error::io(&joined, e))?;
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.chains {
            self.chains = v;
        }
        if let Some(v) = o.iterations {
            self.iterations = v;
        }
        if let Some(v) = o.burnin {
            self.burnin = v;
        }
        if let Some(v) = o.tail {
            self.tail = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.prior_variance {
            self.prior_variance = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.chains == 0 || self.prior_replicates == 0 {
            return bad("need at least one chain and one prior replicate".into());
        }
        if self.burnin >= self.iterations {
            return bad(format!(
                "burn-in {} must be smaller than the {} iterations",
                self.burnin, self.iterations
            ));
        }
        if self.tail == 0 || self.tail > self.iterations - self.burnin {
            return bad(format!(
                "tail {} must lie in 1..={} (post-burn-in draws)",
                self.tail,
                self.iterations - self.burnin
            ));
        }
        if !(self.prior_variance > 0.0 && self.prior_variance.is_finite()) {
            return bad(format!("prior variance must be positive, got {}", self.prior_variance));
        }
        self.architecture()?;
        match &self.sampler {
            Some(s) => s.validate(),
            None => Ok(()),
        }
    }

    pub fn sampler(&self) -> Result<&SamplerSpec> {
        self.sampler
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("config has no sampler section".into()))
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::try_from(self.architecture.clone())
    }

    /// Loads the dataset and checks it against the architecture.
    pub fn load_data(&self) -> Result<PreparedData> {
        let data = match &self.dataset {
            DatasetSpec::NoisyXor(c) => data::noisy_xor_data(c)?,
            DatasetSpec::Manifest { path } => data::prepare_from_manifest(path)?,
        };
        let arch = self.architecture()?;
        if data.train.num_features() != arch.input_width() || data.train.num_classes() != arch.num_classes() {
            return Err(Error::InvalidConfig(format!(
                "dataset {} has {} features and {} classes, architecture {:?} expects {} and {}",
                data.name,
                data.train.num_features(),
                data.train.num_classes(),
                arch.layer_widths(),
                arch.input_width(),
                arch.num_classes()
            )));
        }
        Ok(data)
    }

    pub fn dataset_name(&self) -> String {
        match &self.dataset {
            DatasetSpec::NoisyXor(_) => "noisy_xor".into(),
            DatasetSpec::Manifest { path } => path
                .parent()
                .and_then(|d| d.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
        }
    }
}
