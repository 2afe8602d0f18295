//! Noisy XOR generation and preparation of tabular datasets.

mod standardize;
mod tabular;
mod xor;

pub use standardize::{standardize, StandardizationStats};
pub use tabular::{
    feature_names, load_csv_dataset, read_dataset, write_dataset, DatasetManifest, Encoding, FeatureColumn,
};
pub use xor::{exact_xor, generate_noisy_xor, noisy_point, NoisyXorConfig, XOR_CORNERS};

use std::path::Path;

use crate::dataset::{LabeledDataset, Role};
use crate::error::Result;

/// Train/test pair ready for modelling.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub name: String,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    /// Present when features were standardized.
    pub stats: Option<StandardizationStats>,
}

/// Loads both splits described by a manifest. With `standardize` set, the
/// statistics are computed over train and test pooled and applied to both.
pub fn prepare(manifest: &DatasetManifest) -> Result<PreparedData> {
    let load =
        |path: &Path, role| load_csv_dataset(path, &manifest.features, &manifest.label_column, &manifest.labels, role);
    let mut train = load(&manifest.train, Role::Train)?;
    let mut test = load(&manifest.test, Role::Test)?;
    let stats = if manifest.standardize {
        let stats = StandardizationStats::fit(&[&train, &test])?;
        train = stats.apply(&train)?;
        test = stats.apply(&test)?;
        Some(stats)
    } else {
        None
    };
    Ok(PreparedData {
        name: manifest.name.clone(),
        train,
        test,
        feature_names: manifest.feature_names(),
        label_names: manifest.labels.clone(),
        stats,
    })
}

/// Reads and prepares the dataset of the manifest at `path`.
pub fn prepare_from_manifest(path: impl AsRef<Path>) -> Result<PreparedData> {
    prepare(&DatasetManifest::from_path(path)?)
}

/// Noisy XOR as a prepared pair, features named `x1`, `x2`.
pub fn noisy_xor_data(config: &NoisyXorConfig) -> Result<PreparedData> {
    let (train, test) = generate_noisy_xor(config)?;
    Ok(PreparedData {
        name: "noisy_xor".into(),
        train,
        test,
        feature_names: vec!["x1".into(), "x2".into()],
        label_names: vec!["0".into(), "1".into()],
        stats: None,
    })
}
