use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

/// Feature matrix (row-major, one row per sample) with class labels.
///
/// Labels are stored as zero-based class indices for both tasks: a binary
/// label is 0 or 1, and the multiclass label `k` (1-based) is stored as `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    num_features: usize,
    labels: Vec<usize>,
    num_classes: usize,
    pub role: Role,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        num_features: usize,
        labels: Vec<usize>,
        num_classes: usize,
        role: Role,
    ) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::InvalidInput("dataset needs at least one feature".into()));
        }
        if num_classes < 2 {
            return Err(Error::InvalidInput("dataset needs at least two classes".into()));
        }
        if features.len() != labels.len() * num_features {
            return Err(Error::DimensionMismatch {
                what: "feature values (rows x features)",
                expected: labels.len() * num_features,
                actual: features.len(),
            });
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {y} of sample {i} outside 0..{num_classes}"
            )));
        }
        Ok(Self {
            features,
            num_features,
            labels,
            num_classes,
            role,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, num_classes: usize, role: Role) -> Result<Self> {
        let num_features = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != num_features) {
            return Err(Error::DimensionMismatch {
                what: "feature row length",
                expected: num_features,
                actual: bad.len(),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        Self::new(rows.concat(), num_features, labels, num_classes, role)
    }

    /// An empty dataset: the posterior then reduces to the prior.
    pub fn empty(num_features: usize, num_classes: usize) -> Self {
        Self {
            features: Vec::new(),
            num_features,
            labels: Vec::new(),
            num_classes,
            role: Role::Train,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.features
            .chunks_exact(self.num_features)
            .zip(self.labels.iter().copied())
    }

    /// Subset of the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.num_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features,
            num_features: self.num_features,
            labels,
            num_classes: self.num_classes,
            role: self.role,
        }
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }
}
