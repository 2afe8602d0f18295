use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Per-feature location and scale of a z-score transform. Scales use the
/// sample standard deviation (divisor `s - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl StandardizationStats {
    /// Statistics over the rows of all `parts` pooled together.
    pub fn fit(parts: &[&LabeledDataset]) -> Result<Self> {
        let p = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to standardize".into()))?
            .num_features();
        if parts.iter().any(|d| d.num_features() != p) {
            return Err(Error::InvalidInput("datasets differ in feature count".into()));
        }
        let s: usize = parts.iter().map(|d| d.len()).sum();
        if s < 2 {
            return Err(Error::InvalidInput("standardization needs at least two rows".into()));
        }
        let mut means = vec![0.0; p];
        for d in parts {
            for (x, _) in d.rows() {
                means.iter_mut().zip(x).for_each(|(m, v)| *m += v);
            }
        }
        means.iter_mut().for_each(|m| *m /= s as f64);
        let mut sq = vec![0.0; p];
        for d in parts {
            for (x, _) in d.rows() {
                for ((q, v), m) in sq.iter_mut().zip(x).zip(&means) {
                    *q += (v - m) * (v - m);
                }
            }
        }
        let std_devs: Vec<f64> = sq.iter().map(|q| (q / (s - 1) as f64).sqrt()).collect();
        if let Some(j) = std_devs.iter().position(|&sd| !(sd > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "feature {j} has zero variance and cannot be standardized"
            )));
        }
        Ok(Self { means, std_devs })
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.num_features() != self.means.len() {
            return Err(Error::DimensionMismatch {
                what: "standardized features",
                expected: self.means.len(),
                actual: data.num_features(),
            });
        }
        let mut out = data.clone();
        let p = self.means.len();
        for row in out.features_mut().chunks_exact_mut(p) {
            for ((v, m), sd) in row.iter_mut().zip(&self.means).zip(&self.std_devs) {
                *v = (*v - m) / sd;
            }
        }
        Ok(out)
    }
}

/// Z-scores every feature of `data` with its own statistics.
pub fn standardize(data: &LabeledDataset) -> Result<(LabeledDataset, StandardizationStats)> {
    let stats = StandardizationStats::fit(&[data])?;
    Ok((stats.apply(data)?, stats))
}
