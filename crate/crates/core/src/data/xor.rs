use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Role};
use crate::error::{Error, Result};
use crate::samplers::rng_from_seed;

/// Exclusive or of two bits.
pub fn exact_xor(a: u8, b: u8) -> u8 {
    debug_assert!(a <= 1 && b <= 1);
    a ^ b
}

/// The four exact XOR inputs, in the order points are generated.
pub const XOR_CORNERS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyXorConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_train")]
    pub train_per_corner: usize,
    #[serde(default = "default_test")]
    pub test_per_corner: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_c() -> f64 {
    0.55
}
fn default_train() -> usize {
    125
}
fn default_test() -> usize {
    30
}

impl Default for NoisyXorConfig {
    fn default() -> Self {
        Self {
            c: default_c(),
            train_per_corner: default_train(),
            test_per_corner: default_test(),
            seed: 0,
        }
    }
}

impl NoisyXorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.5 && self.c < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "noisy XOR needs 0.5 < c < 1, got {}",
                self.c
            )));
        }
        if self.train_per_corner == 0 || self.test_per_corner == 0 {
            return Err(Error::InvalidConfig("per-corner counts must be positive".into()));
        }
        Ok(())
    }
}

/// Noisy input for exact XOR corner `(a, b)` and uniform draw `u`: each
/// coordinate is `u - c` for a 0 bit and `u + c` for a 1 bit.
pub fn noisy_point(corner: (u8, u8), u: f64, c: f64) -> [f64; 2] {
    let shift = |bit: u8| if bit == 1 { u + c } else { u - c };
    [shift(corner.0), shift(corner.1)]
}

fn draw(per_corner: usize, c: f64, role: Role, rng: &mut impl Rng) -> LabeledDataset {
    let mut features = Vec::with_capacity(8 * per_corner);
    let mut labels = Vec::with_capacity(4 * per_corner);
    for corner in XOR_CORNERS {
        for _ in 0..per_corner {
            let u: f64 = rng.random();
            features.extend_from_slice(&noisy_point(corner, u, c));
            labels.push(exact_xor(corner.0, corner.1) as usize);
        }
    }
    LabeledDataset::new(features, 2, labels, 2, role).expect("consistent shapes")
}

/// Training and test sets of noisy XOR points, training set drawn first.
pub fn generate_noisy_xor(config: &NoisyXorConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let train = draw(config.train_per_corner, config.c, Role::Train, &mut rng);
    let test = draw(config.test_per_corner, config.c, Role::Test, &mut rng);
    Ok((train, test))
}
