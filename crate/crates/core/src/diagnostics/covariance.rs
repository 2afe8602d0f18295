use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::Chain;

/// Borrowed `v x n` matrix of chain draws, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Draws<'a> {
    values: &'a [f64],
    dim: usize,
}

impl<'a> Draws<'a> {
    pub fn new(values: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form rows of length {dim}",
                values.len()
            )));
        }
        Ok(Self { values, dim })
    }

    /// Post-burn-in draws of a chain.
    pub fn post_burnin(chain: &'a Chain) -> Self {
        Self {
            values: chain.post_burnin(),
            dim: chain.dim(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.values.chunks_exact(self.dim) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let v = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= v);
        mean
    }
}

/// Mean-centred draws stored column-wise, so that lagged cross products
/// are dot products of contiguous slices.
pub(crate) struct CenteredColumns {
    columns: Vec<Vec<f64>>,
    len: usize,
}

impl CenteredColumns {
    pub(crate) fn new(draws: &Draws<'_>) -> Self {
        let mean = draws.mean();
        let mut columns = vec![Vec::with_capacity(draws.len()); draws.dim()];
        for row in draws.values.chunks_exact(draws.dim) {
            for ((col, x), m) in columns.iter_mut().zip(row).zip(&mean) {
                col.push(x - m);
            }
        }
        Self {
            columns,
            len: draws.len(),
        }
    }

    /// `(1/v) sum_{t < v-k} z_t z_{t+k}^T`.
    pub(crate) fn lag(&self, k: usize) -> DMatrix<f64> {
        let n = self.columns.len();
        let v = self.len;
        let mut out = DMatrix::zeros(n, n);
        for a in 0..n {
            let left = &self.columns[a][..v - k];
            for b in 0..n {
                let right = &self.columns[b][k..];
                out[(a, b)] = dot(left, right) / v as f64;
            }
        }
        out
    }

    /// Lag-`k` autocovariance symmetrized as `(S_k + S_k^T) / 2`; equal to
    /// `S_k` in one dimension and for `k = 0`.
    pub(crate) fn symmetric_lag(&self, k: usize) -> DMatrix<f64> {
        let s = self.lag(k);
        if k == 0 {
            return s;
        }
        (&s + s.transpose()) * 0.5
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the reduction vectorizable
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        total += a[j] * b[j];
    }
    total
}

/// Lag-`k` autocovariance `(1/v) sum_{t=1}^{v-k} (x_t - xbar)(x_{t+k} - xbar)^T`.
pub fn lag_autocovariance(draws: &Draws<'_>, k: usize) -> Result<DMatrix<f64>> {
    if k >= draws.len() {
        return Err(Error::InvalidInput(format!(
            "lag {k} must be smaller than the chain length {}",
            draws.len()
        )));
    }
    Ok(CenteredColumns::new(draws).lag(k))
}

/// Sample covariance with divisor `v - 1`.
pub fn empirical_covariance(draws: &Draws<'_>) -> Result<DMatrix<f64>> {
    let v = draws.len();
    if v < 2 {
        return Err(Error::InvalidInput("covariance needs at least two draws".into()));
    }
    Ok(CenteredColumns::new(draws).lag(0) * (v as f64 / (v - 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Empirical,
    Minse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub kind: CovarianceKind,
    pub chain_length: usize,
    /// Last index `t` of the partial sum kept by MINSE.
    pub truncation: Option<usize>,
}

/// Natural log of the determinant of a symmetric positive definite matrix,
/// via Cholesky. `None` if the factorization fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut total = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        total += d.ln();
    }
    Some(2.0 * total)
}

/// Multivariate initial monotone sequence estimate of the Monte Carlo
/// (asymptotic) covariance of a chain.
///
/// With `G_k = S_{2k} + S_{2k+1}` built from symmetrized lag
/// autocovariances, the partial sums `C_t = -S_0 + 2 sum_{k<=t} G_k` are
/// scanned for `t = 0, 1, ...` up to `v/2 - 1`. The scan stops at the first
/// `t` where `C_t` is not positive definite or `det C_t <= det C_{t-1}`,
/// and `C_{t-1}` is returned. If already `C_0` fails, the lag-0
/// autocovariance is returned.
pub fn minse(draws: &Draws<'_>) -> Result<CovarianceEstimate> {
    let v = draws.len();
    if v < 4 {
        return Err(Error::InvalidInput(format!("MINSE needs at least 4 draws, got {v}")));
    }
    let cols = CenteredColumns::new(draws);
    let s0 = cols.lag(0);
    if let Some(i) = (0..draws.dim()).find(|&i| !(s0[(i, i)] > 0.0)) {
        return Err(Error::Numerical(format!(
            "coordinate {i} has zero variance; the chain never moved along it"
        )));
    }
    if log_det_spd(&s0).is_none() {
        return Err(Error::Numerical(
            "lag-0 autocovariance is singular (collinear coordinates)".into(),
        ));
    }

    let max_t = v / 2 - 1;
    let mut sum = -&s0;
    let mut best: Option<(DMatrix<f64>, f64, usize)> = None;
    for t in 0..=max_t {
        let gamma = cols.symmetric_lag(2 * t) + cols.symmetric_lag(2 * t + 1);
        sum += gamma * 2.0;
        match (log_det_spd(&sum), &best) {
            (Some(ld), Some((_, prev, _))) if ld <= *prev => break,
            (Some(ld), _) => best = Some((sum.clone(), ld, t)),
            (None, _) => break,
        }
    }
    Ok(match best {
        Some((matrix, _, t)) => CovarianceEstimate {
            matrix,
            kind: CovarianceKind::Minse,
            chain_length: v,
            truncation: Some(t),
        },
        None => CovarianceEstimate {
            matrix: s0,
            kind: CovarianceKind::Minse,
            chain_length: v,
            truncation: None,
        },
    })
}
