//! Convergence and mixing diagnostics for multivariate chains.

mod covariance;

pub use covariance::{
    empirical_covariance, lag_autocovariance, log_det_spd, minse, CovarianceEstimate, CovarianceKind, Draws,
};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative diagonal jitter applied to a singular within-chain covariance.
pub const PSRF_REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfResult {
    pub value: f64,
    pub num_chains: usize,
    pub chain_length: usize,
    /// Whether the within-chain covariance had to be regularized.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssResult {
    pub value: f64,
    pub chain_length: usize,
}

fn check_chains(chains: &[Draws<'_>]) -> Result<(usize, usize)> {
    if chains.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "PSRF needs at least two chains, got {}",
            chains.len()
        )));
    }
    let (v, n) = (chains[0].len(), chains[0].dim());
    if let Some(bad) = chains.iter().find(|c| c.len() != v || c.dim() != n) {
        return Err(Error::InvalidInput(format!(
            "chains differ in shape: {v}x{n} vs {}x{}",
            bad.len(),
            bad.dim()
        )));
    }
    Ok((v, n))
}

/// Within-chain covariance used by the PSRF. A chain that never moves has
/// no MINSE; its (zero) lag-0 autocovariance stands in.
fn within_chain(draws: &Draws<'_>) -> Result<DMatrix<f64>> {
    match minse(draws) {
        Ok(est) => Ok(est.matrix),
        Err(Error::Numerical(_)) => lag_autocovariance(draws, 0),
        Err(e) => Err(e),
    }
}

/// Multivariate potential scale reduction factor
/// `sqrt((v-1)/v + (m+1)/m * lambda_max(W^{-1} B/v))`, where `W` averages the
/// per-chain MINSE estimates and `B/v` is the covariance of the chain means
/// (divisor `m - 1`).
pub fn multivariate_psrf(chains: &[Draws<'_>]) -> Result<PsrfResult> {
    check_chains(chains)?;
    let within: Vec<DMatrix<f64>> = chains.par_iter().map(within_chain).collect::<Result<_>>()?;
    psrf_from_within(chains, &within)
}

fn psrf_from_within(chains: &[Draws<'_>], within: &[DMatrix<f64>]) -> Result<PsrfResult> {
    let (v, n) = check_chains(chains)?;
    let m = chains.len();
    let mut w = DMatrix::zeros(n, n);
    for c in within {
        w += c;
    }
    w /= m as f64;

    let means: Vec<Vec<f64>> = chains.iter().map(Draws::mean).collect();
    let mut grand = vec![0.0; n];
    for mu in &means {
        for (g, x) in grand.iter_mut().zip(mu) {
            *g += x / m as f64;
        }
    }
    let mut b_over_v = DMatrix::zeros(n, n);
    for mu in &means {
        let d = nalgebra::DVector::from_iterator(n, mu.iter().zip(&grand).map(|(a, g)| a - g));
        b_over_v += &d * d.transpose();
    }
    b_over_v /= (m - 1) as f64;

    let mut regularized = false;
    let chol = match w.clone().cholesky() {
        Some(c) => c,
        None => {
            regularized = true;
            let mut scale = w.trace() / n as f64;
            if !(scale > 0.0) {
                scale = b_over_v.trace() / n as f64;
            }
            if !(scale > 0.0) {
                scale = 1.0;
            }
            let mut jittered = w.clone();
            for i in 0..n {
                jittered[(i, i)] += PSRF_REGULARIZATION * scale;
            }
            jittered.cholesky().ok_or_else(|| {
                Error::Numerical("within-chain covariance is singular even after regularization".into())
            })?
        }
    };
    // lambda_max(W^{-1} B) = lambda_max(L^{-1} B L^{-T}) for W = L L^T
    let l = chol.l();
    let left = l
        .solve_lower_triangular(&b_over_v)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let sym = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let sym = (&sym + sym.transpose()) * 0.5;
    let lambda = sym.symmetric_eigenvalues().iter().copied().fold(0.0f64, f64::max);
    let vf = v as f64;
    let mf = m as f64;
    let value = ((vf - 1.0) / vf + (mf + 1.0) / mf * lambda).sqrt();
    Ok(PsrfResult {
        value,
        num_chains: m,
        chain_length: v,
        regularized,
    })
}

/// Multivariate effective sample size `v (det E / det C)^{1/n}` with `E` the
/// sample covariance (divisor `v - 1`) and `C` the MINSE estimate, computed
/// through log-determinants.
pub fn multivariate_ess(draws: &Draws<'_>) -> Result<EssResult> {
    let c = minse(draws)?;
    ess_from_minse(draws, &c.matrix)
}

fn ess_from_minse(draws: &Draws<'_>, c: &DMatrix<f64>) -> Result<EssResult> {
    let v = draws.len();
    let n = draws.dim();
    if v <= n {
        return Err(Error::InvalidInput(format!(
            "ESS needs more draws ({v}) than dimensions ({n})"
        )));
    }
    let e = empirical_covariance(draws)?;
    let log_e = log_det_spd(&e)
        .ok_or_else(|| Error::Numerical("empirical covariance is not positive definite (determinant <= 0)".into()))?;
    let log_c = log_det_spd(c)
        .ok_or_else(|| Error::Numerical("Monte Carlo covariance is not positive definite (determinant <= 0)".into()))?;
    let value = v as f64 * ((log_e - log_c) / n as f64).exp();
    Ok(EssResult { value, chain_length: v })
}

/// Table-style diagnostic summary of a set of chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// `None` for a single chain.
    pub psrf: Option<f64>,
    pub psrf_regularized: bool,
    pub ess_per_chain: Vec<f64>,
    pub ess_mean: f64,
    pub v: usize,
    pub m: usize,
    pub n: usize,
}

/// PSRF across all chains plus the ESS of each, sharing one MINSE
/// computation per chain. Chains are processed in parallel.
pub fn diagnose(chains: &[Draws<'_>]) -> Result<DiagnosticReport> {
    if chains.is_empty() {
        return Err(Error::InvalidInput("no chains to diagnose".into()));
    }
    let (v, n) = (chains[0].len(), chains[0].dim());
    if let Some(bad) = chains.iter().find(|c| c.len() != v || c.dim() != n) {
        return Err(Error::InvalidInput(format!(
            "chains differ in shape: {v}x{n} vs {}x{}",
            bad.len(),
            bad.dim()
        )));
    }
    let per_chain: Vec<(DMatrix<f64>, f64)> = chains
        .par_iter()
        .map(|d| {
            let c = minse(d)?;
            let ess = ess_from_minse(d, &c.matrix)?;
            Ok((c.matrix, ess.value))
        })
        .collect::<Result<_>>()?;
    let (within, ess): (Vec<_>, Vec<_>) = per_chain.into_iter().unzip();
    let (psrf, psrf_regularized) = if chains.len() >= 2 {
        let r = psrf_from_within(chains, &within)?;
        (Some(r.value), r.regularized)
    } else {
        (None, false)
    };
    Ok(DiagnosticReport {
        psrf,
        psrf_regularized,
        ess_mean: ess.iter().sum::<f64>() / ess.len() as f64,
        ess_per_chain: ess,
        v,
        m: chains.len(),
        n,
    })
}
