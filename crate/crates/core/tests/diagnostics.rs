use std::time::Instant;

use bnn_mcmc::diagnostics::{diagnose, lag_autocovariance, minse, multivariate_ess, multivariate_psrf, Draws};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn iid(v: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..v * n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Independent AR(1) coordinates `x_t = phi x_{t-1} + e_t`, started from
/// the stationary distribution.
fn ar1(v: usize, n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd0 = 1.0 / (1.0 - phi * phi).sqrt();
    let mut state: Vec<f64> = (0..n).map(|_| sd0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut out = Vec::with_capacity(v * n);
    for _ in 0..v {
        for s in state.iter_mut() {
            *s = phi * *s + rng.sample::<f64, _>(StandardNormal);
        }
        out.extend_from_slice(&state);
    }
    out
}

/// Geyer's initial positive sequence estimate of the asymptotic variance of
/// a scalar series, written with plain loops.
fn geyer_variance(x: &[f64]) -> f64 {
    let v = x.len();
    let mean = x.iter().sum::<f64>() / v as f64;
    let gamma = |k: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..v - k {
            s += (x[t] - mean) * (x[t + k] - mean);
        }
        s / v as f64
    };
    let g0 = gamma(0);
    let mut sigma = -g0;
    let mut t = 0;
    while t < v / 2 {
        let pair = gamma(2 * t) + gamma(2 * t + 1);
        if pair <= 0.0 {
            break;
        }
        sigma += 2.0 * pair;
        t += 1;
    }
    if t == 0 {
        g0
    } else {
        sigma
    }
}

fn univariate_psrf(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let v = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / v).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b_over_v = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let w = chains.iter().map(|c| geyer_variance(c)).sum::<f64>() / m;
    ((v - 1.0) / v + (m + 1.0) / m * b_over_v / w).sqrt()
}

fn within(actual: f64, expected: f64, rel: f64) -> bool {
    ((actual - expected) / expected).abs() < rel
}

#[test]
fn ar1_lag_autocovariance_decays_geometrically() {
    let phi = 0.5;
    let x = ar1(100_000, 1, phi, 11);
    let d = Draws::new(&x, 1).unwrap();
    let var = 1.0 / (1.0 - phi * phi);
    // sampling error of the lag-k estimate is about 0.008 here, so 5% is
    // only meaningful while phi^k Var stays well above it
    for k in 0..3 {
        let s = lag_autocovariance(&d, k).unwrap()[(0, 0)];
        let want = phi.powi(k as i32) * var;
        assert!(within(s, want, 0.05), "lag {k}: {s} vs {want}");
    }
}

#[test]
fn iid_minse_is_near_identity() {
    let x = iid(100_000, 3, 3);
    let c = minse(&Draws::new(&x, 3).unwrap()).unwrap().matrix;
    let err = (&c - DMatrix::<f64>::identity(3, 3)).norm();
    assert!(err < 0.1 * 3f64.sqrt(), "Frobenius error {err}");
}

#[test]
fn ar1_minse_triples_variance() {
    let phi = 0.5;
    let x = ar1(100_000, 1, phi, 5);
    let c = minse(&Draws::new(&x, 1).unwrap()).unwrap().matrix[(0, 0)];
    let want = (1.0 + phi) / (1.0 - phi) / (1.0 - phi * phi);
    assert!(within(c, want, 0.15), "{c} vs {want}");
}

#[test]
fn scalar_minse_matches_geyer_oracle() {
    for (seed, phi) in [(1, 0.0), (2, 0.5), (3, 0.9), (4, -0.3)] {
        let x = ar1(5_000, 1, phi, seed);
        let c = minse(&Draws::new(&x, 1).unwrap()).unwrap().matrix[(0, 0)];
        let oracle = geyer_variance(&x);
        assert!(((c - oracle) / oracle).abs() < 1e-10, "phi {phi}: {c} vs {oracle}");
    }
}

#[test]
fn iid_ess_close_to_chain_length() {
    let v = 100_000;
    let x = iid(v, 3, 8);
    let ess = multivariate_ess(&Draws::new(&x, 3).unwrap()).unwrap().value;
    assert!(within(ess, v as f64, 0.15), "ESS {ess}");
}

#[test]
fn ar1_ess_ratio_is_one_third() {
    let v = 100_000;
    for n in [1, 3] {
        let x = ar1(v, n, 0.5, 21 + n as u64);
        let ess = multivariate_ess(&Draws::new(&x, n).unwrap()).unwrap().value;
        assert!(
            within(ess / v as f64, 1.0 / 3.0, 0.15),
            "n = {n}: ratio {}",
            ess / v as f64
        );
    }
}

#[test]
fn duplicated_states_do_not_double_ess() {
    let x = ar1(20_000, 2, 0.5, 4);
    let doubled: Vec<f64> = x.chunks(2).flat_map(|r| [r[0], r[1], r[0], r[1]]).collect();
    let a = multivariate_ess(&Draws::new(&x, 2).unwrap()).unwrap().value;
    let b = multivariate_ess(&Draws::new(&doubled, 2).unwrap()).unwrap().value;
    assert!(within(b, a, 0.15), "{a} vs {b}");
}

#[test]
fn identical_chains_psrf_is_exact() {
    let x = iid(5_000, 3, 1);
    let d = Draws::new(&x, 3).unwrap();
    let r = multivariate_psrf(&[d, d, d, d]).unwrap().value;
    assert_eq!(r, (4999.0f64 / 5000.0).sqrt());
}

#[test]
fn iid_chains_converge() {
    let chains: Vec<Vec<f64>> = (0..4).map(|k| iid(50_000, 3, 100 + k)).collect();
    let draws: Vec<Draws> = chains.iter().map(|c| Draws::new(c, 3).unwrap()).collect();
    let r = multivariate_psrf(&draws).unwrap().value;
    assert!(r < 1.01, "PSRF {r}");
}

#[test]
fn separated_chains_do_not_converge() {
    let a = iid(2_000, 2, 1);
    let b: Vec<f64> = iid(2_000, 2, 2).iter().map(|x| x + 3.0).collect();
    let r = multivariate_psrf(&[Draws::new(&a, 2).unwrap(), Draws::new(&b, 2).unwrap()]).unwrap();
    assert!(r.value > 1.5 && !r.regularized);
}

#[test]
fn scalar_psrf_matches_oracle() {
    let chains: Vec<Vec<f64>> = (0..3)
        .map(|k| ar1(4_000, 1, 0.6, 40 + k).iter().map(|x| x + 0.2 * k as f64).collect())
        .collect();
    let draws: Vec<Draws> = chains.iter().map(|c| Draws::new(c, 1).unwrap()).collect();
    let r = multivariate_psrf(&draws).unwrap().value;
    let oracle = univariate_psrf(&chains);
    assert!(((r - oracle) / oracle).abs() < 0.02, "{r} vs {oracle}");
}

#[test]
fn shift_invariance() {
    let chains: Vec<Vec<f64>> = (0..3).map(|k| ar1(3_000, 2, 0.4, 60 + k)).collect();
    let shifted: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.chunks(2).flat_map(|r| [r[0] + 100.0, r[1] - 7.5]).collect())
        .collect();
    let d1: Vec<Draws> = chains.iter().map(|c| Draws::new(c, 2).unwrap()).collect();
    let d2: Vec<Draws> = shifted.iter().map(|c| Draws::new(c, 2).unwrap()).collect();
    let (a, b) = (minse(&d1[0]).unwrap().matrix, minse(&d2[0]).unwrap().matrix);
    assert!((&a - &b).abs().max() < 1e-8 * a.abs().max());
    let (p, q) = (
        multivariate_psrf(&d1).unwrap().value,
        multivariate_psrf(&d2).unwrap().value,
    );
    assert!((p - q).abs() < 1e-8);
}

#[test]
fn ess_invariant_under_linear_maps() {
    let x = ar1(20_000, 3, 0.5, 70);
    let a = [[2.0, 0.5, 0.0], [-1.0, 1.0, 0.3], [0.2, 0.0, 5.0]];
    let y: Vec<f64> = x
        .chunks(3)
        .flat_map(|r| (0..3).map(move |i| (0..3).map(|j| a[i][j] * r[j]).sum::<f64>()))
        .collect();
    let e1 = multivariate_ess(&Draws::new(&x, 3).unwrap()).unwrap().value;
    let e2 = multivariate_ess(&Draws::new(&y, 3).unwrap()).unwrap().value;
    assert!(within(e2, e1, 0.05), "{e1} vs {e2}");
}

#[test]
fn large_chain_diagnostics_finish_quickly() {
    let chains: Vec<Vec<f64>> = (0..4).map(|k| iid(100_000, 3, 200 + k)).collect();
    let draws: Vec<Draws> = chains.iter().map(|c| Draws::new(c, 3).unwrap()).collect();
    let start = Instant::now();
    let report = diagnose(&draws).unwrap();
    assert!(start.elapsed().as_secs() < 120);
    assert!(report.psrf.unwrap() < 1.01);
    assert_eq!(report.ess_per_chain.len(), 4);
}
