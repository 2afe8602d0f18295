use bnn_mcmc::mlp::{log_likelihood, log_likelihood_binary, Activation, Architecture};
use bnn_mcmc::samplers::{pp_normalizer, pp_swap_pmf};
use bnn_mcmc::{LabeledDataset, Role};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Swaps hidden neurons 0 and 1 of an MLP(p, 2, 1): rows of `W_1` and `b_1`,
/// columns of `W_2`.
fn swap_hidden(arch: &Architecture, theta: &[f64]) -> Vec<f64> {
    let mut out = theta.to_vec();
    let p = arch.input_width();
    for c in 0..p {
        out.swap(arch.weight_index(1, 0, c), arch.weight_index(1, 1, c));
    }
    out.swap(arch.bias_index(1, 0), arch.bias_index(1, 1));
    out.swap(arch.weight_index(2, 0, 0), arch.weight_index(2, 0, 1));
    out
}

fn random_data(p: usize, k: usize, s: usize, rng: &mut ChaCha8Rng) -> LabeledDataset {
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let labels = (0..s).map(|_| rng.random_range(0..k)).collect();
    LabeledDataset::from_rows(&rows, labels, k, Role::Train).unwrap()
}

#[test]
fn hidden_permutation_leaves_likelihood_unchanged() {
    let arch = Architecture::mlp(&[2, 2, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let theta: Vec<f64> = (0..9)
            .map(|_| 10f64.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = random_data(2, 2, 20, &mut rng);
        let a = log_likelihood_binary(&arch, &theta, &data).unwrap();
        let b = log_likelihood_binary(&arch, &swap_hidden(&arch, &theta), &data).unwrap();
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn tanh_sign_flip_leaves_likelihood_unchanged() {
    let arch = Architecture::new(vec![3, 2, 1], Activation::Tanh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let theta: Vec<f64> = (0..arch.parameter_count())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let data = random_data(3, 2, 15, &mut rng);
        let mut flipped = theta.clone();
        for c in 0..3 {
            flipped[arch.weight_index(1, 1, c)] *= -1.0;
        }
        flipped[arch.bias_index(1, 1)] *= -1.0;
        flipped[arch.weight_index(2, 0, 1)] *= -1.0;
        let a = log_likelihood(&arch, &theta, &data).unwrap();
        let b = log_likelihood(&arch, &flipped, &data).unwrap();
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn sample_order_does_not_matter() {
    let arch = Architecture::mlp(&[6, 2, 2, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let theta: Vec<f64> = (0..29).map(|_| rng.sample(StandardNormal)).collect();
    let data = random_data(6, 3, 40, &mut rng);
    let reversed: Vec<usize> = (0..40).rev().collect();
    let a = log_likelihood(&arch, &theta, &data).unwrap();
    let b = log_likelihood(&arch, &theta, &data.select(&reversed)).unwrap();
    assert!((a - b).abs() < 1e-10);
}

proptest! {
    #[test]
    fn softmax_outputs_are_distributions(
        theta in prop::collection::vec(-5.0f64..5.0, 4 * 4 + 5 * 5),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let arch = Architecture::mlp(&[3, 4, 5]).unwrap();
        let out = arch.forward(&theta, &x).unwrap();
        let total: f64 = out.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn binary_event_probabilities_sum_to_one(
        theta in prop::collection::vec(-20.0f64..20.0, 9),
        x in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let arch = Architecture::mlp(&[2, 2, 1]).unwrap();
        let z = arch.event_probabilities(&theta, &x).unwrap();
        prop_assert_eq!(z[0] + z[1], 1.0);
    }

    #[test]
    fn swap_pmf_is_a_distribution(m in 1usize..65, frac in 0.0f64..1.0, beta in 0.05f64..3.0) {
        let i = ((m + 1) as f64 * frac) as usize;
        let i = i.min(m);
        let pmf = pp_swap_pmf(i, m, beta).unwrap();
        let total: f64 = pmf.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(pmf.probability(i), 0.0);
        prop_assert!(pp_normalizer(i, m, beta).unwrap() > 0.0);
    }
}
