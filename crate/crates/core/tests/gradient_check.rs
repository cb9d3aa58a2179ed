//! Central finite differences against the analytic gradients.

use rand::Rng;
use rmgd_core::data::{Matrix, Split};
use rmgd_core::model::{self, ModelSpec};
use rmgd_core::optim::ModelParams;
use rmgd_core::rng::stream_rng;

const H: f64 = 1e-5;

fn instance(spec: &ModelSpec, n: usize, seed: u64) -> (ModelParams, Split) {
    let mut rng = stream_rng(seed, 0xfd);
    let mut params = spec.init_params(&mut rng).unwrap();
    for v in &mut params.values {
        *v += rng.random_range(-0.5..0.5);
    }
    let x = (0..n * spec.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = (0..n).map(|_| rng.random_range(0..spec.num_classes)).collect();
    (
        params,
        Split::new(Matrix::new(n, spec.input_dim, x).unwrap(), y).unwrap(),
    )
}

fn numeric_grad(spec: &ModelSpec, params: &ModelParams, batch: &Split) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.values[i] += H;
            minus.values[i] -= H;
            let lp = model::loss(spec, &plus, batch).unwrap();
            let lm = model::loss(spec, &minus, batch).unwrap();
            (lp - lm) / (2.0 * H)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, 1e-4)`; the floor keeps near-zero components from
/// turning round-off into large ratios.
fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-4))
        .fold(0.0, f64::max)
}

fn check(spec: &ModelSpec, instances: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let (params, batch) = instance(spec, 7, seed);
        let (_, analytic) = model::loss_and_grad(spec, &params, &batch).unwrap();
        worst = worst.max(max_relative_error(&analytic, &numeric_grad(spec, &params, &batch)));
    }
    worst
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let err = check(&ModelSpec::logistic(5, 4).with_l2(0.01), 25);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let err = check(&ModelSpec::mlp(5, 8, 4).with_l2(0.01), 25);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn unregularized_gradients_match_too() {
    assert!(check(&ModelSpec::logistic(3, 2), 10) < 1e-5);
    assert!(check(&ModelSpec::mlp(3, 4, 3), 10) < 1e-5);
}
