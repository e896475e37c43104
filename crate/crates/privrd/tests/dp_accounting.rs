mod common;

use privrd::data_model::{ParamSpace, RngStream};
use privrd::mechanisms::{bernoulli_laplace_epsilon, bernoulli_laplace_mean, Normalization};
use privrd::Dataset;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn enumeration_certifies_bernoulli_laplace_bound() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for n in [1usize, 3, 6, 10] {
        for pi in [0.2, 0.5, 0.9] {
            for lambda in [0.05, 0.3] {
                let eps = bernoulli_laplace_epsilon(n as u64, pi, lambda).unwrap();
                let mut a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let mut b = a.clone();
                a[0] = 0.0;
                b[0] = 1.0;
                let log_ratio = common::bernoulli_laplace_max_log_ratio(&a, &b, pi, lambda);
                assert!(log_ratio <= eps + 1e-9, "n={n} pi={pi} lambda={lambda}: {log_ratio} > {eps}");
                // the bound is attained beyond the largest subset mean
                assert!((log_ratio - eps).abs() < 1e-9, "bound not tight: {log_ratio} vs {eps}");
            }
        }
    }
}

#[test]
fn mechanism_reports_the_enumerated_epsilon() {
    let d = Dataset::univariate(vec![0.2, 0.9, 0.4]).unwrap();
    let r = bernoulli_laplace_mean(&d, 0.5, 0.3, &ParamSpace::unit(), Normalization::Expected, &RngStream::new(1, 0))
        .unwrap();
    assert!((r.privacy.epsilon - bernoulli_laplace_epsilon(3, 0.5, 0.3).unwrap()).abs() < 1e-15);
}

#[test]
fn audits_stay_within_analytic_epsilon() {
    for case in common::audit_matrix(20_000, 3) {
        assert!(
            case.passes(),
            "{}: eps_hat {} > eps {} + {}",
            case.name,
            case.report.epsilon_hat,
            case.epsilon,
            case.report.half_width
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interior_changes_stay_below_bound(
        xs in prop::collection::vec(0.0f64..1.0, 2..7),
        alt in 0.0f64..1.0,
        pi in 0.05f64..1.0,
        lambda in 0.02f64..1.0,
    ) {
        let mut b = xs.clone();
        b[0] = alt;
        let eps = bernoulli_laplace_epsilon(xs.len() as u64, pi, lambda).unwrap();
        let log_ratio = common::bernoulli_laplace_max_log_ratio(&xs, &b, pi, lambda);
        prop_assert!(log_ratio <= eps + 1e-9);
    }

    #[test]
    fn epsilon_decreases_with_lambda(n in 1u64..1000, pi in 0.01f64..1.0, l in 0.01f64..5.0) {
        let a = bernoulli_laplace_epsilon(n, pi, l).unwrap();
        let b = bernoulli_laplace_epsilon(n, pi, 2.0 * l).unwrap();
        prop_assert!(b <= a);
        prop_assert!(a <= 1.0 / (n as f64 * l * pi) + 1e-12);
    }
}
