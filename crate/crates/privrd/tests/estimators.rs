use privrd::data_model::{Dataset, RddObs};
use privrd::kernels::KernelSpec;
use privrd::rdd::{local_linear_fuzzy, local_linear_sharp, nr_boundary_estimate};
use proptest::prelude::*;

fn kernels() -> [KernelSpec; 4] {
    [KernelSpec::uniform(), KernelSpec::triangular(), KernelSpec::epanechnikov(), KernelSpec::gaussian()]
}

fn dataset(xs: &[f64], ys: &[f64]) -> Dataset {
    Dataset::rdd(xs.iter().zip(ys).map(|(&x, &y)| RddObs::new(y, x)).collect()).unwrap()
}

/// Running variable values on both sides of 0, inside (−0.9, 0.9), with at
/// least three distinct values per side.
fn design() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0.05f64..0.9, 3..12), prop::collection::vec(0.05f64..0.9, 3..12)).prop_map(|(l, r)| {
        let mut xs: Vec<f64> = l.iter().map(|v| -v).collect();
        xs.extend(r);
        xs
    })
}

proptest! {
    #[test]
    fn local_linear_is_exact_on_affine_data(
        xs in design(),
        al in -5.0f64..5.0, bl in -5.0f64..5.0, ar in -5.0f64..5.0, br in -5.0f64..5.0,
        k in 0usize..4,
    ) {
        let ys: Vec<f64> = xs.iter().map(|&x| if x >= 0.0 { ar + br * x } else { al + bl * x }).collect();
        let fit = local_linear_sharp(&dataset(&xs, &ys), 0.0, &kernels()[k], 1.0).unwrap();
        prop_assert!((fit.tau_hat - (ar - al)).abs() < 1e-10);
        prop_assert!((fit.left.intercept - al).abs() < 1e-10);
        prop_assert!((fit.right.slope.unwrap() - br).abs() < 1e-9);
    }

    #[test]
    fn sharp_estimators_are_affine_equivariant(
        xs in design(),
        noise in prop::collection::vec(-1.0f64..1.0, 24),
        a in -3.0f64..3.0, b in 0.1f64..4.0, shift in -2.0f64..2.0, scale in 0.5f64..3.0,
        k in 0usize..4,
    ) {
        let kernel = &kernels()[k];
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, &x)| x * x + noise[i] + if x >= 0.0 { 0.7 } else { 0.0 }).collect();
        let base = dataset(&xs, &ys);
        let ys2: Vec<f64> = ys.iter().map(|y| a + b * y).collect();
        let outcome = dataset(&xs, &ys2);
        let xs2: Vec<f64> = xs.iter().map(|x| shift + scale * x).collect();
        let moved = dataset(&xs2, &ys);
        for est in [nr_boundary_estimate, local_linear_sharp] {
            let t0 = est(&base, 0.0, kernel, 1.0).unwrap().tau_hat;
            let t1 = est(&outcome, 0.0, kernel, 1.0).unwrap().tau_hat;
            let t2 = est(&moved, shift, kernel, scale).unwrap().tau_hat;
            prop_assert!((t1 - b * t0).abs() < 1e-9 * (1.0 + t0.abs() * b));
            prop_assert!((t2 - t0).abs() < 1e-9 * (1.0 + t0.abs()));
        }
    }

    #[test]
    fn fuzzy_equals_sharp_under_full_compliance(
        xs in design(),
        noise in prop::collection::vec(-1.0f64..1.0, 24),
        k in 0usize..4,
    ) {
        let obs: Vec<RddObs> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| RddObs { y: x + noise[i], x, w: Some(x >= 0.0), d: None })
            .collect();
        let d = Dataset::rdd(obs).unwrap();
        let sharp = local_linear_sharp(&d, 0.0, &kernels()[k], 1.0).unwrap().tau_hat;
        let fuzzy = local_linear_fuzzy(&d, 0.0, &kernels()[k], 1.0).unwrap().tau_hat;
        prop_assert!((sharp - fuzzy).abs() < 1e-10 * (1.0 + sharp.abs()));
    }

    #[test]
    fn boundary_regression_is_difference_of_weighted_means(
        xs in design(),
        ys in prop::collection::vec(-2.0f64..2.0, 24),
    ) {
        let ys = &ys[..xs.len()];
        let fit = nr_boundary_estimate(&dataset(&xs, ys), 0.0, &KernelSpec::uniform(), 1.0).unwrap();
        let side = |right: bool| {
            let v: Vec<f64> = xs.iter().zip(ys).filter(|(x, _)| (**x >= 0.0) == right).map(|(_, y)| *y).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        prop_assert!((fit.tau_hat - (side(true) - side(false))).abs() < 1e-12);
    }
}
