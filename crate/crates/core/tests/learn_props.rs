use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sigpath::learn::{
    classification_report, featurize, fit_lasso, fit_ridge, lasso_kkt_residual, lasso_lambda_max, stability_selection,
    synthetic_two_class, FeatureKind, FeatureMatrix, FeatureSpec, SyntheticTask,
};
use sigpath::{shuffle, Stream, Transform, Word};

fn gaussian_design(seed: u64, n: usize, p: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    FeatureMatrix {
        spec: FeatureSpec {
            dim: p - 1,
            depth: 1,
            transform: Transform::None,
            kind: FeatureKind::Signature,
        },
        columns: (0..p).map(|j| j.to_string()).collect(),
        values,
    }
}

fn targets(x: &FeatureMatrix, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    (0..x.rows())
        .map(|i| {
            x.values.row(i).iter().enumerate().map(|(j, v)| v * (j as f64 * 0.37).sin()).sum::<f64>()
                + 0.1 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// `min ‖Xβ − y‖² + λ‖β₋₀‖²` from the normal equations.
fn normal_equations(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let mut g = x.transpose() * x;
    for j in 1..g.ncols() {
        g[(j, j)] += lambda;
    }
    let rhs = x.transpose() * DVector::from_column_slice(y);
    g.lu().solve(&rhs).unwrap().iter().copied().collect()
}

fn streams(seed: u64, count: usize) -> Vec<Stream> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut p = vec![0.0, 0.0];
            let mut pts = vec![p.clone()];
            for _ in 0..rng.random_range(1..6) {
                for x in p.iter_mut() {
                    *x += rng.sample::<f64, _>(StandardNormal);
                }
                pts.push(p.clone());
            }
            Stream::from_points(pts).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ridge_matches_normal_equations(seed in any::<u64>(), lambda in 0.0f64..5.0) {
        let x = gaussian_design(seed, 60, 6);
        let y = targets(&x, seed);
        let m = fit_ridge(&x, &y, lambda).unwrap();
        let oracle = normal_equations(&x.values, &y, lambda);
        for (a, b) in m.coefficients.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn ridge_shrinks_monotonically(seed in any::<u64>(), l1 in 0.0f64..10.0, gap in 0.01f64..10.0) {
        let x = gaussian_design(seed, 40, 8);
        let y = targets(&x, seed);
        let norm = |l: f64| fit_ridge(&x, &y, l).unwrap().coefficients[1..].iter().map(|b| b * b).sum::<f64>();
        prop_assert!(norm(l1) >= norm(l1 + gap) * (1.0 - 1e-12));
    }

    #[test]
    fn lasso_without_penalty_is_least_squares(seed in any::<u64>()) {
        let x = gaussian_design(seed, 80, 5);
        let y = targets(&x, seed);
        let lasso = fit_lasso(&x, &y, 0.0, 100_000, 1e-12).unwrap();
        let ridge = fit_ridge(&x, &y, 0.0).unwrap();
        prop_assert!(lasso.converged());
        for (a, b) in lasso.coefficients.iter().zip(&ridge.coefficients) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn lasso_kkt_holds(seed in any::<u64>(), frac in 0.01f64..0.9) {
        let x = gaussian_design(seed, 70, 9);
        let y = targets(&x, seed);
        let lambda = frac * lasso_lambda_max(&x, &y).unwrap();
        let m = fit_lasso(&x, &y, lambda, 100_000, 1e-12).unwrap();
        prop_assert!(lasso_kkt_residual(&x, &y, &m).unwrap() <= 1e-6);
    }

    #[test]
    fn roc_ignores_increasing_transforms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|l| (l + rng.sample::<f64, _>(StandardNormal) * 0.8 * 4.0).round() / 4.0)
            .collect();
        let transformed: Vec<f64> = scores.iter().map(|s| (s * 3.0).exp() + 7.0).collect();
        let a = classification_report(&scores, &labels).unwrap();
        let b = classification_report(&transformed, &labels).unwrap();
        prop_assert_eq!(&a.roc, &b.roc);
        prop_assert_eq!(a.auc, b.auc);
        prop_assert_eq!(a.ks, b.ks);
        prop_assert!(a.roc.windows(2).all(|w| w[1][0] >= w[0][0] && w[1][1] >= w[0][1]));
    }
}

#[test]
fn lasso_above_lambda_max_is_empty() {
    let x = gaussian_design(3, 50, 7);
    let y = targets(&x, 3);
    let lmax = lasso_lambda_max(&x, &y).unwrap();
    let m = fit_lasso(&x, &y, lmax * 1.0001, 1000, 1e-12).unwrap();
    assert!(m.active_set().is_empty());
    assert!((m.coefficients[0] - y.iter().sum::<f64>() / 50.0).abs() < 1e-12);
    let m = fit_lasso(&x, &y, lmax * 0.9, 1000, 1e-12).unwrap();
    assert!(!m.active_set().is_empty());
}

#[test]
fn feature_columns_multiply_by_shuffles() {
    let x = featurize(&streams(9, 30), 4, Transform::None).unwrap();
    let words = Word::all_up_to(2, 2);
    for u in &words {
        for v in &words {
            let product: Vec<f64> = (0..x.rows())
                .map(|i| x.values[(i, x.column_index(&u.to_string()).unwrap())] * x.values[(i, x.column_index(&v.to_string()).unwrap())])
                .collect();
            let mut combo = vec![0.0; x.rows()];
            for (w, m) in shuffle(u, v).terms() {
                let col = x.column_index(&w.to_string()).unwrap();
                for (c, i) in combo.iter_mut().zip(0..) {
                    *c += *m as f64 * x.values[(i, col)];
                }
            }
            for (a, b) in product.iter().zip(&combo) {
                assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{u} ⧢ {v}");
            }
        }
    }
}

#[test]
fn stability_selection_prefers_the_signal() {
    let x = gaussian_design(5, 120, 10);
    let y: Vec<f64> = (0..120).map(|i| 2.0 * x.values[(i, 4)] + 0.05 * (i as f64).sin()).collect();
    let freq = stability_selection(&x, &y, 0.1, 20, 1).unwrap();
    assert_eq!(freq[4], 1.0);
    assert_eq!(freq[0], 0.0);
    assert!(freq.iter().enumerate().filter(|(j, _)| *j != 4).all(|(_, &f)| f < 0.5));
    assert_eq!(freq, stability_selection(&x, &y, 0.1, 20, 1).unwrap());
}

#[test]
fn synthetic_classes_have_opposite_mean_area() {
    let (s, labels) = synthetic_two_class(
        &SyntheticTask {
            streams: 400,
            steps: 30,
            rho: 0.6,
        },
        3,
    )
    .unwrap();
    let mut area = [0.0; 2];
    for (stream, l) in s.iter().zip(&labels) {
        let log = sigpath::log_signature(stream, 2).unwrap();
        area[*l as usize] += log.get(&"1,2".parse().unwrap()).unwrap() / 200.0;
    }
    assert!(area[1] > 1.0 && area[0] < -1.0, "{area:?}");
}
