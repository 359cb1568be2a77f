mod common;

use common::explicit_kfdr;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svtnet::kernel::GramMatrix;
use svtnet::learn::{cross_validate, kernel_pca, kfdr_series, svm_predict, svm_train, KKT_TOL};

fn linear_gram(x: &DMatrix<f64>) -> GramMatrix {
    GramMatrix::from_matrix(x * x.transpose(), false).unwrap()
}

#[test]
fn kfdr_matches_feature_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..10 {
        let x = DMatrix::from_fn(20, 3, |i, _| rng.gen::<f64>() + if i >= 12 { 0.8 } else { 0.0 });
        let series = kfdr_series(&linear_gram(&x), 0.1).unwrap();
        for &(s, k) in &series.values {
            assert!((k - explicit_kfdr(&x, s, 0.1)).abs() < 1e-8);
        }
        assert_eq!(series.argmax, 13);
    }
}

#[test]
fn svm_separates_two_points() {
    let k = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]), false).unwrap();
    let model = svm_train(&k, &[0, 1], 10.0).unwrap();
    assert_eq!(svm_predict(&model, &k.matrix).unwrap(), vec![0, 1]);
}

#[test]
fn svm_solution_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for c in [0.1, 1.0, 10.0] {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = DMatrix::from_fn(40, 2, |i, _| rng.gen::<f64>() + labels[i] as f64 * 0.7);
        let k = linear_gram(&x);
        let model = svm_train(&k, &labels, c).unwrap();
        let m = &model.machines[0];
        let mut alpha_y = vec![0.0; 40];
        for (&i, &a) in m.support.iter().zip(&m.coef) {
            alpha_y[i] = a;
        }
        assert!(alpha_y.iter().sum::<f64>().abs() < 1e-9);
        for i in 0..40 {
            let y = if labels[i] == m.classes.0 { 1.0 } else { -1.0 };
            let alpha = alpha_y[i] * y;
            assert!((-1e-12..=c + 1e-12).contains(&alpha));
            let margin = y * m.decision(|j| k.get(i, j));
            let tol = 2.0 * KKT_TOL;
            if alpha <= 1e-12 {
                assert!(margin >= 1.0 - tol, "free-at-zero margin {margin}");
            } else if alpha >= c - 1e-12 {
                assert!(margin <= 1.0 + tol, "bounded margin {margin}");
            } else {
                assert!((margin - 1.0).abs() <= tol, "support margin {margin}");
            }
        }
    }
}

#[test]
fn cross_validation_on_clear_clusters() {
    let labels: Vec<usize> = (0..30).map(|i| i / 10).collect();
    let k = DMatrix::from_fn(30, 30, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.3 });
    let r = cross_validate(&GramMatrix::from_matrix(k, true).unwrap(), &labels, 5, 3, 9).unwrap();
    assert_eq!(r.mean, 1.0);
    assert_eq!(r.accuracies.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kpca_preserves_kernel_distances(seed in any::<u64>(), m in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(m, 4, |_, _| rng.gen::<f64>());
        let k = linear_gram(&x);
        let z = kernel_pca(&k, m).unwrap();
        for i in 0..m {
            for j in 0..m {
                let want = k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j);
                let got: f64 = (0..m).map(|c| (z[(i, c)] - z[(j, c)]).powi(2)).sum();
                prop_assert!((want - got).abs() < 1e-9);
            }
        }
        for c in 0..m {
            prop_assert!(z.column(c).sum().abs() < 1e-9);
        }
    }

    #[test]
    fn kfdr_is_nonnegative_and_shift_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(10, 3, |_, _| rng.gen::<f64>());
        let shifted = DMatrix::from_fn(10, 3, |i, j| x[(i, j)] + 5.0);
        let (a, b) = (kfdr_series(&linear_gram(&x), 0.1).unwrap(), kfdr_series(&linear_gram(&shifted), 0.1).unwrap());
        for (p, q) in a.values.iter().zip(&b.values) {
            prop_assert!(p.1 >= 0.0);
            prop_assert!((p.1 - q.1).abs() < 1e-7 * p.1.max(1.0));
        }
    }
}
