use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svtnet::kernel::{
    bandwidth_heuristic, combine_grams, gram_matrix, kernel_value, kernel_value_naive, GramMatrix, KernelParams,
};
use svtnet::persistence::Diagram3D;

fn random_diagram(rng: &mut impl Rng, max: usize) -> Diagram3D {
    let pts: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=max))
        .map(|_| {
            let b: f64 = rng.gen_range(0.0..0.5);
            (b, b + rng.gen_range(0.0..0.5), rng.gen_range(1..=6) as f64)
        })
        .collect();
    Diagram3D::from_triples(1, pts)
}

fn params(sigma: f64) -> KernelParams {
    KernelParams::new(sigma, sigma).unwrap()
}

#[test]
fn gram_is_psd_with_unit_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let ds: Vec<Diagram3D> = (0..30).map(|_| random_diagram(&mut rng, 12)).collect();
    let p = bandwidth_heuristic(&ds).unwrap();
    let raw = gram_matrix(&ds, p, false).unwrap();
    let norm = gram_matrix(&ds, p, true).unwrap();
    assert!(raw.is_psd(1e-8) && norm.is_psd(1e-8));
    assert!((0..30).all(|i| (norm.get(i, i) - 1.0).abs() <= 1e-12));
}

#[test]
fn csv_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let ds: Vec<Diagram3D> = (0..5).map(|_| random_diagram(&mut rng, 6)).collect();
    let g = gram_matrix(&ds, params(0.2), true).unwrap();
    let back = GramMatrix::from_csv(&g.to_csv(), "mem").unwrap();
    assert_eq!(back.matrix, g.matrix);
    assert_eq!(back.ids, g.ids);
}

#[test]
fn combination_weights_are_checked() {
    let k = GramMatrix::from_matrix(nalgebra::DMatrix::identity(2, 2), true).unwrap();
    assert!(combine_grams(&[k.clone(), k.clone()], &[0.7, 0.7]).is_err());
    assert!(combine_grams(&[k.clone(), k], &[0.25, 0.75]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pruned_sum_matches_direct_sum(seed in any::<u64>(), sigma in 0.02f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, f) = (random_diagram(&mut rng, 15), random_diagram(&mut rng, 15));
        let (fast, slow) = (kernel_value(&e, &f, params(sigma)), kernel_value_naive(&e, &f, params(sigma)));
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1e-300) + 1e-300, "{fast} vs {slow}");
    }

    #[test]
    fn symmetric_and_order_free(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, f) = (random_diagram(&mut rng, 10), random_diagram(&mut rng, 10));
        let p = params(0.15);
        prop_assert_eq!(kernel_value(&e, &f, p), kernel_value(&f, &e, p));
        let mut shuffled = e.clone();
        shuffled.points.reverse();
        let a = kernel_value(&e, &f, p);
        prop_assert!((kernel_value(&shuffled, &f, p) - a).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn diagonal_points_contribute_nothing(seed in any::<u64>(), x in 0.0f64..1.0, t in 1u8..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, f) = (random_diagram(&mut rng, 10), random_diagram(&mut rng, 10));
        let mut padded = f.clone();
        padded.points.push(svtnet::persistence::DiagramPoint::new(x, x, t as f64));
        let p = params(0.2);
        let a = kernel_value(&e, &f, p);
        prop_assert!((kernel_value(&e, &padded, p) - a).abs() <= 1e-14 * a.abs().max(1e-300));
    }

    #[test]
    fn self_kernel_is_positive(seed in any::<u64>(), sigma in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_diagram(&mut rng, 10);
        prop_assert!(kernel_value(&e, &e, params(sigma)) > 0.0);
    }
}
