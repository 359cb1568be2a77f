//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.
//!
//! `cargo test -p svtnet --test acceptance -- 1 5 12` runs a subset.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svtnet::baselines::{graphlet_kernel, random_walk_kernel, shortest_path_kernel, wl_kernel, RandomWalk};
use svtnet::diffusion::{heat_kernel, separation_eigenvalue, spectral_decompose, suggest_tau_max, DistanceMatrix};
use svtnet::experiment::{BaTauMax, GnTransition, ModelId};
use svtnet::generators::{generate, realization_seed, GeneratorSpec, Model};
use svtnet::graph::WeightedGraph;
use svtnet::kernel::{combine_grams, gram_matrix, GramMatrix, KernelParams};
use svtnet::learn::kfdr_series;
use svtnet::metrics::{bottleneck_2d, bottleneck_3d, stability_gap};
use svtnet::persistence::{rips_persistence, Diagram2D, Diagram3D};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    (1, "persistence matches boundary-matrix reduction", persistence_oracle),
    (2, "worked filtration example", worked_example),
    (3, "stability bound", stability),
    (4, "kernel validity", kernel_validity),
    (5, "KFDR Gram identity", kfdr_oracle),
    (6, "GN transition point", gn_transition),
    (7, "model identification", model_identification),
    (8, "BA accuracy against largest timescale", ba_tau_max),
    (9, "BA separation eigenvalue", spectral_heuristic),
    (10, "bottleneck exactness", bottleneck_exactness),
    (11, "diffusion closed form and invariants", diffusion_closed_form),
    (12, "baseline kernels against brute force", baseline_kernels),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn persistence_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=15);
        let dim = rng.gen_range(2..=3);
        let d = random_cloud(&mut rng, n, dim);
        let diagrams = rips_persistence(&DistanceMatrix::new(None, d.clone()).unwrap(), 1).unwrap();
        let got = (diagrams[0].sorted_tuples(), diagrams[1].sorted_tuples());
        if got != naive_rips(&d) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("{mismatches}/200 mismatches in {:.2}s", elapsed.as_secs_f64()),
    )
}

fn worked_example() -> Outcome {
    // Six points: a four-cycle 1-2-3-5 closing at 0.428 with chord 1-3 at
    // 0.430, and two pendants 4 and 6 attached early.
    let mut d = DMatrix::from_element(6, 6, 0.9);
    let set = |d: &mut DMatrix<f64>, a: usize, b: usize, v: f64| {
        d[(a - 1, b - 1)] = v;
        d[(b - 1, a - 1)] = v;
    };
    for (a, b, v) in [(1, 2, 0.407), (2, 3, 0.407), (3, 5, 0.42), (5, 1, 0.428), (1, 3, 0.43), (4, 1, 0.2), (6, 5, 0.1)] {
        set(&mut d, a, b, v);
    }
    for i in 0..6 {
        d[(i, i)] = 0.0;
    }
    let diagrams = rips_persistence(&DistanceMatrix::new(None, d).unwrap(), 1).unwrap();
    let h0 = diagrams[0].sorted_tuples();
    let h1 = diagrams[1].sorted_tuples();
    let near = |x: f64, y: f64| (x - y).abs() <= 1e-3;
    let deaths_407 = h0.iter().filter(|p| near(p.1, 0.407)).count();
    let loop_ok = h1.len() == 1 && near(h1[0].0, 0.428) && near(h1[0].1, 0.430);
    Outcome::new(deaths_407 == 2 && loop_ok, format!("H0 {h0:?}, H1 {h1:?}"))
}

fn stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid: Vec<f64> = (1..=5).map(f64::from).collect();
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let g = random_connected_weighted(&mut rng, 32, 32);
        let scale = rng.gen_range(0.01..0.3);
        let edges: Vec<_> = g
            .edges()
            .iter()
            .map(|&(a, b, w)| (a, b, w * (1.0 + scale * rng.gen_range(-1.0..1.0))))
            .collect();
        let h = WeightedGraph::new(32, edges).unwrap();
        let (lhs, rhs) = stability_gap(&g, &h, &grid, 1, 1.0).unwrap();
        if lhs > rhs {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(lhs / rhs);
    }
    Outcome::new(
        violations == 0,
        format!("{} of 100 within bound, largest bottleneck/bound ratio {worst_ratio:.3}", 100 - violations),
    )
}

fn random_diagram(rng: &mut impl Rng) -> Diagram3D {
    let pts: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=25))
        .map(|_| {
            let b: f64 = rng.gen_range(0.0..0.5);
            (b, b + rng.gen_range(0.0..0.5), rng.gen_range(1..=10) as f64)
        })
        .collect();
    Diagram3D::from_triples(1, pts)
}

fn kernel_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let first: Vec<Diagram3D> = (0..50).map(|_| random_diagram(&mut rng)).collect();
    let second: Vec<Diagram3D> = (0..50).map(|_| random_diagram(&mut rng)).collect();
    let p = KernelParams::new(0.1, 0.1).unwrap();
    let raw = gram_matrix(&first, p, false).unwrap();
    let normalized = gram_matrix(&first, p, true).unwrap();
    let combined = combine_grams(&[normalized.clone(), gram_matrix(&second, p, true).unwrap()], &[0.5, 0.5]).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, g) in [("raw", &raw), ("normalized", &normalized), ("combined", &combined)] {
        let (lo, hi) = g.eigen_range();
        let symmetric = g.matrix == g.matrix.transpose();
        let psd = lo >= -1e-8 * hi;
        let diag_ok = !g.normalized || (0..g.len()).all(|i| (g.get(i, i) - 1.0).abs() <= 1e-12);
        pass &= symmetric && psd && diag_ok;
        details.push(format!("{name}: eig [{lo:.2e}, {hi:.2e}] symmetric={symmetric} unit-diagonal={diag_ok}"));
    }
    Outcome::new(pass, details.join("; "))
}

fn kfdr_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = DMatrix::from_fn(20, 3, |i, _| rng.gen::<f64>() + if i >= 9 { 0.5 } else { 0.0 });
    let k = GramMatrix::from_matrix(&x * x.transpose(), false).unwrap();
    let series = kfdr_series(&k, 0.1).unwrap();
    let worst = series
        .values
        .iter()
        .map(|&(s, kappa)| (kappa - explicit_kfdr(&x, s, 0.1)).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        worst < 1e-8 && series.values.len() == 19,
        format!("largest deviation {worst:.2e} over s = 2..=20"),
    )
}

fn gn_transition() -> Outcome {
    let report = GnTransition::desk().run(None).unwrap();
    Outcome::new(
        (0.08..=0.20).contains(&report.r_star),
        format!("r* = {:.2} (per-realization σ {:?})", report.r_star, report.sigmas),
    )
}

fn model_identification() -> Outcome {
    let report = ModelId::desk().run(None).unwrap();
    let per_class: Vec<String> = report
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{c} {:.3}", report.confusion[(i, i)]))
        .collect();
    let Some((sv, common)) = report.configuration else {
        return Outcome::new(false, "no configuration subproblem");
    };
    Outcome::new(
        report.accuracy.mean >= 0.85 && sv.mean > common.mean,
        format!(
            "accuracy {:.3} ± {:.3} ({}); configuration classes: scale-variant {:.3} vs common measures {:.3}",
            report.accuracy.mean,
            report.accuracy.sd,
            per_class.join(", "),
            sv.mean,
            common.mean
        ),
    )
}

fn ba_tau_max() -> Outcome {
    let study = BaTauMax {
        tau_max: vec![5, 65, 80, 100],
        ..BaTauMax::desk()
    };
    let report = study.run(None).unwrap();
    let at = |t| report.accuracy_at(t).unwrap();
    let gain = at(100) - at(5);
    let plateau = [65, 80].iter().all(|&t| (at(t) - at(100)).abs() <= 0.02);
    let table: Vec<String> = report.accuracy.iter().map(|(t, r)| format!("{t}: {:.3}", r.mean)).collect();
    Outcome::new(
        gain >= 0.10 && plateau,
        format!("accuracy by τ_max {{{}}}, gain {:.1} points", table.join(", "), 100.0 * gain),
    )
}

fn spectral_heuristic() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for m0 in 1..=6 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut tau_range = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..5 {
            let seed = realization_seed(9, (m0 * 100 + k) as u64);
            let g = generate(&GeneratorSpec::new(Model::BarabasiAlbert { m0 }, 128, seed)).unwrap();
            let spec = spectral_decompose(&g.laplacian()).unwrap();
            let lambda = separation_eigenvalue(&spec).unwrap();
            let tau = suggest_tau_max(&spec, 10.0).unwrap();
            pass &= (0.1..=0.3).contains(&lambda) && (33.0..=100.0).contains(&tau);
            lo = lo.min(lambda);
            hi = hi.max(lambda);
            tau_range = (tau_range.0.min(tau), tau_range.1.max(tau));
        }
        details.push(format!(
            "m0={m0}: λ_sep [{lo:.3}, {hi:.3}], τ_max [{:.0}, {:.0}]",
            tau_range.0, tau_range.1
        ));
    }
    Outcome::new(pass, details.join("; "))
}

fn bottleneck_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut triples = |planes: usize| -> Vec<Triple> {
        (0..rng.gen_range(0..=6))
            .map(|_| {
                let b: f64 = rng.gen();
                (b, b + rng.gen::<f64>(), rng.gen_range(1..=planes) as f64)
            })
            .collect()
    };
    let mut mismatches = 0;
    for _ in 0..500 {
        let (a, b) = (triples(1), triples(1));
        let x = Diagram2D::new(1, Some(1.0), a.iter().map(|p| (p.0, p.1)));
        let y = Diagram2D::new(1, Some(1.0), b.iter().map(|p| (p.0, p.1)));
        if bottleneck_2d(&x, &y) != exhaustive_bottleneck(&a, &b, 1.0) {
            mismatches += 1;
        }
        let (a, b) = (triples(3), triples(3));
        let got = bottleneck_3d(
            &Diagram3D::from_triples(1, a.iter().copied()),
            &Diagram3D::from_triples(1, b.iter().copied()),
            0.3,
        )
        .unwrap();
        if got != exhaustive_bottleneck(&a, &b, 0.3) {
            mismatches += 1;
        }
    }
    Outcome::new(mismatches == 0, format!("{mismatches} mismatches over 500 2D and 500 3D pairs"))
}

fn diffusion_closed_form() -> Outcome {
    let two = WeightedGraph::unweighted(2, [(0, 1)]).unwrap().laplacian();
    let mut closed = 0.0f64;
    for tau in [0.1, 1.0, 10.0] {
        let h = heat_kernel(&two, tau).unwrap();
        let e = (-2.0 * tau).exp();
        let want = DMatrix::from_row_slice(2, 2, &[1.0 + e, 1.0 - e, 1.0 - e, 1.0 + e]) * 0.5;
        closed = closed.max((h - want).abs().max());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut semigroup, mut rows) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let density = rng.gen_range(0.1..0.6);
        let g = random_graph(&mut rng, n, density);
        let l = g.laplacian();
        let (s, t) = (rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0));
        let (hs, ht, hst) = (heat_kernel(&l, s).unwrap(), heat_kernel(&l, t).unwrap(), heat_kernel(&l, s + t).unwrap());
        semigroup = semigroup.max((&hs * &ht - hst).abs().max());
        rows = rows.max((0..n).map(|i| (hs.row(i).sum() - 1.0).abs()).fold(0.0, f64::max));
    }
    Outcome::new(
        closed <= 1e-12 && semigroup <= 1e-12 && rows <= 1e-12,
        format!("closed form {closed:.1e}, semigroup {semigroup:.1e}, row sums {rows:.1e}"),
    )
}

fn baseline_kernels() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let lambdas = vec![1.0, 1.0, 1.0, 1.0];
    let (mut integer_mismatches, mut kstep_worst) = (0, 0.0f64);
    for _ in 0..200 {
        let (n1, n2) = (rng.gen_range(4..=8), rng.gen_range(4..=8));
        let p = rng.gen_range(0.1..0.9);
        let (g, h) = (random_graph(&mut rng, n1, p), random_graph(&mut rng, n2, p));
        let checks = [
            (wl_kernel(&g, &h, 3), brute_wl_kernel(&g, &h, 3)),
            (shortest_path_kernel(&g, &h), brute_sp_kernel(&g, &h)),
            (graphlet_kernel(&g, &h, 3).unwrap(), brute_graphlet_kernel(&g, &h, 3)),
            (graphlet_kernel(&g, &h, 4).unwrap(), brute_graphlet_kernel(&g, &h, 4)),
        ];
        integer_mismatches += checks.iter().filter(|(a, b)| a != b).count();
        let k = random_walk_kernel(&g, &h, &RandomWalk::KStep { lambdas: lambdas.clone() }).unwrap();
        let want = brute_kstep(&g, &h, &lambdas);
        kstep_worst = kstep_worst.max((k - want).abs() / want.abs().max(1.0));
    }
    Outcome::new(
        integer_mismatches == 0 && kstep_worst <= 1e-9,
        format!("{integer_mismatches} WL/SP/graphlet mismatches, k-step relative error {kstep_worst:.1e}, 200 pairs"),
    )
}
