//! Brute-force reference implementations shared by the integration tests.
//! Each one follows the textbook definition and shares no code with the
//! library beyond its data types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use svtnet::graph::WeightedGraph;

/// Sorted `(birth, death)` tuples.
pub type Pairs = Vec<(f64, f64)>;

fn sorted(mut v: Pairs) -> Pairs {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

/// H0 and H1 persistence of the Rips filtration on the full 2-skeleton,
/// by column reduction of the boundary matrix over Z/2. Infinite distances
/// are edges that never enter. H1 pairs of zero persistence are dropped.
pub fn naive_rips(d: &DMatrix<f64>) -> (Pairs, Pairs) {
    let n = d.nrows();
    // (value, dim, vertices)
    let mut simplices: Vec<(f64, usize, Vec<usize>)> = (0..n).map(|v| (0.0, 0, vec![v])).collect();
    for a in 0..n {
        for b in a + 1..n {
            if d[(a, b)].is_finite() {
                simplices.push((d[(a, b)], 1, vec![a, b]));
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let v = d[(a, b)].max(d[(a, c)]).max(d[(b, c)]);
                if v.is_finite() {
                    simplices.push((v, 2, vec![a, b, c]));
                }
            }
        }
    }
    simplices.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let index: BTreeMap<Vec<usize>, usize> = simplices.iter().enumerate().map(|(i, s)| (s.2.clone(), i)).collect();

    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|(_, dim, vs)| {
            if *dim == 0 {
                return vec![];
            }
            let mut faces: Vec<usize> = (0..vs.len())
                .map(|skip| {
                    let face: Vec<usize> = vs.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
                    index[&face]
                })
                .collect();
            faces.sort_unstable();
            faces
        })
        .collect();

    let mut low_owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut paired = vec![false; simplices.len()];
    let (mut h0, mut h1) = (Vec::new(), Vec::new());
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = symmetric_difference(&columns[j], &other);
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            low_owner.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let (birth, death) = (simplices[low].0, simplices[j].0);
            match simplices[low].1 {
                0 => h0.push((birth, death)),
                _ if death > birth => h1.push((birth, death)),
                _ => {}
            }
        }
    }
    for (i, s) in simplices.iter().enumerate() {
        if !paired[i] && columns[i].is_empty() {
            match s.1 {
                0 => h0.push((s.0, f64::INFINITY)),
                1 => h1.push((s.0, f64::INFINITY)),
                _ => {}
            }
        }
    }
    (sorted(h0), sorted(h1))
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Euclidean distances between random points of the unit cube in `dim`
/// dimensions.
pub fn random_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> DMatrix<f64> {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    })
}

/// A diagram point for the exhaustive bottleneck: `(birth, death, tau)`.
pub type Triple = (f64, f64, f64);

/// Bottleneck distance by enumerating every partial matching; unmatched
/// points go to their diagonal projection in their own timescale plane.
pub fn exhaustive_bottleneck(a: &[Triple], b: &[Triple], xi: f64) -> f64 {
    let cost = |p: &Triple, q: &Triple| (p.0 - q.0).abs().max((p.1 - q.1).abs()).max(xi * (p.2 - q.2).abs());
    let gap = |p: &Triple| (p.1 - p.0).abs() / 2.0;
    let mut used = vec![false; b.len()];
    fn go(
        i: usize,
        a: &[Triple],
        b: &[Triple],
        used: &mut Vec<bool>,
        cur: f64,
        best: &mut f64,
        cost: &dyn Fn(&Triple, &Triple) -> f64,
        gap: &dyn Fn(&Triple) -> f64,
    ) {
        if cur >= *best {
            return;
        }
        if i == a.len() {
            let rest = b.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|(q, _)| gap(q)).fold(cur, f64::max);
            *best = best.min(rest);
            return;
        }
        go(i + 1, a, b, used, cur.max(gap(&a[i])), best, cost, gap);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, cur.max(cost(&a[i], &b[j])), best, cost, gap);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut used, 0.0, &mut best, &cost, &gap);
    best
}

/// Random undirected simple graph on `n` nodes with edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> WeightedGraph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|_| rng.gen::<f64>() < p)
        .collect();
    WeightedGraph::unweighted(n, edges).unwrap()
}

/// Connected weighted graph: a ring plus random chords, weights in
/// `[0.5, 1.5)`.
pub fn random_connected_weighted(rng: &mut impl Rng, n: usize, chords: usize) -> WeightedGraph {
    let mut edges: BTreeMap<(usize, usize), f64> = (0..n).map(|i| ((i.min((i + 1) % n), i.max((i + 1) % n)), 0.0)).collect();
    while edges.len() < n + chords {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.entry((a.min(b), a.max(b))).or_insert(0.0);
        }
    }
    WeightedGraph::new(n, edges.into_keys().map(|(a, b)| (a, b, 0.5 + rng.gen::<f64>()))).unwrap()
}

pub fn adjacency(g: &WeightedGraph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut adj = vec![vec![false; n]; n];
    for &(a, b, _) in g.edges() {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    adj
}

/// All-pairs hop distances by Floyd–Warshall; `None` when unreachable.
pub fn hop_distances(g: &WeightedGraph) -> Vec<Vec<Option<usize>>> {
    let n = g.n();
    let adj = adjacency(g);
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Some(0) } else if adj[i][j] { Some(1) } else { None }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Shortest-path kernel as a count of pairs of ordered node pairs at equal
/// hop distance.
pub fn brute_sp_kernel(g: &WeightedGraph, h: &WeightedGraph) -> f64 {
    let (dg, dh) = (hop_distances(g), hop_distances(h));
    let flat = |d: &Vec<Vec<Option<usize>>>| d.iter().flatten().filter_map(|x| *x).collect::<Vec<_>>();
    let (fg, fh) = (flat(&dg), flat(&dh));
    fg.iter().map(|x| fh.iter().filter(|y| *y == x).count()).sum::<usize>() as f64
}

/// Canonical form of the subgraph induced on `nodes`: the smallest
/// adjacency bitmask over all relabelings.
fn canonical_form(adj: &[Vec<bool>], nodes: &[usize]) -> u32 {
    let k = nodes.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = u32::MAX;
    loop {
        let mut mask = 0u32;
        let mut bit = 0;
        for a in 0..k {
            for b in a + 1..k {
                if adj[nodes[perm[a]]][nodes[perm[b]]] {
                    mask |= 1 << bit;
                }
                bit += 1;
            }
        }
        best = best.min(mask);
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Graphlet kernel by isomorphism classes found through canonical forms.
pub fn brute_graphlet_kernel(g: &WeightedGraph, h: &WeightedGraph, k: usize) -> f64 {
    let counts = |g: &WeightedGraph| {
        let adj = adjacency(g);
        let mut c: BTreeMap<u32, u64> = BTreeMap::new();
        for s in subsets(g.n(), k) {
            *c.entry(canonical_form(&adj, &s)).or_default() += 1;
        }
        c
    };
    let (cg, ch) = (counts(g), counts(h));
    cg.iter().filter_map(|(f, x)| ch.get(f).map(|y| (*x * *y) as f64)).sum()
}

/// Number of non-isomorphic graphs on `k` nodes found by the canonical form.
pub fn graphlet_class_count(k: usize) -> usize {
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let nodes: Vec<usize> = (0..k).collect();
    let mut forms = std::collections::BTreeSet::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut adj = vec![vec![false; k]; k];
        for (bit, &(a, b)) in pairs.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
        forms.insert(canonical_form(&adj, &nodes));
    }
    forms.len()
}

/// Weisfeiler–Lehman subtree kernel with labels spelled out as nested
/// strings, so equal labels mean equal unfolding trees.
pub fn brute_wl_kernel(g: &WeightedGraph, h: &WeightedGraph, rounds: usize) -> f64 {
    let histograms = |g: &WeightedGraph| {
        let adj = adjacency(g);
        let n = g.n();
        let mut labels: Vec<String> = vec!["*".to_string(); n];
        let mut hist: BTreeMap<(usize, String), u64> = BTreeMap::new();
        for round in 0..=rounds {
            if round > 0 {
                labels = (0..n)
                    .map(|v| {
                        let mut nb: Vec<&str> = (0..n).filter(|&u| adj[v][u]).map(|u| labels[u].as_str()).collect();
                        nb.sort_unstable();
                        format!("{}({})", labels[v], nb.join(","))
                    })
                    .collect();
            }
            for l in &labels {
                *hist.entry((round, l.clone())).or_default() += 1;
            }
        }
        hist
    };
    let (a, b) = (histograms(g), histograms(h));
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| (*x * *y) as f64)).sum()
}

/// Kronecker product of the two weight matrices.
pub fn product_weights(g: &WeightedGraph, h: &WeightedGraph) -> DMatrix<f64> {
    let (a, b) = (g.weight_matrix(), h.weight_matrix());
    a.kronecker(&b)
}

/// `Σ_m λ_m 1ᵀ W×ᵐ 1` with explicit matrix powers of the product graph.
pub fn brute_kstep(g: &WeightedGraph, h: &WeightedGraph, lambdas: &[f64]) -> f64 {
    let w = product_weights(g, h);
    let mut p = DMatrix::<f64>::identity(w.nrows(), w.ncols());
    let mut total = 0.0;
    for l in lambdas {
        total += l * p.sum();
        p = &p * &w;
    }
    total
}

/// `1ᵀ (I − λW×)⁻¹ 1` by a dense solve.
pub fn brute_geometric(g: &WeightedGraph, h: &WeightedGraph, lambda: f64) -> f64 {
    let w = product_weights(g, h);
    let n = w.nrows();
    let a = DMatrix::<f64>::identity(n, n) - w * lambda;
    let ones = nalgebra::DVector::from_element(n, 1.0);
    a.lu().solve(&ones).unwrap().sum()
}

/// `1ᵀ exp(βW×) 1` by the Taylor series.
pub fn brute_exponential(g: &WeightedGraph, h: &WeightedGraph, beta: f64) -> f64 {
    let w = product_weights(g, h) * beta;
    let n = w.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut total = term.sum();
    for m in 1..200 {
        term = &term * &w / m as f64;
        let s = term.sum();
        total += s;
        if s.abs() < 1e-18 * total.abs() {
            break;
        }
    }
    total
}

/// Fisher ratio from explicit means and covariances in feature space.
pub fn explicit_kfdr(x: &DMatrix<f64>, s: usize, eta: f64) -> f64 {
    let (m, dim) = (x.nrows(), x.ncols());
    let stats = |rows: std::ops::Range<usize>| {
        let k = rows.len() as f64;
        let mu = rows.clone().map(|i| x.row(i).transpose()).fold(DVector::zeros(dim), |a, r| a + r) / k;
        let cov = rows
            .map(|i| {
                let c = x.row(i).transpose() - &mu;
                &c * c.transpose()
            })
            .fold(DMatrix::zeros(dim, dim), |a, c| a + c)
            / k;
        (mu, cov)
    };
    let (m1, m2) = (s - 1, m - s + 1);
    let (mu1, cov1) = stats(0..m1);
    let (mu2, cov2) = stats(m1..m);
    let (mf, w1, w2) = (m as f64, m1 as f64, m2 as f64);
    let sigma = cov1 * (w1 / mf) + cov2 * (w2 / mf) + DMatrix::identity(dim, dim) * eta;
    let d = mu2 - mu1;
    w1 * w2 / mf * d.dot(&sigma.lu().solve(&d).unwrap())
}
