//! Classical graph kernels on unlabeled graphs.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DVector;
use rayon::prelude::*;

use super::bfs;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::kernel::{pairwise_matrix, GramMatrix};
use crate::linalg::symmetric_eigen;

pub const WL_DEFAULT_ITERATIONS: usize = 5;

/// Graphs with at most this many nodes use size-4 graphlets, larger ones
/// size 3.
pub const GRAPHLET_SMALL_GRAPH: usize = 64;

/// Random walk kernels on the direct product graph.
#[derive(Debug, Clone, PartialEq)]
pub enum RandomWalk {
    /// Walks of length `0..lambdas.len()`, length `m` weighted by
    /// `lambdas[m]`.
    KStep { lambdas: Vec<f64> },
    /// Weights `λ^m` over all lengths.
    Geometric { lambda: f64 },
    /// Weights `β^m / m!` over all lengths.
    Exponential { beta: f64 },
}

impl RandomWalk {
    /// Two steps, unit weights.
    pub fn kstep_default() -> Self {
        RandomWalk::KStep { lambdas: vec![1.0; 3] }
    }

    pub fn geometric_default() -> Self {
        RandomWalk::Geometric { lambda: 0.05 }
    }

    pub fn exponential_default() -> Self {
        RandomWalk::Exponential { beta: 0.1 }
    }
}

/// Per-graph spectral data. The product weight matrix is the Kronecker
/// product `W ⊗ W'`, so the sum of entries of any power series in it splits
/// over pairs of eigenvalues: with `W = Σ μ_p u_p u_pᵀ` and `c_p = (1ᵀu_p)²`,
/// `1ᵀ f(W ⊗ W') 1 = Σ_{p,q} c_p c'_q f(μ_p μ'_q)`.
struct WalkSpectrum {
    mu: Vec<f64>,
    c: Vec<f64>,
    /// `1ᵀ Wᵐ 1` for small `m`, summed exactly by repeated products.
    power_sums: Vec<f64>,
    radius: f64,
}

impl WalkSpectrum {
    fn new(g: &WeightedGraph, max_power: usize) -> Result<Self> {
        let w = g.weight_matrix();
        let n = g.n();
        let mut power_sums = Vec::with_capacity(max_power + 1);
        let mut v = DVector::from_element(n, 1.0);
        for _ in 0..=max_power {
            power_sums.push(v.sum());
            v = &w * v;
        }
        if n == 0 {
            return Ok(Self { mu: vec![], c: vec![], power_sums, radius: 0.0 });
        }
        let (mu, vectors) = symmetric_eigen(&w)?;
        let c = vectors.column_iter().map(|u| u.sum().powi(2)).collect();
        let radius = mu.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        Ok(Self { mu, c, power_sums, radius })
    }
}

fn walk_value(a: &WalkSpectrum, b: &WalkSpectrum, kind: &RandomWalk) -> Result<f64> {
    let pairwise = |f: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = 0.0;
        for (p, &mp) in a.mu.iter().enumerate() {
            for (q, &mq) in b.mu.iter().enumerate() {
                s += a.c[p] * b.c[q] * f(mp * mq);
            }
        }
        s
    };
    match kind {
        RandomWalk::KStep { lambdas } => Ok(lambdas
            .iter()
            .enumerate()
            .map(|(m, l)| l * a.power_sums[m] * b.power_sums[m])
            .sum()),
        RandomWalk::Geometric { lambda } => {
            let rho = lambda * a.radius * b.radius;
            if rho >= 1.0 {
                return Err(Error::param(
                    "lambda",
                    format!("geometric series diverges: λ·ρ(W×) = {rho}"),
                ));
            }
            Ok(pairwise(&|x| 1.0 / (1.0 - lambda * x)))
        }
        RandomWalk::Exponential { beta } => Ok(pairwise(&|x| (beta * x).exp())),
    }
}

fn walk_spectra(graphs: &[WeightedGraph], kind: &RandomWalk) -> Result<Vec<WalkSpectrum>> {
    let k = match kind {
        RandomWalk::KStep { lambdas } => lambdas.len().saturating_sub(1),
        _ => 0,
    };
    graphs.par_iter().map(|g| WalkSpectrum::new(g, k)).collect()
}

pub fn random_walk_kernel(g: &WeightedGraph, h: &WeightedGraph, kind: &RandomWalk) -> Result<f64> {
    let s = walk_spectra(&[g.clone(), h.clone()], kind)?;
    walk_value(&s[0], &s[1], kind)
}

pub fn random_walk_gram(graphs: &[WeightedGraph], kind: &RandomWalk) -> Result<GramMatrix> {
    let s = walk_spectra(graphs, kind)?;
    if let RandomWalk::Geometric { .. } = kind {
        // Surface divergence before the parallel sweep.
        let top = s.iter().map(|x| x.radius).fold(0.0, f64::max);
        let idx = s.iter().position(|x| x.radius == top).unwrap_or(0);
        if !s.is_empty() {
            walk_value(&s[idx], &s[idx], kind)?;
        }
    }
    let k = pairwise_matrix(s.len(), |i, j| walk_value(&s[i], &s[j], kind).unwrap_or(f64::NAN));
    GramMatrix::from_matrix(k, false)
}

/// Number of ordered node pairs `(i, j)` at each hop distance, `i = j`
/// included at distance 0. Unreachable pairs are left out.
pub fn shortest_path_histogram(g: &WeightedGraph) -> Vec<u64> {
    let mut hist: Vec<u64> = Vec::new();
    for s in 0..g.n() {
        for d in bfs(g, s) {
            if d != u32::MAX {
                let d = d as usize;
                if hist.len() <= d {
                    hist.resize(d + 1, 0);
                }
                hist[d] += 1;
            }
        }
    }
    hist
}

fn dot(a: &[u64], b: &[u64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64) * (*y as f64)).sum()
}

pub fn shortest_path_kernel(g: &WeightedGraph, h: &WeightedGraph) -> f64 {
    dot(&shortest_path_histogram(g), &shortest_path_histogram(h))
}

pub fn shortest_path_gram(graphs: &[WeightedGraph]) -> Result<GramMatrix> {
    let hist: Vec<Vec<u64>> = graphs.par_iter().map(shortest_path_histogram).collect();
    GramMatrix::from_matrix(pairwise_matrix(hist.len(), |i, j| dot(&hist[i], &hist[j])), false)
}

/// Class of an induced subgraph on 3 or 4 nodes. Size 3 classes are the
/// edge counts 0..=3. Size 4 classes are distinguished by edge count and
/// degree sequence, in the order: empty, one edge, two disjoint edges, path
/// of length 2, triangle, star, path of length 3, 4-cycle, paw, diamond,
/// complete.
fn graphlet_class(g: &WeightedGraph, nodes: &[usize]) -> usize {
    let k = nodes.len();
    let mut deg = [0u8; 4];
    let mut edges = 0;
    for a in 0..k {
        for b in a + 1..k {
            if g.has_edge(nodes[a], nodes[b]) {
                edges += 1;
                deg[a] += 1;
                deg[b] += 1;
            }
        }
    }
    if k == 3 {
        return edges;
    }
    let max = *deg.iter().max().unwrap();
    match (edges, max) {
        (0, _) => 0,
        (1, _) => 1,
        (2, 1) => 2,
        (2, _) => 3,
        (3, 3) => 5,
        (3, 2) if deg.contains(&0) => 4,
        (3, _) => 6,
        (4, 2) => 7,
        (4, _) => 8,
        (5, _) => 9,
        _ => 10,
    }
}

/// Counts of induced subgraphs of size `k ∈ {3, 4}` per isomorphism class.
pub fn graphlet_counts(g: &WeightedGraph, k: usize) -> Result<Vec<u64>> {
    let n = g.n();
    if !(k == 3 || k == 4) {
        return Err(Error::param("k", format!("graphlet size must be 3 or 4, got {k}")));
    }
    if n < k {
        return Err(Error::param("k", format!("graph has {n} nodes, fewer than {k}")));
    }
    let mut counts = vec![0u64; if k == 3 { 4 } else { 11 }];
    let mut nodes = [0usize; 4];
    for a in 0..n {
        nodes[0] = a;
        for b in a + 1..n {
            nodes[1] = b;
            for c in b + 1..n {
                nodes[2] = c;
                if k == 3 {
                    counts[graphlet_class(g, &nodes[..3])] += 1;
                    continue;
                }
                for d in c + 1..n {
                    nodes[3] = d;
                    counts[graphlet_class(g, &nodes)] += 1;
                }
            }
        }
    }
    Ok(counts)
}

pub fn graphlet_kernel(g: &WeightedGraph, h: &WeightedGraph, k: usize) -> Result<f64> {
    Ok(dot(&graphlet_counts(g, k)?, &graphlet_counts(h, k)?))
}

/// Graphlet Gram matrix; `k = None` picks 4 when every graph has at most
/// [`GRAPHLET_SMALL_GRAPH`] nodes and 3 otherwise.
pub fn graphlet_gram(graphs: &[WeightedGraph], k: Option<usize>) -> Result<GramMatrix> {
    let k = k.unwrap_or(if graphs.iter().all(|g| g.n() <= GRAPHLET_SMALL_GRAPH) { 4 } else { 3 });
    let counts: Vec<Vec<u64>> = graphs.par_iter().map(|g| graphlet_counts(g, k)).collect::<Result<_>>()?;
    GramMatrix::from_matrix(pairwise_matrix(counts.len(), |i, j| dot(&counts[i], &counts[j])), false)
}

/// Weisfeiler–Lehman subtree features of a collection with a shared label
/// dictionary: for rounds `0..=h`, a histogram keyed by `(round, label)`.
pub fn wl_features(graphs: &[WeightedGraph], h: usize) -> Vec<BTreeMap<(usize, usize), u64>> {
    let mut labels: Vec<Vec<usize>> = graphs.iter().map(|g| vec![0; g.n()]).collect();
    let mut feats: Vec<BTreeMap<(usize, usize), u64>> = vec![BTreeMap::new(); graphs.len()];
    for round in 0..=h {
        if round > 0 {
            let mut dict: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            labels = graphs
                .iter()
                .zip(&labels)
                .map(|(g, lab)| {
                    (0..g.n())
                        .map(|v| {
                            let mut nb: Vec<usize> = g.neighbors(v).iter().map(|&(u, _)| lab[u]).collect();
                            nb.sort_unstable();
                            let next = dict.len();
                            *dict.entry((lab[v], nb)).or_insert(next)
                        })
                        .collect()
                })
                .collect();
        }
        for (f, lab) in feats.iter_mut().zip(&labels) {
            for &l in lab {
                *f.entry((round, l)).or_default() += 1;
            }
        }
    }
    feats
}

fn sparse_dot(a: &BTreeMap<(usize, usize), u64>, b: &BTreeMap<(usize, usize), u64>) -> f64 {
    a.iter()
        .filter_map(|(k, x)| b.get(k).map(|y| (*x as f64) * (*y as f64)))
        .sum()
}

pub fn wl_kernel(g: &WeightedGraph, h: &WeightedGraph, iterations: usize) -> f64 {
    let f = wl_features(&[g.clone(), h.clone()], iterations);
    sparse_dot(&f[0], &f[1])
}

pub fn wl_gram(graphs: &[WeightedGraph], iterations: usize) -> Result<GramMatrix> {
    let f = wl_features(graphs, iterations);
    GramMatrix::from_matrix(pairwise_matrix(f.len(), |i, j| sparse_dot(&f[i], &f[j])), false)
}
