//! The eighteen common network measures.
//!
//! Distance-based measures (diameter, radius, eccentricity, average shortest
//! path) are taken over the largest connected component. Degree
//! assortativity is 0 when undefined (all edges join nodes of equal degree).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{bfs, louvain};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::kernel::{pairwise_matrix, GramMatrix};

pub const MEASURE_NAMES: [&str; 18] = [
    "density",
    "transitivity",
    "diameter",
    "radius",
    "degree_assortativity",
    "global_efficiency",
    "connected_parts",
    "avg_clustering",
    "avg_triangles",
    "avg_local_efficiency",
    "avg_edge_betweenness",
    "avg_node_betweenness",
    "avg_closeness",
    "avg_eccentricity",
    "avg_shortest_path",
    "avg_degree_centrality",
    "max_modularity",
    "avg_global_mfpt",
];

/// The measures in [`MEASURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureVector(pub [f64; 18]);

impl MeasureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        MEASURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn triangles(g: &WeightedGraph) -> Vec<f64> {
    (0..g.n())
        .map(|v| {
            let nb = g.neighbors(v);
            let mut t = 0usize;
            for (a, &(x, _)) in nb.iter().enumerate() {
                for &(y, _) in &nb[a + 1..] {
                    if g.has_edge(x, y) {
                        t += 1;
                    }
                }
            }
            t as f64
        })
        .collect()
}

fn degree_assortativity(g: &WeightedGraph) -> f64 {
    let (mut sx, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0);
    for &(a, b, _) in g.edges() {
        let (da, db) = (g.degree(a) as f64, g.degree(b) as f64);
        // Both orientations.
        sx += da + db;
        sxx += da * da + db * db;
        sxy += 2.0 * da * db;
        n += 2.0;
    }
    if n == 0.0 {
        return 0.0;
    }
    let mu = sx / n;
    let var = sxx / n - mu * mu;
    if var <= 1e-12 * mu.max(1.0).powi(2) {
        return 0.0;
    }
    (sxy / n - mu * mu) / var
}

/// Efficiency of the subgraph induced by `nodes`.
fn induced_efficiency(g: &WeightedGraph, nodes: &[usize]) -> f64 {
    let k = nodes.len();
    if k < 2 {
        return 0.0;
    }
    let pos = |v: usize| nodes.binary_search(&v).ok();
    let mut total = 0.0;
    for s in 0..k {
        let mut dist = vec![u32::MAX; k];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.neighbors(nodes[u]) {
                if let Some(p) = pos(v) {
                    if dist[p] == u32::MAX {
                        dist[p] = dist[u] + 1;
                        queue.push_back(p);
                    }
                }
            }
        }
        total += dist.iter().filter(|&&d| d != 0 && d != u32::MAX).map(|&d| 1.0 / d as f64).sum::<f64>();
    }
    total / (k * (k - 1)) as f64
}

/// Brandes accumulation over all sources: node and edge dependencies summed
/// over ordered source-target pairs.
fn betweenness(g: &WeightedGraph) -> (Vec<f64>, Vec<f64>) {
    let n = g.n();
    let edge_index = |a: usize, b: usize| -> usize {
        let key = (a.min(b), a.max(b));
        g.edges()
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .expect("edge present")
    };
    let mut node_bc = vec![0.0; n];
    let mut edge_bc = vec![0.0; g.edge_count()];
    for s in 0..n {
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![u32::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::from([s]);
        sigma[s] = 1.0;
        dist[s] = 0;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in g.neighbors(u) {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                }
            }
        }
        let mut delta = vec![0.0; n];
        for &w in order.iter().rev() {
            for &(v, _) in g.neighbors(w) {
                if dist[v] != u32::MAX && dist[v] + 1 == dist[w] {
                    let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                    edge_bc[edge_index(v, w)] += c;
                    delta[v] += c;
                }
            }
            if w != s {
                node_bc[w] += delta[w];
            }
        }
    }
    (node_bc, edge_bc)
}

/// Mean first-passage times averaged over ordered pairs of distinct nodes in
/// the same component, through the fundamental matrix of each component.
fn average_global_mfpt(g: &WeightedGraph) -> f64 {
    let (count, labels) = g.components();
    let mut acc = (0.0, 0usize);
    for c in 0..count {
        let nodes: Vec<usize> = (0..g.n()).filter(|&i| labels[i] == c).collect();
        let k = nodes.len();
        if k < 2 {
            continue;
        }
        let vol: f64 = nodes.iter().map(|&i| g.strength(i)).sum();
        let pi: Vec<f64> = nodes.iter().map(|&i| g.strength(i) / vol).collect();
        let mut a = DMatrix::from_fn(k, k, |r, s| if r == s { 1.0 } else { 0.0 } + pi[s]);
        for (r, &i) in nodes.iter().enumerate() {
            for &(j, w) in g.neighbors(i) {
                let s = nodes.binary_search(&j).expect("same component");
                a[(r, s)] -= w / g.strength(i);
            }
        }
        let Some(z) = a.try_inverse() else { continue };
        for j in 0..k {
            for i in 0..k {
                if i != j {
                    acc.0 += (z[(j, j)] - z[(i, j)]) / pi[j];
                    acc.1 += 1;
                }
            }
        }
    }
    if acc.1 == 0 {
        0.0
    } else {
        acc.0 / acc.1 as f64
    }
}

/// Computes the eighteen measures. Louvain restarts are seeded with `seed`.
pub fn common_measures(g: &WeightedGraph, seed: u64) -> Result<MeasureVector> {
    let n = g.n();
    if n < 2 {
        return Err(Error::param("graph", format!("need at least 2 nodes, got {n}")));
    }
    let nf = n as f64;
    let deg: Vec<f64> = (0..n).map(|i| g.degree(i) as f64).collect();
    let tri = triangles(g);
    let dist: Vec<Vec<u32>> = (0..n).map(|s| bfs(g, s)).collect();

    let density = 2.0 * g.edge_count() as f64 / (nf * (nf - 1.0));
    let triads: f64 = deg.iter().map(|d| d * (d - 1.0) / 2.0).sum();
    let transitivity = if triads > 0.0 { tri.iter().sum::<f64>() / triads } else { 0.0 };

    let (count, labels) = g.components();
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    let largest = (0..count).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let lcc: Vec<usize> = (0..n).filter(|&i| labels[i] == largest).collect();
    let ecc: Vec<f64> = lcc
        .iter()
        .map(|&i| lcc.iter().map(|&j| dist[i][j]).max().unwrap_or(0) as f64)
        .collect();
    let diameter = ecc.iter().copied().fold(0.0, f64::max);
    let radius = ecc.iter().copied().fold(f64::INFINITY, f64::min);
    let dist = &dist;
    let lcc = &lcc;
    let avg_path = if lcc.len() > 1 {
        mean(lcc.iter().flat_map(|&i| lcc.iter().filter(move |&&j| j != i).map(move |&j| dist[i][j] as f64)))
    } else {
        0.0
    };

    let efficiency = mean((0..n).flat_map(|i| {
        let row = &dist[i];
        (0..n)
            .filter(move |&j| j != i)
            .map(move |j| if row[j] == u32::MAX { 0.0 } else { 1.0 / row[j] as f64 })
    }));
    let clustering = mean((0..n).map(|v| {
        let d = deg[v];
        if d < 2.0 {
            0.0
        } else {
            2.0 * tri[v] / (d * (d - 1.0))
        }
    }));
    let local_eff = mean((0..n).map(|v| {
        let mut nb: Vec<usize> = g.neighbors(v).iter().map(|x| x.0).collect();
        nb.sort_unstable();
        induced_efficiency(g, &nb)
    }));
    let (node_bc, edge_bc) = betweenness(g);
    let avg_edge_bc = mean(edge_bc.iter().map(|b| b / (nf * (nf - 1.0))));
    let avg_node_bc = if n > 2 {
        mean(node_bc.iter().map(|b| b / ((nf - 1.0) * (nf - 2.0))))
    } else {
        0.0
    };
    let closeness = mean((0..n).map(|i| {
        let reach: Vec<u32> = dist[i].iter().copied().filter(|&d| d != u32::MAX).collect();
        let total: u32 = reach.iter().sum();
        if total == 0 {
            0.0
        } else {
            let r = (reach.len() - 1) as f64;
            (r / total as f64) * (r / (nf - 1.0))
        }
    }));
    let (_, q) = louvain(g, seed);

    Ok(MeasureVector([
        density,
        transitivity,
        diameter,
        radius,
        degree_assortativity(g),
        efficiency,
        count as f64,
        clustering,
        mean(tri.iter().copied()),
        local_eff,
        avg_edge_bc,
        avg_node_bc,
        closeness,
        mean(ecc.iter().copied()),
        avg_path,
        mean(deg.iter().map(|d| d / (nf - 1.0))),
        q,
        average_global_mfpt(g),
    ]))
}

/// Column-wise `(x - min) / (max - min)`; constant columns become 0.
pub fn minmax_normalize(rows: &[MeasureVector]) -> Vec<MeasureVector> {
    let mut out = rows.to_vec();
    for c in 0..18 {
        let lo = rows.iter().map(|r| r.0[c]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.0[c]).fold(f64::NEG_INFINITY, f64::max);
        for r in &mut out {
            r.0[c] = if hi > lo { (r.0[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    out
}

/// Gaussian kernel on min-max normalized measure vectors with
/// `γ = 1 / (18 · variance of all entries)`, or `γ = 1` when every entry is
/// equal.
pub fn measure_gram(graphs: &[WeightedGraph], seed: u64) -> Result<GramMatrix> {
    let rows: Vec<MeasureVector> = graphs
        .par_iter()
        .map(|g| common_measures(g, seed))
        .collect::<Result<_>>()?;
    let norm = minmax_normalize(&rows);
    let all: Vec<f64> = norm.iter().flat_map(|r| r.0).collect();
    let mu = all.iter().sum::<f64>() / all.len().max(1) as f64;
    let var = all.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / all.len().max(1) as f64;
    let gamma = if var > 0.0 { 1.0 / (18.0 * var) } else { 1.0 };
    let vecs: Vec<DVector<f64>> = norm.iter().map(|r| DVector::from_row_slice(&r.0)).collect();
    let k = pairwise_matrix(vecs.len(), |i, j| (-gamma * (&vecs[i] - &vecs[j]).norm_squared()).exp());
    GramMatrix::from_matrix(k, true)
}
