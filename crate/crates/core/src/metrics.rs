//! Bottleneck distances between persistence diagrams and the stability
//! check relating them to Laplacian perturbations.
//!
//! Both distances are exact: the optimal cost is one of finitely many
//! candidate values (point-to-point distances and diagonal gaps), so a binary
//! search over the sorted candidates with a perfect-matching feasibility
//! test finds it without any epsilon.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::persistence::{scale_variant_diagram, Diagram2D, Diagram3D, DiagramPoint};

/// An optimal bottleneck matching between diagrams `a` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(index in a, index in b)` for matched off-diagonal points.
    pub pairs: Vec<(usize, usize)>,
    /// Points of `a` sent to their diagonal projection.
    pub diagonal_a: Vec<usize>,
    /// Points of `b` sent to their diagonal projection.
    pub diagonal_b: Vec<usize>,
    pub cost: f64,
}

/// Sup-norm distance between two finite points of the birth-death plane.
#[inline]
pub fn linf(b1: f64, d1: f64, b2: f64, d2: f64) -> f64 {
    (b1 - b2).abs().max((d1 - d2).abs())
}

/// Distance from `(b, d)` to its projection on the diagonal.
#[inline]
pub fn diagonal_gap(b: f64, d: f64) -> f64 {
    (d - b).abs() / 2.0
}

/// Relative sup-norm distance between triples with timescale weight `xi`.
#[inline]
pub fn linf_xi(p: &DiagramPoint, q: &DiagramPoint, xi: f64) -> f64 {
    linf(p.birth, p.death, q.birth, q.death).max(xi * (p.tau - q.tau).abs())
}

/// Exact bottleneck matching given pairwise and diagonal costs.
///
/// `cost[i * nb + j]` is the cost of matching `a_i` with `b_j`.
pub fn bottleneck_matching(cost: &[f64], diag_a: &[f64], diag_b: &[f64]) -> Matching {
    let (na, nb) = (diag_a.len(), diag_b.len());
    debug_assert_eq!(cost.len(), na * nb);
    let mut candidates: Vec<f64> = Vec::with_capacity(cost.len() + na + nb + 1);
    candidates.push(0.0);
    candidates.extend_from_slice(cost);
    candidates.extend_from_slice(diag_a);
    candidates.extend_from_slice(diag_b);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // All-to-diagonal is feasible at the largest candidate.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut best = feasible(cost, diag_a, diag_b, candidates[hi]).expect("trivial matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(cost, diag_a, diag_b, candidates[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    if best.cost != candidates[lo] {
        best = feasible(cost, diag_a, diag_b, candidates[lo]).expect("feasible at bound");
    }
    best
}

/// Perfect matching on the diagonal-augmented bipartite graph using only
/// edges of cost at most `c`.
///
/// Left vertices are `a_0..a_na` then the projections of `b`; right vertices
/// are `b_0..b_nb` then the projections of `a`. Projection-to-projection
/// edges cost nothing.
fn feasible(cost: &[f64], diag_a: &[f64], diag_b: &[f64], c: f64) -> Option<Matching> {
    let (na, nb) = (diag_a.len(), diag_b.len());
    let n = na + nb;
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..na {
        for j in 0..nb {
            if cost[i * nb + j] <= c {
                adj[i].push(j as u32);
            }
        }
        if diag_a[i] <= c {
            adj[i].push((nb + i) as u32);
        }
    }
    for j in 0..nb {
        let row = &mut adj[na + j];
        if diag_b[j] <= c {
            row.push(j as u32);
        }
        row.extend((0..na).map(|k| (nb + k) as u32));
    }
    let mate = hopcroft_karp(n, n, &adj);
    if mate.iter().any(Option::is_none) {
        return None;
    }
    let mut m = Matching {
        pairs: Vec::new(),
        diagonal_a: Vec::new(),
        diagonal_b: Vec::new(),
        cost: 0.0,
    };
    for (l, r) in mate.iter().map(|r| r.unwrap()).enumerate() {
        match (l < na, r < nb) {
            (true, true) => {
                m.cost = m.cost.max(cost[l * nb + r]);
                m.pairs.push((l, r));
            }
            (true, false) => {
                m.cost = m.cost.max(diag_a[l]);
                m.diagonal_a.push(l);
            }
            (false, true) => {
                m.cost = m.cost.max(diag_b[r]);
                m.diagonal_b.push(r);
            }
            (false, false) => {}
        }
    }
    Some(m)
}

/// Maximum bipartite matching; returns the right mate of each left vertex.
fn hopcroft_karp(nl: usize, nr: usize, adj: &[Vec<u32>]) -> Vec<Option<usize>> {
    const FREE: u32 = u32::MAX;
    let mut mate_l = vec![FREE; nl];
    let mut mate_r = vec![FREE; nr];
    let mut dist = vec![u32::MAX; nl];
    let mut queue = Vec::with_capacity(nl);

    loop {
        // Layered BFS from free left vertices.
        queue.clear();
        for l in 0..nl {
            if mate_l[l] == FREE {
                dist[l] = 0;
                queue.push(l);
            } else {
                dist[l] = u32::MAX;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let l = queue[head];
            head += 1;
            for &r in &adj[l] {
                let next = mate_r[r as usize];
                if next == FREE {
                    found = true;
                } else if dist[next as usize] == u32::MAX {
                    dist[next as usize] = dist[l] + 1;
                    queue.push(next as usize);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; nl];
        for l in 0..nl {
            if mate_l[l] == FREE {
                augment(l, adj, &mut mate_l, &mut mate_r, &mut dist, &mut it);
            }
        }
    }
    mate_l
        .into_iter()
        .map(|r| (r != FREE).then_some(r as usize))
        .collect()
}

/// Iterative DFS along the BFS layers; `it[u]` is the edge of `u` under
/// exploration.
fn augment(
    root: usize,
    adj: &[Vec<u32>],
    mate_l: &mut [u32],
    mate_r: &mut [u32],
    dist: &mut [u32],
    it: &mut [usize],
) -> bool {
    let mut stack = vec![root];
    while let Some(&l) = stack.last() {
        if it[l] == adj[l].len() {
            dist[l] = u32::MAX;
            stack.pop();
            if let Some(&parent) = stack.last() {
                it[parent] += 1;
            }
            continue;
        }
        let r = adj[l][it[l]] as usize;
        let next = mate_r[r];
        if next == u32::MAX {
            for &u in &stack {
                let r = adj[u][it[u]];
                mate_l[u] = r;
                mate_r[r as usize] = u as u32;
            }
            return true;
        }
        if dist[next as usize] == dist[l] + 1 {
            stack.push(next as usize);
        } else {
            it[l] += 1;
        }
    }
    false
}

/// Bottleneck distance between essential classes: births are matched in
/// sorted order. Returns `None` when the counts differ.
fn essential_cost(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Some(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Bottleneck distance between two-dimensional diagrams.
///
/// Essential pairs must pair up with essential pairs; if their counts
/// differ the distance is `f64::INFINITY`.
pub fn bottleneck_2d(x: &Diagram2D, y: &Diagram2D) -> f64 {
    let (ex, fx): (Vec<_>, Vec<_>) = x.pairs.iter().partition(|p| p.is_essential());
    let (ey, fy): (Vec<_>, Vec<_>) = y.pairs.iter().partition(|p| p.is_essential());
    let births = |v: &[&crate::persistence::PersistencePair]| v.iter().map(|p| p.birth).collect::<Vec<_>>();
    let Some(ess) = essential_cost(&births(&ex), &births(&ey)) else {
        return f64::INFINITY;
    };
    let cost: Vec<f64> = fx
        .iter()
        .flat_map(|p| fy.iter().map(move |q| linf(p.birth, p.death, q.birth, q.death)))
        .collect();
    let da: Vec<f64> = fx.iter().map(|p| diagonal_gap(p.birth, p.death)).collect();
    let db: Vec<f64> = fy.iter().map(|p| diagonal_gap(p.birth, p.death)).collect();
    bottleneck_matching(&cost, &da, &db).cost.max(ess)
}

/// Bottleneck distance between three-dimensional diagrams under the
/// relative sup-norm with timescale weight `xi`. Diagonal projections stay in
/// the point's own timescale plane. Essential points are excluded.
pub fn bottleneck_3d(e: &Diagram3D, f: &Diagram3D, xi: f64) -> Result<f64> {
    Ok(bottleneck_3d_matching(e, f, xi)?.cost)
}

/// Optimal matching behind [`bottleneck_3d`]. Indices refer to the
/// non-essential points of each diagram, in order.
pub fn bottleneck_3d_matching(e: &Diagram3D, f: &Diagram3D, xi: f64) -> Result<Matching> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::param("xi", format!("must be positive, got {xi}")));
    }
    let pe: Vec<&DiagramPoint> = e.points.iter().filter(|p| !p.essential).collect();
    let pf: Vec<&DiagramPoint> = f.points.iter().filter(|p| !p.essential).collect();
    if let Some(p) = pe.iter().chain(&pf).find(|p| !(p.birth.is_finite() && p.death.is_finite())) {
        return Err(Error::param(
            "diagram",
            format!("non-essential point ({}, {}) is not finite", p.birth, p.death),
        ));
    }
    let cost: Vec<f64> = pe
        .iter()
        .flat_map(|p| pf.iter().map(move |q| linf_xi(p, q, xi)))
        .collect();
    let da: Vec<f64> = pe.iter().map(|p| diagonal_gap(p.birth, p.death)).collect();
    let db: Vec<f64> = pf.iter().map(|p| diagonal_gap(p.birth, p.death)).collect();
    Ok(bottleneck_matching(&cost, &da, &db))
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    // Fixed irregular start so that no singular direction is missed by
    // symmetry.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = &ata * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(f64::MIN_POSITIVE) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // The Rayleigh quotient converges from below; one more product settles
    // the last digits.
    let w = &ata * &v;
    lambda.max(v.dot(&w)).max(0.0).sqrt()
}

/// Both sides of the stability inequality for graphs `g` and `h`:
/// the bottleneck distance between their three-dimensional diagrams of
/// dimension `dim` and `2·τ_K·‖L_g − L_h‖₂` with `τ_K` the largest timescale.
pub fn stability_gap(
    g: &WeightedGraph,
    h: &WeightedGraph,
    tau_grid: &[f64],
    dim: usize,
    xi: f64,
) -> Result<(f64, f64)> {
    if g.n() != h.n() {
        return Err(Error::Shape(format!(
            "graphs have {} and {} nodes",
            g.n(),
            h.n()
        )));
    }
    let (lg, lh) = (g.laplacian(), h.laplacian());
    let dg = scale_variant_diagram(&lg, tau_grid, dim)?;
    let dh = scale_variant_diagram(&lh, tau_grid, dim)?;
    let lhs = bottleneck_3d(&dg, &dh, xi)?;
    let tau_k = tau_grid.iter().copied().fold(0.0, f64::max);
    let rhs = 2.0 * tau_k * spectral_norm(&(lg.matrix() - lh.matrix()));
    Ok((lhs, rhs))
}
