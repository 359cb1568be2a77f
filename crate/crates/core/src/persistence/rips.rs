//! Vietoris–Rips persistence in dimensions 0 and 1 over the two-element field.
//!
//! Dimension 0 is Kruskal's algorithm with a union-find forest. Dimension 1 is
//! computed in cohomology: the coboundary matrix of the edges is reduced
//! column by column in reverse filtration order, with
//!
//! * clearing: edges that kill a component in dimension 0 are skipped, since
//!   their cohomology columns reduce to zero;
//! * emergent pairs: when an edge has a coface of the same diameter that is
//!   not yet a pivot, that coface is the pivot and the coboundary is never
//!   materialized;
//! * implicit matrices: coboundaries are enumerated on demand from the
//!   distance matrix, and only the reduction coefficients (lists of edges)
//!   are stored.
//!
//! Simplices are ordered by diameter, ties broken by descending combinatorial
//! index. The resulting diagrams do not depend on the tie-break.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::union_find::UnionFind;

#[derive(Debug, Default, Clone, PartialEq)]
pub(crate) struct RipsPairs {
    pub h0: Vec<(f64, f64)>,
    pub h1: Vec<(f64, f64)>,
}

/// A simplex in the filtration: diameter plus combinatorial index. The
/// `Ord` impl makes the earliest simplex the greatest, so a max-heap pops
/// the pivot first.
#[derive(Debug, Clone, Copy)]
struct Cell {
    diam: f64,
    idx: u64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.idx == other.idx
    }
}

impl Eq for Cell {}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .diam
            .total_cmp(&self.diam)
            .then_with(|| self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Complex<'a> {
    n: usize,
    dist: &'a [f64],
}

#[inline]
fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

#[inline]
fn choose3(x: u64) -> u64 {
    if x < 3 {
        0
    } else {
        x * (x - 1) * (x - 2) / 6
    }
}

#[inline]
fn triangle_index(a: usize, b: usize, c: usize) -> u64 {
    let (mut x, mut y, mut z) = (a as u64, b as u64, c as u64);
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    if y < z {
        std::mem::swap(&mut y, &mut z);
    }
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    choose3(x) + choose2(y) + z
}

impl Complex<'_> {
    #[inline]
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Cofaces of edge `(i, j)` in descending index order.
    fn cofaces(&self, i: usize, j: usize) -> impl Iterator<Item = Cell> + '_ {
        let dij = self.d(i, j);
        (0..self.n).rev().filter_map(move |k| {
            if k == i || k == j {
                return None;
            }
            let dik = self.d(i, k);
            let djk = self.d(j, k);
            if !(dik.is_finite() && djk.is_finite()) {
                return None;
            }
            Some(Cell {
                diam: dij.max(dik).max(djk),
                idx: triangle_index(i, j, k),
            })
        })
    }
}

/// Pops the pivot of a working column stored as a heap with repeated
/// entries; pairs of equal entries cancel.
fn pop_pivot(heap: &mut BinaryHeap<Cell>) -> Option<Cell> {
    while let Some(top) = heap.pop() {
        if heap.peek().is_some_and(|next| next.idx == top.idx) {
            heap.pop();
            continue;
        }
        return Some(top);
    }
    None
}

/// Persistence pairs of the Rips filtration of a row-major `n x n` distance
/// matrix. `+inf` entries are never added. Zero-persistence pairs are kept
/// in dimension 0 (so that there are exactly `n` pairs) and dropped in
/// dimension 1.
pub(crate) fn compute(n: usize, dist: &[f64], max_dim: usize) -> RipsPairs {
    debug_assert_eq!(dist.len(), n * n);
    let complex = Complex { n, dist };

    let mut edges: Vec<(f64, u64, u32, u32)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in 0..i {
            let d = complex.d(i, j);
            if d.is_finite() {
                edges.push((d, choose2(i as u64) + j as u64, i as u32, j as u32));
            }
        }
    }
    // Filtration order: diameter ascending, index descending.
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)));

    let mut pairs = RipsPairs::default();
    let mut uf = UnionFind::new(n);
    let mut is_death_edge = vec![false; edges.len()];
    for (k, &(d, _, i, j)) in edges.iter().enumerate() {
        if uf.union(i as usize, j as usize) {
            pairs.h0.push((0.0, d));
            is_death_edge[k] = true;
        }
    }
    let essential = n - pairs.h0.len();
    pairs.h0.extend(std::iter::repeat((0.0, f64::INFINITY)).take(essential));

    if max_dim < 1 {
        return pairs;
    }

    let mut pivots: HashMap<u64, usize> = HashMap::new();
    let mut reductions: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut heap: BinaryHeap<Cell> = BinaryHeap::new();

    for (k, &(d, _, i, j)) in edges.iter().enumerate().rev() {
        if is_death_edge[k] {
            continue;
        }
        let (i, j) = (i as usize, j as usize);

        // Emergent pair: the first coface of equal diameter, in descending
        // index order, is the earliest coface of all.
        let mut emergent = None;
        for c in complex.cofaces(i, j) {
            if c.diam == d {
                if !pivots.contains_key(&c.idx) {
                    emergent = Some(c);
                }
                break;
            }
        }
        if let Some(c) = emergent {
            pivots.insert(c.idx, reductions.len());
            reductions.push(vec![(i as u32, j as u32)]);
            continue;
        }

        heap.clear();
        heap.extend(complex.cofaces(i, j));
        let mut column = vec![(i as u32, j as u32)];
        loop {
            match pop_pivot(&mut heap) {
                None => {
                    pairs.h1.push((d, f64::INFINITY));
                    break;
                }
                Some(p) => {
                    if let Some(&other) = pivots.get(&p.idx) {
                        heap.push(p);
                        for &(a, b) in &reductions[other] {
                            heap.extend(complex.cofaces(a as usize, b as usize));
                            column.push((a, b));
                        }
                    } else {
                        column.sort_unstable();
                        let mut reduced = Vec::with_capacity(column.len());
                        let mut t = 0;
                        while t < column.len() {
                            let mut u = t;
                            while u < column.len() && column[u] == column[t] {
                                u += 1;
                            }
                            if (u - t) % 2 == 1 {
                                reduced.push(column[t]);
                            }
                            t = u;
                        }
                        pivots.insert(p.idx, reductions.len());
                        reductions.push(reduced);
                        if p.diam > d {
                            pairs.h1.push((d, p.diam));
                        }
                        break;
                    }
                }
            }
        }
    }
    pairs
}
