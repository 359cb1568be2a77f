//! Louvain heuristic for modularity maximization.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::generators::realization_seed;
use crate::graph::WeightedGraph;

/// Independent restarts; the best partition is kept.
pub const LOUVAIN_RESTARTS: usize = 10;

/// Modularity of a partition given by community labels.
pub fn modularity(g: &WeightedGraph, community: &[usize]) -> f64 {
    let m2: f64 = g.strengths().iter().sum();
    if m2 == 0.0 {
        return 0.0;
    }
    let mut inside: HashMap<usize, f64> = HashMap::new();
    let mut total: HashMap<usize, f64> = HashMap::new();
    for &(a, b, w) in g.edges() {
        if community[a] == community[b] {
            *inside.entry(community[a]).or_default() += 2.0 * w;
        }
    }
    for (i, &s) in g.strengths().iter().enumerate() {
        *total.entry(community[i]).or_default() += s;
    }
    total
        .iter()
        .map(|(c, &t)| inside.get(c).copied().unwrap_or(0.0) / m2 - (t / m2) * (t / m2))
        .sum()
}

/// Weighted graph in aggregation: adjacency lists with self-loops, where a
/// self-loop weight counts both orientations of internal edges.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl Level {
    fn from_graph(g: &WeightedGraph) -> Self {
        Self {
            adj: (0..g.n()).map(|i| g.neighbors(i).to_vec()).collect(),
            strength: g.strengths().to_vec(),
        }
    }

    /// Local moving; returns the community of every node, relabelled
    /// `0..k`, and whether any node moved.
    fn local_moves(&self, m2: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut moved_any = false;
        let mut links: HashMap<usize, f64> = HashMap::new();
        loop {
            let mut moved = false;
            for &i in &order {
                links.clear();
                for &(j, w) in &self.adj[i] {
                    if j != i {
                        *links.entry(comm[j]).or_default() += w;
                    }
                }
                let own = comm[i];
                let k = self.strength[i];
                tot[own] -= k;
                let gain = |c: usize, w: f64| w - tot[c] * k / m2;
                let mut best = (gain(own, links.get(&own).copied().unwrap_or(0.0)), own);
                let mut cands: Vec<(&usize, &f64)> = links.iter().collect();
                cands.sort_by_key(|(c, _)| **c);
                for (&c, &w) in cands {
                    let gc = gain(c, w);
                    if gc > best.0 + 1e-12 {
                        best = (gc, c);
                    }
                }
                tot[best.1] += k;
                if best.1 != own {
                    comm[i] = best.1;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        for c in &mut comm {
            let next = relabel.len();
            *c = *relabel.entry(*c).or_insert(next);
        }
        (comm, moved_any)
    }

    fn aggregate(&self, comm: &[usize]) -> Level {
        let k = comm.iter().max().map_or(0, |m| m + 1);
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
        let mut strength = vec![0.0; k];
        for (i, row) in self.adj.iter().enumerate() {
            strength[comm[i]] += self.strength[i];
            for &(j, w) in row {
                *maps[comm[i]].entry(comm[j]).or_default() += w;
            }
        }
        let adj = maps
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|x| x.0);
                v
            })
            .collect();
        Level { adj, strength }
    }
}

fn louvain_once(g: &WeightedGraph, seed: u64) -> Vec<usize> {
    let m2: f64 = g.strengths().iter().sum();
    let mut membership: Vec<usize> = (0..g.n()).collect();
    if m2 == 0.0 {
        return membership;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = Level::from_graph(g);
    loop {
        let (comm, moved) = level.local_moves(m2, &mut rng);
        if !moved {
            break;
        }
        for c in &mut membership {
            *c = comm[*c];
        }
        level = level.aggregate(&comm);
    }
    membership
}

/// Best partition over [`LOUVAIN_RESTARTS`] seeded restarts and its
/// modularity.
pub fn louvain(g: &WeightedGraph, seed: u64) -> (Vec<usize>, f64) {
    (0..LOUVAIN_RESTARTS)
        .map(|r| {
            let p = louvain_once(g, realization_seed(seed, r as u64));
            let q = modularity(g, &p);
            (p, q)
        })
        .fold(None::<(Vec<usize>, f64)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .expect("at least one restart")
}
