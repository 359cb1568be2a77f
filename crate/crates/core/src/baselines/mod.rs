//! Comparison featurizations: eighteen common network measures and classical
//! graph kernels (random walk, shortest path, graphlet, Weisfeiler–Lehman).
//!
//! Path-based quantities use hop counts; modularity and first-passage times
//! use edge weights.

mod graph_kernels;
mod louvain;
mod measures;

pub use graph_kernels::{
    graphlet_counts, graphlet_gram, graphlet_kernel, random_walk_gram, random_walk_kernel, shortest_path_gram,
    shortest_path_histogram, shortest_path_kernel, wl_features, wl_gram, wl_kernel, RandomWalk,
    GRAPHLET_SMALL_GRAPH, WL_DEFAULT_ITERATIONS,
};
pub use louvain::{louvain, modularity, LOUVAIN_RESTARTS};
pub use measures::{common_measures, measure_gram, minmax_normalize, MeasureVector, MEASURE_NAMES};

/// Hop distances from `s`; `u32::MAX` marks unreachable nodes.
pub(crate) fn bfs(g: &crate::graph::WeightedGraph, s: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = std::collections::VecDeque::from([s]);
    dist[s] = 0;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}
