//! Synthetic network models: planted four-community (Girvan–Newman),
//! Erdős–Rényi, Watts–Strogatz, Barabási–Albert, and degree-preserving
//! randomization (configuration networks).

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Expected node degree of the planted-community benchmark.
pub const GN_EXPECTED_DEGREE: f64 = 16.0;
/// Default neighbour count of the Watts–Strogatz ring lattice.
pub const WS_DEFAULT_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// Four equal communities. `r = p_out / p_in`; when `p_in` is `None` it
    /// is chosen so that the expected degree is [`GN_EXPECTED_DEGREE`].
    GirvanNewman { r: f64, p_in: Option<f64> },
    ErdosRenyi { p_link: f64 },
    WattsStrogatz { k: usize, beta: f64 },
    BarabasiAlbert { m0: usize },
}

impl Model {
    pub fn tag(&self) -> &'static str {
        match self {
            Model::GirvanNewman { .. } => "gn",
            Model::ErdosRenyi { .. } => "er",
            Model::WattsStrogatz { .. } => "ws",
            Model::BarabasiAlbert { .. } => "ba",
        }
    }

    /// The model's scale parameter (r, p_link, beta or m0).
    pub fn parameter(&self) -> f64 {
        match *self {
            Model::GirvanNewman { r, .. } => r,
            Model::ErdosRenyi { p_link } => p_link,
            Model::WattsStrogatz { beta, .. } => beta,
            Model::BarabasiAlbert { m0 } => m0 as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(model: Model, n: usize, seed: u64) -> Self {
        Self { model, n, seed }
    }

    /// The planted-community benchmark at its standard size (128 nodes).
    pub fn girvan_newman(r: f64, seed: u64) -> Self {
        Self::new(Model::GirvanNewman { r, p_in: None }, 128, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        match self.model {
            Model::GirvanNewman { r, p_in } => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::param("r", format!("{r} not in (0, 1]")));
                }
                if n < 4 || n % 4 != 0 {
                    return Err(Error::param("n", format!("{n} is not a positive multiple of 4")));
                }
                let (pi, po) = gn_probabilities(n, r, p_in);
                if !(pi > 0.0 && pi <= 1.0 && po <= 1.0) {
                    return Err(Error::param(
                        "p_in",
                        format!("infeasible link probabilities p_in={pi}, p_out={po}"),
                    ));
                }
            }
            Model::ErdosRenyi { p_link } => {
                if !(p_link > 0.0 && p_link < 1.0) {
                    return Err(Error::param("p_link", format!("{p_link} not in (0, 1)")));
                }
            }
            Model::WattsStrogatz { k, beta } => {
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::param("beta", format!("{beta} not in [0, 1]")));
                }
                if k % 2 != 0 || k == 0 {
                    return Err(Error::param("k", format!("{k} must be even and positive")));
                }
                if k >= n {
                    return Err(Error::param("k", format!("k={k} must be smaller than n={n}")));
                }
            }
            Model::BarabasiAlbert { m0 } => {
                if !(1..=50).contains(&m0) {
                    return Err(Error::param("m0", format!("{m0} not in [1, 50]")));
                }
                if n <= m0 {
                    return Err(Error::param("n", format!("n={n} must exceed m0={m0}")));
                }
            }
        }
        if n == 0 {
            return Err(Error::param("n", "need at least one node"));
        }
        Ok(())
    }
}

/// Deterministic seed for realization `index` of a run seeded with `seed`
/// (SplitMix64 finalizer over the pair).
pub fn realization_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gn_probabilities(n: usize, r: f64, p_in: Option<f64>) -> (f64, f64) {
    let c = (n / 4) as f64;
    let pi = p_in.unwrap_or(GN_EXPECTED_DEGREE / ((c - 1.0) + 3.0 * c * r));
    (pi, r * pi)
}

pub fn generate(spec: &GeneratorSpec) -> Result<WeightedGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let pairs = match spec.model {
        Model::GirvanNewman { r, p_in } => {
            let (pi, po) = gn_probabilities(n, r, p_in);
            let c = n / 4;
            bernoulli_pairs(n, &mut rng, |a, b| if a / c == b / c { pi } else { po })
        }
        Model::ErdosRenyi { p_link } => bernoulli_pairs(n, &mut rng, |_, _| p_link),
        Model::WattsStrogatz { k, beta } => watts_strogatz(n, k, beta, &mut rng),
        Model::BarabasiAlbert { m0 } => barabasi_albert(n, m0, &mut rng),
    };
    WeightedGraph::unweighted(n, pairs)
}

fn bernoulli_pairs(
    n: usize,
    rng: &mut ChaCha8Rng,
    p: impl Fn(usize, usize) -> f64,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen::<f64>() < p(a, b) {
                out.push((a, b));
            }
        }
    }
    out
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for u in 0..n {
        for j in 1..=k / 2 {
            edges.insert(key(u, (u + j) % n));
        }
    }
    let mut degree = vec![k; n];
    // Rewire each lattice edge (u, u+j) in turn, keeping u.
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !edges.contains(&key(u, v)) || rng.gen::<f64>() >= beta {
                continue;
            }
            if degree[u] >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !edges.contains(&key(u, w)) {
                    break w;
                }
            };
            edges.remove(&key(u, v));
            edges.insert(key(u, w));
            degree[v] -= 1;
            degree[w] += 1;
        }
    }
    let mut out: Vec<_> = edges.into_iter().collect();
    out.sort_unstable();
    out
}

fn barabasi_albert(n: usize, m0: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    // Each node appears once per incident edge.
    let mut repeated: Vec<usize> = Vec::new();
    for t in m0..n {
        let links = m0.min(t);
        let targets: Vec<usize> = if repeated.is_empty() {
            let mut v = sample(rng, t, links).into_vec();
            v.sort_unstable();
            v
        } else {
            let mut chosen: Vec<usize> = Vec::with_capacity(links);
            let distinct = {
                let mut s: Vec<usize> = repeated.clone();
                s.sort_unstable();
                s.dedup();
                s.len()
            };
            let links = links.min(distinct);
            while chosen.len() < links {
                let c = repeated[rng.gen_range(0..repeated.len())];
                if !chosen.contains(&c) {
                    chosen.push(c);
                }
            }
            chosen
        };
        for &s in &targets {
            out.push((s, t));
            repeated.push(s);
            repeated.push(t);
        }
    }
    out
}

/// Degree-preserving randomization of a simple unweighted graph by
/// double-edge swaps.
///
/// Aims for `10 * |E|` accepted swaps; proposals that would create a
/// self-loop or a multi-edge are rejected, and the run stops after
/// `100 * 10 * |E|` proposals so graphs with a unique realization terminate.
pub fn configuration_model(g: &WeightedGraph, seed: u64) -> Result<WeightedGraph> {
    if !g.is_unweighted() {
        return Err(Error::param("graph", "configuration model needs unit weights"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = g.edges().iter().map(|&(a, b, _)| (a, b)).collect();
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let m = edges.len();
    if m >= 2 {
        let target = 10 * m;
        let max_attempts = 100 * target;
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < target && attempts < max_attempts {
            attempts += 1;
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i == j {
                continue;
            }
            let (a, b) = edges[i];
            let (c, d) = if rng.gen::<bool>() { edges[j] } else { (edges[j].1, edges[j].0) };
            // (a,b),(c,d) -> (a,d),(c,b)
            if a == d || c == b {
                continue;
            }
            let e1 = key(a, d);
            let e2 = key(c, b);
            if present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            present.remove(&key(a, b));
            present.remove(&key(c, d));
            present.insert(e1);
            present.insert(e2);
            edges[i] = e1;
            edges[j] = e2;
            accepted += 1;
        }
    }
    edges.sort_unstable();
    WeightedGraph::unweighted(g.n(), edges)
}
