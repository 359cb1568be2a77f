//! Undirected weighted graphs, the edge-list text format, and the random-walk
//! Laplacian.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An undirected weighted graph on nodes `0..n`.
///
/// Edges are stored once with `i < j`, sorted lexicographically. Node
/// strengths `W_i = sum_j w_ij` are cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    strengths: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph, rejecting self-loops, duplicate pairs (in either
    /// orientation), out-of-range endpoints and negative or non-finite weights.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "graph needs at least one node"));
        }
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::param(
                    "edges",
                    format!("edge ({a}, {b}) out of range for {n} nodes"),
                ));
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop at node {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::param(
                    "edges",
                    format!("edge ({a}, {b}) has invalid weight {w}"),
                ));
            }
            list.push((a.min(b), a.max(b), w));
        }
        list.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::param(
                "edges",
                format!("duplicate edge ({}, {})", w[0].0, w[0].1),
            ));
        }
        Ok(Self::from_sorted(n, list))
    }

    /// Unit-weight graph from a list of node pairs.
    pub fn unweighted(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(a, b)| (a, b, 1.0)))
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut strengths = vec![0.0; n];
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in &edges {
            strengths[a] += w;
            strengths[b] += w;
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(v, _)| v);
        }
        Self {
            n,
            edges,
            strengths,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.strengths[i]
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Neighbours of `i` with edge weights, sorted by node index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |&(v, _)| v).is_ok()
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        match self.adjacency[a].binary_search_by_key(&b, |&(v, _)| v) {
            Ok(k) => self.adjacency[a][k].1,
            Err(_) => 0.0,
        }
    }

    /// True when every edge has weight exactly 1.
    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|&(_, _, w)| w == 1.0)
    }

    /// Component label for every node; labels are `0..count` in order of the
    /// smallest node of each component.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adjacency[v] {
                    if label[u] == usize::MAX {
                        label[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn component_count(&self) -> usize {
        self.components().0
    }

    /// Dense symmetric weight matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for &(a, b, x) in &self.edges {
            w[(a, b)] = x;
            w[(b, a)] = x;
        }
        w
    }

    /// Same topology with one edge weight replaced.
    pub fn with_weight(&self, a: usize, b: usize, w: f64) -> Result<Self> {
        let (a, b) = (a.min(b), a.max(b));
        if !self.has_edge(a, b) {
            return Err(Error::param("edge", format!("({a}, {b}) is not an edge")));
        }
        Self::new(
            self.n,
            self.edges
                .iter()
                .map(|&(x, y, v)| if (x, y) == (a, b) { (x, y, w) } else { (x, y, v) }),
        )
    }

    pub fn laplacian(&self) -> RandomWalkLaplacian {
        build_laplacian(self)
    }
}

/// The random-walk Laplacian `I - D^{-1} W`, with zero rows for isolated
/// nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalkLaplacian {
    matrix: DMatrix<f64>,
    strengths: Vec<f64>,
}

impl RandomWalkLaplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Diagonal of the similarity transform: `sqrt(W_i)`, or 1 for isolated
    /// nodes (their rows and columns are zero, so any scale works).
    pub(crate) fn similarity_scale(&self) -> Vec<f64> {
        self.strengths
            .iter()
            .map(|&w| if w > 0.0 { w.sqrt() } else { 1.0 })
            .collect()
    }

    /// The symmetric matrix `S = D^{1/2} L D^{-1/2}`, similar to `L`.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let scale = self.similarity_scale();
        let n = self.n();
        let mut s = DMatrix::from_fn(n, n, |i, j| scale[i] * self.matrix[(i, j)] / scale[j]);
        // Symmetrize away rounding so the eigensolver sees an exactly
        // symmetric input.
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }
}

pub fn build_laplacian(g: &WeightedGraph) -> RandomWalkLaplacian {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let wi = g.strength(i);
        if wi != 0.0 {
            m[(i, i)] = 1.0;
            for &(j, w) in g.neighbors(i) {
                m[(i, j)] = -w / wi;
            }
        }
    }
    RandomWalkLaplacian {
        matrix: m,
        strengths: g.strengths().to_vec(),
    }
}

const NODES_HEADER: &str = "# nodes:";

/// Parses the edge-list text format.
///
/// One edge per line as `i j [w]` (weight defaults to 1), `#` starts a comment
/// line, LF or CRLF line endings. A `# nodes: N` comment, as written by
/// [`write_edge_list`], acts as a node-count hint.
pub fn parse_edge_list(text: &str, source: &str, n_hint: Option<usize>) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut seen = HashMap::new();
    let mut n = n_hint.unwrap_or(0);
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix(NODES_HEADER) {
            if let Ok(k) = rest.trim().parse::<usize>() {
                n = n.max(k);
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(parse_err(
                line_no,
                format!("expected `i j [w]`, found {} fields", tokens.len()),
            ));
        }
        let node = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("invalid node id `{t}`")))
        };
        let a = node(tokens[0])?;
        let b = node(tokens[1])?;
        let w = match tokens.get(2) {
            Some(t) => t
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("invalid weight `{t}`")))?,
            None => 1.0,
        };
        if a == b {
            return Err(parse_err(line_no, format!("self-loop at node {a}")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(parse_err(line_no, format!("negative or non-finite weight {w}")));
        }
        let key = (a.min(b), a.max(b));
        if let Some(prev) = seen.insert(key, line_no) {
            return Err(parse_err(
                line_no,
                format!("duplicate edge ({}, {}) first seen on line {prev}", key.0, key.1),
            ));
        }
        n = n.max(a + 1).max(b + 1);
        edges.push((a, b, w));
    }
    if n == 0 {
        return Err(parse_err(0, "no edges and no node count".into()));
    }
    WeightedGraph::new(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>, n_hint: Option<usize>) -> Result<WeightedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string(), n_hint)
}

/// Serializes a graph; `parse_edge_list` of the output reproduces it exactly.
pub fn write_edge_list(g: &WeightedGraph) -> String {
    let mut out = format!("{NODES_HEADER} {}\n", g.n());
    for &(a, b, w) in g.edges() {
        // `{:?}` on f64 prints the shortest representation that round-trips.
        let _ = writeln!(out, "{a} {b} {w:?}");
    }
    out
}

pub fn save_edge_list(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_edge_list(g)).map_err(|e| Error::io(path, e))
}

/// Mapping from original node labels to contiguous zero-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    labels: Vec<String>,
}

impl NodeMapping {
    /// Original label of node `i`.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV with header `index,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,label\n");
        for (i, l) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i},{l}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parses an edge list whose node identifiers are arbitrary tokens, assigning
/// indices in order of first appearance.
pub fn parse_edge_list_reindexed(text: &str, source: &str) -> Result<(WeightedGraph, NodeMapping)> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut rewritten = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            rewritten.push('\n');
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                msg: format!("expected `i j [w]`, found {} fields", tokens.len()),
            });
        }
        let mut id = |t: &str| {
            *index.entry(t.to_string()).or_insert_with(|| {
                labels.push(t.to_string());
                labels.len() - 1
            })
        };
        let a = id(tokens[0]);
        let b = id(tokens[1]);
        match tokens.get(2) {
            Some(w) => {
                let _ = writeln!(rewritten, "{a} {b} {w}");
            }
            None => {
                let _ = writeln!(rewritten, "{a} {b}");
            }
        }
    }
    let g = parse_edge_list(&rewritten, source, None)?;
    Ok((g, NodeMapping { labels }))
}

pub fn load_edge_list_reindexed(path: impl AsRef<Path>) -> Result<(WeightedGraph, NodeMapping)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list_reindexed(&text, &path.display().to_string())
}
