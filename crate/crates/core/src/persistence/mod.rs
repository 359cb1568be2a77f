//! Persistence diagrams of diffusion point clouds.
//!
//! [`rips_persistence`] computes the two-dimensional diagrams of a single
//! distance matrix; [`scale_variant_diagrams`] stacks them over a grid of
//! timescales into three-dimensional diagrams of `(birth, death, tau)`
//! triples.
//!
//! Essential zero-dimensional classes (one per connected component) have no
//! finite death. In a three-dimensional diagram they are stored with death
//! equal to the largest distance at that timescale and flagged
//! [`DiagramPoint::essential`], so that kernels see finite coordinates while
//! bottleneck distances can leave them out.

mod rips;
mod union_find;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::diffusion::{spectral_decompose, DistanceMatrix, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::graph::RandomWalkLaplacian;

/// Highest hole dimension supported.
pub const MAX_DIM: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub dim: usize,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Persistence pairs of one hole dimension at one timescale.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram2D {
    pub dim: usize,
    pub tau: Option<f64>,
    pub pairs: Vec<PersistencePair>,
}

impl Diagram2D {
    pub fn new(dim: usize, tau: Option<f64>, pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            dim,
            tau,
            pairs: pairs
                .into_iter()
                .map(|(birth, death)| PersistencePair { birth, death, dim })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(birth, death)` tuples sorted, for multiset comparison.
    pub fn sorted_tuples(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.pairs.iter().map(|p| (p.birth, p.death)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    /// CSV with header `dim,birth,death,tau`; infinite deaths as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let tau = self.tau.unwrap_or(0.0);
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{},{:?}", self.dim, fmt_num(p.birth), fmt_num(p.death), tau);
        }
        out
    }
}

/// A point of a three-dimensional diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub tau: f64,
    /// Essential class whose death was truncated to the largest distance.
    pub essential: bool,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64, tau: f64) -> Self {
        Self {
            birth,
            death,
            tau,
            essential: false,
        }
    }
}

/// Multiset of `(birth, death, tau)` triples of one hole dimension over a
/// timescale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram3D {
    pub dim: usize,
    pub tau_grid: Vec<f64>,
    pub points: Vec<DiagramPoint>,
}

impl Diagram3D {
    pub fn new(dim: usize, tau_grid: Vec<f64>, points: Vec<DiagramPoint>) -> Self {
        Self {
            dim,
            tau_grid,
            points,
        }
    }

    /// Diagram from bare triples; the grid is the sorted set of their
    /// timescales.
    pub fn from_triples(dim: usize, triples: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let points: Vec<DiagramPoint> = triples
            .into_iter()
            .map(|(b, d, t)| DiagramPoint::new(b, d, t))
            .collect();
        let mut grid: Vec<f64> = points.iter().map(|p| p.tau).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Self::new(dim, grid, points)
    }

    /// Stacks two-dimensional diagrams, truncating infinite deaths to the
    /// matching entry of `truncate_at`.
    pub fn from_slices(dim: usize, slices: &[(Diagram2D, f64)]) -> Result<Self> {
        let mut grid = Vec::with_capacity(slices.len());
        let mut points = Vec::new();
        for (d2, cap) in slices {
            let tau = d2
                .tau
                .ok_or_else(|| Error::param("tau", "diagram slice has no timescale"))?;
            grid.push(tau);
            for p in &d2.pairs {
                points.push(DiagramPoint {
                    birth: p.birth,
                    death: if p.is_essential() { *cap } else { p.death },
                    tau,
                    essential: p.is_essential(),
                });
            }
        }
        Ok(Self::new(dim, grid, points))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Restriction to one timescale, with essential deaths restored to
    /// infinity.
    pub fn slice(&self, tau: f64) -> Diagram2D {
        Diagram2D {
            dim: self.dim,
            tau: Some(tau),
            pairs: self
                .points
                .iter()
                .filter(|p| p.tau == tau)
                .map(|p| PersistencePair {
                    birth: p.birth,
                    death: if p.essential { f64::INFINITY } else { p.death },
                    dim: self.dim,
                })
                .collect(),
        }
    }

    /// The sub-diagram over the grid points `tau <= tau_max`.
    pub fn truncated(&self, tau_max: f64) -> Self {
        Self {
            dim: self.dim,
            tau_grid: self.tau_grid.iter().copied().filter(|&t| t <= tau_max).collect(),
            points: self.points.iter().copied().filter(|p| p.tau <= tau_max).collect(),
        }
    }

    /// Triples sorted lexicographically, for multiset comparison.
    pub fn sorted_triples(&self) -> Vec<(f64, f64, f64)> {
        let mut v: Vec<_> = self.points.iter().map(|p| (p.birth, p.death, p.tau)).collect();
        v.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
        v
    }

    /// CSV with header `dim,birth,death,tau`, one triple per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{:?}", self.dim, fmt_num(p.birth), fmt_num(p.death), p.tau);
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the CSV format. Rows with an `inf` death are kept as essential
    /// points with infinite death.
    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let mut dim = None;
        let mut points = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (k == 0 && line.starts_with("dim")) {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                msg,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", f.len())));
            }
            let l: usize = f[0].parse().map_err(|_| err(format!("bad dim `{}`", f[0])))?;
            if *dim.get_or_insert(l) != l {
                return Err(err("mixed hole dimensions in one diagram".into()));
            }
            let num = |s: &str| parse_num(s).ok_or_else(|| err(format!("bad number `{s}`")));
            let (b, d, t) = (num(f[1])?, num(f[2])?, num(f[3])?);
            points.push(DiagramPoint {
                birth: b,
                death: d,
                tau: t,
                essential: d.is_infinite(),
            });
        }
        let mut grid: Vec<f64> = points.iter().map(|p| p.tau).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(Self::new(dim.unwrap_or(0), grid, points))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }
}

pub const CSV_HEADER: &str = "dim,birth,death,tau";

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x:?}")
    }
}

fn parse_num(s: &str) -> Option<f64> {
    match s {
        "inf" | "Inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse().ok(),
    }
}

fn row_major(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.n();
    let mut flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            flat[i * n + j] = d.get(i, j);
        }
    }
    flat
}

/// Vietoris–Rips persistence diagrams for hole dimensions `0..=max_dim`.
///
/// Dimension 0 holds exactly `n` pairs (all born at 0, one essential pair per
/// connected component of the finite-distance graph). Dimension 1 omits
/// zero-persistence pairs.
pub fn rips_persistence(d: &DistanceMatrix, max_dim: usize) -> Result<Vec<Diagram2D>> {
    if max_dim > MAX_DIM {
        return Err(Error::param("max_dim", format!("{max_dim} exceeds {MAX_DIM}")));
    }
    let pairs = rips::compute(d.n(), &row_major(d), max_dim);
    let mut out = vec![Diagram2D::new(0, d.tau, pairs.h0)];
    if max_dim >= 1 {
        out.push(Diagram2D::new(1, d.tau, pairs.h1));
    }
    Ok(out)
}

pub fn validate_tau_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("tau_grid", "empty timescale grid"));
    }
    if let Some(bad) = grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::param("tau_grid", format!("timescale {bad} is not positive")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "tau_grid",
            format!("not strictly increasing at {} -> {}", w[0], w[1]),
        ));
    }
    Ok(())
}

/// Diagrams of one timescale: distances between nodes in different connected
/// components of the graph are left out of the filtration, so each
/// component keeps its own essential class.
fn diagrams_at(spec: &SpectralDecomposition, tau: f64, max_dim: usize) -> Result<(Vec<Diagram2D>, f64)> {
    let dm = spec.distance_matrix(tau)?;
    let cap = dm.max();
    let masked = if spec.zero_modes() > 1 {
        dm.masked_by(spec.component_labels())
    } else {
        dm
    };
    Ok((rips_persistence(&masked, max_dim)?, cap))
}

/// Three-dimensional diagrams for every hole dimension `0..=max_dim` from a
/// shared spectral decomposition.
pub fn scale_variant_from_spectrum(
    spec: &SpectralDecomposition,
    tau_grid: &[f64],
    max_dim: usize,
) -> Result<Vec<Diagram3D>> {
    validate_tau_grid(tau_grid)?;
    if max_dim > MAX_DIM {
        return Err(Error::param("max_dim", format!("{max_dim} exceeds {MAX_DIM}")));
    }
    let per_tau: Vec<(Vec<Diagram2D>, f64)> = tau_grid
        .par_iter()
        .map(|&t| diagrams_at(spec, t, max_dim))
        .collect::<Result<_>>()?;
    (0..=max_dim)
        .map(|l| {
            let slices: Vec<(Diagram2D, f64)> =
                per_tau.iter().map(|(ds, cap)| (ds[l].clone(), *cap)).collect();
            Diagram3D::from_slices(l, &slices)
        })
        .collect()
}

pub fn scale_variant_diagrams(
    l: &RandomWalkLaplacian,
    tau_grid: &[f64],
    max_dim: usize,
) -> Result<Vec<Diagram3D>> {
    scale_variant_from_spectrum(&spectral_decompose(l)?, tau_grid, max_dim)
}

/// Three-dimensional diagram of `dim`-dimensional holes over `tau_grid`.
pub fn scale_variant_diagram(l: &RandomWalkLaplacian, tau_grid: &[f64], dim: usize) -> Result<Diagram3D> {
    let mut all = scale_variant_diagrams(l, tau_grid, dim)?;
    Ok(all.swap_remove(dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    #[test]
    fn single_point_diagram() {
        let d = DistanceMatrix::from_fn(1, None, |_, _| 0.0).unwrap();
        let ds = rips_persistence(&d, 1).unwrap();
        assert_eq!(ds[0].sorted_tuples(), vec![(0.0, f64::INFINITY)]);
        assert!(ds[1].is_empty());
    }

    #[test]
    fn unit_square_loop() {
        let pts = [(0.0f64, 0.0f64), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let d = DistanceMatrix::from_fn(4, None, |i, j| {
            ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
        })
        .unwrap();
        let ds = rips_persistence(&d, 1).unwrap();
        assert_eq!(ds[1].sorted_tuples(), vec![(1.0, 2f64.sqrt())]);
    }

    #[test]
    fn grid_validation() {
        assert!(validate_tau_grid(&[1.0, 2.0]).is_ok());
        assert!(validate_tau_grid(&[]).is_err());
        assert!(validate_tau_grid(&[2.0, 1.0]).is_err());
        assert!(validate_tau_grid(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn single_tau_grid_equals_slice() {
        let g = WeightedGraph::unweighted(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let l = g.laplacian();
        let d3 = scale_variant_diagram(&l, &[0.5], 1).unwrap();
        let dm = crate::diffusion::distance_matrix(&crate::diffusion::point_cloud(&l, 0.5).unwrap());
        let d2 = &rips_persistence(&dm, 1).unwrap()[1];
        assert_eq!(d3.slice(0.5).sorted_tuples(), d2.sorted_tuples());
        assert!(d3.points.iter().all(|p| p.tau == 0.5));
    }

    #[test]
    fn disconnected_graph_essential_count() {
        let g = WeightedGraph::unweighted(7, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let d3 = scale_variant_diagram(&g.laplacian(), &[1.0, 2.0, 3.0], 0).unwrap();
        for t in [1.0, 2.0, 3.0] {
            let essential = d3.points.iter().filter(|p| p.tau == t && p.essential).count();
            assert_eq!(essential, 3);
            assert_eq!(d3.slice(t).len(), 7);
        }
        assert!(d3.points.iter().all(|p| p.death.is_finite()));
    }

    #[test]
    fn csv_round_trip() {
        let d = Diagram3D::from_triples(1, [(0.1, 0.25, 1.0), (0.2, 0.3, 2.0)]);
        let back = Diagram3D::from_csv(&d.to_csv(), "t").unwrap();
        assert_eq!(back, d);
        let d2 = Diagram2D::new(0, Some(1.0), [(0.0, f64::INFINITY)]);
        assert!(d2.to_csv().contains(",inf,"));
        let back = Diagram3D::from_csv(&d2.to_csv(), "t").unwrap();
        assert!(back.points[0].essential);
    }
}
