//! Continuous-time random-walk diffusion on a graph.
//!
//! A walker started at node `i` has distribution `p(tau | i) = u_i exp(-tau L)`
//! after time `tau`, where `L` is the random-walk Laplacian. The rows of the
//! heat kernel therefore form a point cloud in `R^n`, one point per node.
//!
//! `L` is not symmetric, but it is similar to `S = D^{1/2} L D^{-1/2}`, which
//! is. One symmetric eigendecomposition `S = V diag(lambda) V^T` serves every
//! timescale:
//!
//! ```text
//! exp(-tau L) = D^{-1/2} V diag(exp(-tau lambda)) V^T D^{1/2}
//! ```
//!
//! The zero modes (one per connected component) are replaced by the exact
//! stationary projector of each component, so that distances between nodes of
//! the same component carry no rounding offset from the constant mode even at
//! large `tau`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::RandomWalkLaplacian;
use crate::linalg::symmetric_eigen;

/// Eigendecomposition of a random-walk Laplacian via its symmetric form.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues.
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetric form, as columns, in the
    /// same order as `eigenvalues`.
    vectors: DMatrix<f64>,
    /// `sqrt(W_i)` (1 for isolated nodes).
    scale: Vec<f64>,
    strengths: Vec<f64>,
    component: Vec<usize>,
    component_count: usize,
}

fn laplacian_components(l: &RandomWalkLaplacian) -> (usize, Vec<usize>) {
    let n = l.n();
    let m = l.matrix();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if u != v && label[u] == usize::MAX && (m[(v, u)] != 0.0 || m[(u, v)] != 0.0) {
                    label[u] = count;
                    stack.push(u);
                }
            }
        }
        count += 1;
    }
    (count, label)
}

pub fn spectral_decompose(l: &RandomWalkLaplacian) -> Result<SpectralDecomposition> {
    let s = l.symmetric_form();
    let (eigenvalues, vectors) = symmetric_eigen(&s)?;
    let (component_count, component) = laplacian_components(l);
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
        scale: l.similarity_scale(),
        strengths: l.strengths().to_vec(),
        component,
        component_count,
    })
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Connected-component label of every node.
    pub fn component_labels(&self) -> &[usize] {
        &self.component
    }

    /// Number of zero modes (connected components, isolated nodes included).
    pub fn zero_modes(&self) -> usize {
        self.component_count
    }

    /// Right eigenvectors of `L` as columns: `r_k = D^{-1/2} v_k`.
    pub fn right_vectors(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, k| self.vectors[(i, k)] / self.scale[i])
    }

    /// Left eigenvectors of `L` as columns: `l_k = D^{1/2} v_k`, normalized so
    /// that `L = sum_k lambda_k r_k l_k^T`.
    pub fn left_vectors(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, k| self.vectors[(i, k)] * self.scale[i])
    }

    /// `sum_k lambda_k r_k l_k^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let r = self.right_vectors();
        let l = self.left_vectors();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        r * lam * l.transpose()
    }

    /// Stationary projector: row `i` is the stationary distribution of the
    /// component containing `i` (a unit vector for isolated nodes).
    fn stationary(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut volume = vec![0.0; self.component_count];
        for i in 0..n {
            volume[self.component[i]] += self.strengths[i];
        }
        DMatrix::from_fn(n, n, |i, j| {
            let c = self.component[i];
            if self.component[j] != c {
                0.0
            } else if volume[c] == 0.0 {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.strengths[j] / volume[c]
            }
        })
    }

    /// `exp(-tau L)`.
    pub fn heat_kernel(&self, tau: f64) -> Result<DMatrix<f64>> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", format!("{tau} must be positive and finite")));
        }
        let n = self.n();
        let z = self.component_count.min(n);
        let modes = n - z;
        let mut out = self.stationary();
        if modes > 0 {
            // A = D^{-1/2} V_+ diag(e^{-tau lambda}), B = D^{1/2} V_+
            let a = DMatrix::from_fn(n, modes, |i, k| {
                self.vectors[(i, z + k)] * (-tau * self.eigenvalues[z + k]).exp() / self.scale[i]
            });
            let b = DMatrix::from_fn(n, modes, |i, k| self.vectors[(i, z + k)] * self.scale[i]);
            out.gemm(1.0, &a, &b.transpose(), 1.0);
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite heat kernel entry at tau={tau}")));
        }
        Ok(out)
    }

    pub fn point_cloud(&self, tau: f64) -> Result<DiffusionPointCloud> {
        let mut points = self.heat_kernel(tau)?;
        const TOL: f64 = 1e-9;
        if let Some(bad) = points.iter().find(|&&x| x < -TOL || x > 1.0 + TOL) {
            return Err(Error::Numerical(format!(
                "heat kernel entry {bad} outside [0, 1] at tau={tau}"
            )));
        }
        points.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        Ok(DiffusionPointCloud { tau, points })
    }

    pub fn distance_matrix(&self, tau: f64) -> Result<DistanceMatrix> {
        Ok(distance_matrix(&self.point_cloud(tau)?))
    }
}

/// `exp(-tau L)` for a single timescale.
pub fn heat_kernel(l: &RandomWalkLaplacian, tau: f64) -> Result<DMatrix<f64>> {
    spectral_decompose(l)?.heat_kernel(tau)
}

pub fn point_cloud(l: &RandomWalkLaplacian, tau: f64) -> Result<DiffusionPointCloud> {
    spectral_decompose(l)?.point_cloud(tau)
}

/// Points `p(tau | i)` as the rows of an `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPointCloud {
    pub tau: f64,
    pub points: DMatrix<f64>,
}

impl DiffusionPointCloud {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }
}

/// Symmetric matrix of pairwise distances with zero diagonal.
///
/// Off-diagonal entries may be `+inf`: such pairs never become adjacent in a
/// Rips filtration.
///
/// `tau` is `None` for matrices that do not belong to a single timescale
/// (averages over a grid).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub tau: Option<f64>,
    d: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Validates squareness, symmetry, zero diagonal and non-negativity.
    pub fn new(tau: Option<f64>, d: DMatrix<f64>) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::Shape(format!("{}x{} distance matrix", d.nrows(), d.ncols())));
        }
        let n = d.nrows();
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::param("distance", format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let x = d[(i, j)];
                if x != d[(j, i)] || !(x >= 0.0) {
                    return Err(Error::param(
                        "distance",
                        format!("entry ({i}, {j}) is asymmetric, negative or NaN"),
                    ));
                }
            }
        }
        Ok(Self { tau, d })
    }

    /// Builds a matrix from a function on `i > j`, mirrored.
    pub fn from_fn(n: usize, tau: Option<f64>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let x = f(i, j);
                d[(i, j)] = x;
                d[(j, i)] = x;
            }
        }
        Self::new(tau, d)
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Largest finite entry.
    pub fn max(&self) -> f64 {
        self.d.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max)
    }

    /// Copy with every entry between nodes of different groups set to `+inf`.
    pub fn masked_by(&self, group: &[usize]) -> Self {
        let n = self.n();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if group[i] == group[j] {
                self.d[(i, j)]
            } else {
                f64::INFINITY
            }
        });
        Self { tau: self.tau, d }
    }

    /// Row-major CSV preceded by a `# tau=<value>` line.
    pub fn to_csv(&self) -> String {
        let mut out = match self.tau {
            Some(t) => format!("# tau={t}\n"),
            None => "# tau=avg\n".to_string(),
        };
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| format!("{:?}", self.d[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut tau = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(t) = line.strip_prefix("# tau=") {
                tau = t.parse::<f64>().ok();
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: "distance csv".into(),
                    line: k + 1,
                    msg: e.to_string(),
                })?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("distance CSV is not square".into()));
        }
        Self::new(tau, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Pairwise Euclidean distances between the points of a cloud.
pub fn distance_matrix(pc: &DiffusionPointCloud) -> DistanceMatrix {
    let n = pc.n();
    let p = &pc.points;
    // Column-major storage: transpose once so each point is contiguous.
    let rows: Vec<Vec<f64>> = (0..n).map(|i| p.row(i).iter().copied().collect()).collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let s: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let x = s.sqrt();
            d[(i, j)] = x;
            d[(j, i)] = x;
        }
    }
    DistanceMatrix { tau: Some(pc.tau), d }
}

/// Entrywise mean of distance matrices. With `normalized`, each matrix is
/// first divided by its maximum element.
pub fn average_distance_matrix(mats: &[DistanceMatrix], normalized: bool) -> Result<DistanceMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::Empty("no distance matrices to average".into()))?;
    let n = first.n();
    let mut acc = DMatrix::zeros(n, n);
    for (k, m) in mats.iter().enumerate() {
        if m.n() != n {
            return Err(Error::Shape(format!("matrix {k} is {}x{}, expected {n}x{n}", m.n(), m.n())));
        }
        if normalized {
            let mx = m.max();
            if mx == 0.0 {
                return Err(Error::param(
                    "normalized",
                    format!("matrix {k} is identically zero and cannot be normalized"),
                ));
            }
            acc += m.matrix() / mx;
        } else {
            acc += m.matrix();
        }
    }
    acc /= mats.len() as f64;
    Ok(DistanceMatrix { tau: None, d: acc })
}

/// Floor guarding ratios against zero modes when scanning for a spectral gap.
pub const GAP_FLOOR: f64 = 1e-9;

/// The eigenvalue that follows the largest relative gap among the smallest
/// 20% of the spectrum (at least two eigenvalues are scanned).
pub fn separation_eigenvalue(spec: &SpectralDecomposition) -> Result<f64> {
    let lam = spec.eigenvalues();
    if lam.iter().all(|&x| x <= GAP_FLOOR) {
        return Err(Error::param("spectrum", "all eigenvalues are zero (graph has no edges)"));
    }
    let window = ((lam.len() as f64 * 0.2).ceil() as usize).clamp(2, lam.len());
    let mut best = (f64::NEG_INFINITY, lam[1]);
    for k in 0..window - 1 {
        let ratio = lam[k + 1] / lam[k].max(GAP_FLOOR);
        if ratio > best.0 {
            best = (ratio, lam[k + 1]);
        }
    }
    if best.1 <= GAP_FLOOR {
        return Err(Error::param("spectrum", "no positive eigenvalue in the scanned window"));
    }
    Ok(best.1)
}

/// `gap_factor / lambda_sep`: a timescale by which every mode beyond the
/// spectral gap has decayed.
pub fn suggest_tau_max(spec: &SpectralDecomposition, gap_factor: f64) -> Result<f64> {
    if !(gap_factor > 0.0) {
        return Err(Error::param("gap_factor", format!("{gap_factor} must be positive")));
    }
    Ok(gap_factor / separation_eigenvalue(spec)?)
}
