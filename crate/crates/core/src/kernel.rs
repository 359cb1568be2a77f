//! Positive-definite kernel between three-dimensional persistence diagrams,
//! its normalization, the bandwidth heuristic and Gram matrices.
//!
//! For `q1 = (b1, d1, τ1)` and `q2 = (b2, d2, τ2)` the kernel sums
//!
//! ```text
//! exp(-d²(q1, q2) / 2σ²) - exp(-d²(q1, q̄2) / 2σ²)
//! ```
//!
//! over all point pairs, scaled by `1 / (σ √(2π))`, where
//! `d²(q1, q2) = (b1-b2)² + (d1-d2)² + ξ²(τ1-τ2)²` and `q̄2 = (d2, b2, τ2)` is
//! the mirror image of `q2` across the diagonal. The timescale term factors
//! out, so points are grouped by timescale planes. Summands too small to
//! change the result beyond one part in 10^17 are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::persistence::Diagram3D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma: f64,
    xi: f64,
}

impl KernelParams {
    pub fn new(sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::param("xi", format!("must be positive, got {xi}")));
        }
        Ok(Self { sigma, xi })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Points of one timescale plane sorted by birth.
#[derive(Debug, Clone, PartialEq)]
struct Slice {
    tau: f64,
    /// `(birth, death, persistence)`.
    pts: Vec<(f64, f64, f64)>,
}

fn slices(d: &Diagram3D) -> Vec<Slice> {
    let mut pts: Vec<_> = d.points.iter().collect();
    pts.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.birth.total_cmp(&b.birth)).then(a.death.total_cmp(&b.death)));
    let mut out: Vec<Slice> = Vec::new();
    for p in pts {
        let q = (p.birth, p.death, p.death - p.birth);
        match out.last_mut() {
            Some(s) if s.tau == p.tau => s.pts.push(q),
            _ => out.push(Slice { tau: p.tau, pts: vec![q] }),
        }
    }
    out
}

/// Exponents beyond this underflow `exp` to an exact zero.
const UNDERFLOW: f64 = 800.0;

/// Largest relative change of the sum caused by skipping negligible
/// summands.
const TAIL_FRACTION: f64 = 1e-17;

fn cmp_slices(a: &[Slice], b: &[Slice]) -> std::cmp::Ordering {
    let key = |s: &[Slice]| s.iter().map(|x| x.pts.len()).sum::<usize>();
    key(a).cmp(&key(b)).then_with(|| {
        let flat = |s: &[Slice]| -> Vec<f64> {
            s.iter()
                .flat_map(|x| std::iter::once(x.tau).chain(x.pts.iter().flat_map(|p| [p.0, p.1])))
                .collect()
        };
        let (fa, fb) = (flat(a), flat(b));
        fa.iter()
            .zip(&fb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Sum over one pair of timescale planes, timescale factor included as the
/// exponent `t`. Summands whose total exponent exceeds `cut` are skipped.
///
/// With persistence `p = d - b`, the mirrored distance is the direct one
/// plus `2 p1 p2`, so each summand is `e^{-D/2σ²} (1 - e^{-2 p1 p2 / 2σ²})`,
/// which is nonnegative and at most 1.
fn block_sum(e: &Slice, f: &Slice, inv: f64, t: f64, cut: f64) -> f64 {
    let budget = cut - t;
    if budget < 0.0 {
        return 0.0;
    }
    let window = (budget / inv).sqrt();
    let mut acc = Neumaier::default();
    for &(b1, d1, p1) in &e.pts {
        let lo = f.pts.partition_point(|q| q.0 < b1 - window);
        for &(b2, d2, p2) in &f.pts[lo..] {
            if b2 > b1 + window {
                break;
            }
            let direct = ((b1 - b2) * (b1 - b2) + (d1 - d2) * (d1 - d2)) * inv;
            if direct > budget {
                continue;
            }
            acc.add((-(direct + t)).exp() * -(-2.0 * p1 * p2 * inv).exp_m1());
        }
    }
    acc.value()
}

/// Unscaled kernel sum.
///
/// Blocks of equal timescale are summed first with only underflowing terms
/// skipped. Their total `S0` is a lower bound of the full sum, so across all
/// `N` point pairs, summands below `TAIL_FRACTION · S0 / N` add up to less
/// than `TAIL_FRACTION` of the result and are skipped in the remaining
/// blocks.
fn kernel_sum(e: &[Slice], f: &[Slice], inv: f64, xi: f64) -> f64 {
    let mut blocks: Vec<(f64, usize, usize)> = Vec::with_capacity(e.len() * f.len());
    for (i, se) in e.iter().enumerate() {
        for (j, sf) in f.iter().enumerate() {
            let dt = xi * (se.tau - sf.tau);
            let t = dt * dt * inv;
            if t <= UNDERFLOW {
                blocks.push((t, i, j));
            }
        }
    }
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let split = blocks.partition_point(|b| b.0 == 0.0);
    let mut total = Neumaier::default();
    for &(t, i, j) in &blocks[..split] {
        total.add(block_sum(&e[i], &f[j], inv, t, UNDERFLOW));
    }
    let s0 = total.value();
    let cut = if s0 > 0.0 {
        let pairs: usize = e.iter().map(|s| s.pts.len()).sum::<usize>() * f.iter().map(|s| s.pts.len()).sum::<usize>();
        (pairs as f64 / (TAIL_FRACTION * s0)).ln().clamp(0.0, UNDERFLOW)
    } else {
        UNDERFLOW
    };
    for &(t, i, j) in &blocks[split..] {
        if t > cut {
            break;
        }
        total.add(block_sum(&e[i], &f[j], inv, t, cut));
    }
    total.value()
}

fn kernel_slices(e: &[Slice], f: &[Slice], p: KernelParams) -> f64 {
    // A fixed operand order makes the value bitwise symmetric.
    let (e, f) = if cmp_slices(e, f).is_gt() { (f, e) } else { (e, f) };
    let inv = 1.0 / (2.0 * p.sigma * p.sigma);
    kernel_sum(e, f, inv, p.xi) / (p.sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Direct evaluation of the double sum over all point pairs, without any
/// pruning. Reference for [`kernel_value`].
pub fn kernel_value_naive(e: &Diagram3D, f: &Diagram3D, p: KernelParams) -> f64 {
    let inv = 1.0 / (2.0 * p.sigma * p.sigma);
    let mut acc = Neumaier::default();
    for q1 in &e.points {
        for q2 in &f.points {
            let t = p.xi * p.xi * (q1.tau - q2.tau) * (q1.tau - q2.tau);
            let direct = (q1.birth - q2.birth).powi(2) + (q1.death - q2.death).powi(2) + t;
            let mirror = (q1.birth - q2.death).powi(2) + (q1.death - q2.birth).powi(2) + t;
            acc.add((-direct * inv).exp() - (-mirror * inv).exp());
        }
    }
    acc.value() / (p.sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Kernel value between two three-dimensional diagrams.
pub fn kernel_value(e: &Diagram3D, f: &Diagram3D, p: KernelParams) -> f64 {
    kernel_slices(&slices(e), &slices(f), p)
}

/// Largest number of point pairs per diagram entering the bandwidth median;
/// bigger diagrams are subsampled with a fixed seed.
pub const BANDWIDTH_PAIR_CAP: usize = 200_000;

fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    }
}

fn pair_sq_dist(d: &Diagram3D, k: usize) -> f64 {
    // Unrank k into the pair (i, j), i < j, ordered by j then i.
    let j = ((((8 * k + 1) as f64).sqrt() + 1.0) / 2.0).floor() as usize;
    let j = if j * (j - 1) / 2 > k { j - 1 } else if (j + 1) * j / 2 <= k { j + 1 } else { j };
    let i = k - j * (j - 1) / 2;
    let (p, q) = (&d.points[i], &d.points[j]);
    (p.birth - q.birth).powi(2) + (p.death - q.death).powi(2)
}

/// Bandwidth from a collection of diagrams: `σ² = ½ · median_s σ_s²` where
/// `σ_s²` is the median squared birth-death distance between points of
/// diagram `s`; the timescale weight is set to `ξ = σ`. Diagrams with fewer
/// than two points are skipped.
pub fn bandwidth_heuristic(diagrams: &[Diagram3D]) -> Result<KernelParams> {
    if diagrams.is_empty() {
        return Err(Error::Empty("no diagrams for the bandwidth heuristic".into()));
    }
    let mut per_diagram: Vec<f64> = diagrams
        .par_iter()
        .enumerate()
        .filter(|(_, d)| d.len() >= 2)
        .map(|(s, d)| {
            let total = d.len() * (d.len() - 1) / 2;
            let mut sq: Vec<f64> = if total <= BANDWIDTH_PAIR_CAP {
                (0..total).map(|k| pair_sq_dist(d, k)).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(s as u64);
                sample(&mut rng, total, BANDWIDTH_PAIR_CAP)
                    .into_iter()
                    .map(|k| pair_sq_dist(d, k))
                    .collect()
            };
            median(&mut sq)
        })
        .collect();
    if per_diagram.is_empty() {
        return Err(Error::Empty("every diagram has fewer than two points".into()));
    }
    let sigma = (median(&mut per_diagram) / 2.0).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Numerical(
            "bandwidth heuristic gave zero: diagram points coincide".into(),
        ));
    }
    KernelParams::new(sigma, sigma)
}

/// Symmetric matrix of kernel values over a labelled collection of items.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub ids: Vec<String>,
    pub normalized: bool,
}

impl GramMatrix {
    pub fn new(matrix: DMatrix<f64>, ids: Vec<String>, normalized: bool) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "Gram matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if ids.len() != matrix.nrows() {
            return Err(Error::Shape(format!(
                "{} identifiers for a {}x{} Gram matrix",
                ids.len(),
                matrix.nrows(),
                matrix.nrows()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("Gram matrix has non-finite entries".into()));
        }
        Ok(Self {
            matrix,
            ids,
            normalized,
        })
    }

    /// Gram matrix with identifiers `0..m`.
    pub fn from_matrix(matrix: DMatrix<f64>, normalized: bool) -> Result<Self> {
        let ids = (0..matrix.nrows()).map(|i| i.to_string()).collect();
        Self::new(matrix, ids, normalized)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Principal submatrix on `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> GramMatrix {
        GramMatrix {
            matrix: DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.matrix[(idx[a], idx[b])]),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            normalized: self.normalized,
        }
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        if self.is_empty() {
            return (0.0, 0.0);
        }
        match symmetric_eigen(&self.matrix) {
            Ok((vals, _)) => (vals[0], vals[vals.len() - 1]),
            Err(_) => (f64::NAN, f64::NAN),
        }
    }

    /// Symmetric and positive semidefinite up to `-tol · λ_max`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let (lo, hi) = self.eigen_range();
        self.matrix == self.matrix.transpose() && lo >= -tol * hi.abs().max(f64::MIN_POSITIVE)
    }

    /// CSV: header row of identifiers, then one row per item.
    pub fn to_csv(&self) -> String {
        let mut out = self.ids.join(",");
        out.push('\n');
        for i in 0..self.len() {
            let row: Vec<String> = (0..self.len()).map(|j| format!("{:?}", self.matrix[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the CSV format. The matrix counts as normalized when its
    /// diagonal is all ones.
    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(Error::Empty(format!("{source}: empty Gram matrix file")));
        };
        let ids: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let m = ids.len();
        let mut data = Vec::with_capacity(m * m);
        let mut rows = 0;
        for (k, line) in lines {
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                msg,
            };
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("bad number `{}`", s.trim()))))
                .collect::<Result<_>>()?;
            if vals.len() != m {
                return Err(err(format!("expected {m} values, found {}", vals.len())));
            }
            data.extend(vals);
            rows += 1;
        }
        if rows != m {
            return Err(Error::Shape(format!("{source}: {m} identifiers but {rows} rows")));
        }
        let matrix = DMatrix::from_row_slice(m, m, &data);
        let normalized = (0..m).all(|i| (matrix[(i, i)] - 1.0).abs() <= 1e-12);
        Self::new(matrix, ids, normalized)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }
}

/// `K_ij / √(K_ii K_jj)`. Fails on a non-positive diagonal entry, naming
/// the offending item.
pub fn normalize_kernel(k: &GramMatrix) -> Result<GramMatrix> {
    let m = k.len();
    let diag: Vec<f64> = (0..m).map(|i| k.matrix[(i, i)]).collect();
    if let Some(i) = diag.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::ZeroSelfKernel(k.ids[i].clone()));
    }
    let mut out = DMatrix::from_fn(m, m, |i, j| k.matrix[(i, j)] / (diag[i] * diag[j]).sqrt());
    for i in 0..m {
        out[(i, i)] = 1.0;
        for j in 0..i {
            out[(i, j)] = out[(j, i)];
        }
    }
    Ok(GramMatrix {
        matrix: out,
        ids: k.ids.clone(),
        normalized: true,
    })
}

/// Symmetric matrix from a pairwise function evaluated on the upper
/// triangle in parallel.
pub fn pairwise_matrix<F>(m: usize, f: F) -> DMatrix<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs.par_iter().map(|&(i, j)| f(i, j)).collect();
    let mut out = DMatrix::zeros(m, m);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        out[(i, j)] = v;
        out[(j, i)] = v;
    }
    out
}

/// Gram matrix of the diagram kernel, optionally normalized. Identifiers
/// default to positions.
pub fn gram_matrix(diagrams: &[Diagram3D], p: KernelParams, normalized: bool) -> Result<GramMatrix> {
    let ids = (0..diagrams.len()).map(|i| i.to_string()).collect();
    gram_matrix_with_ids(diagrams, ids, p, normalized)
}

pub fn gram_matrix_with_ids(
    diagrams: &[Diagram3D],
    ids: Vec<String>,
    p: KernelParams,
    normalized: bool,
) -> Result<GramMatrix> {
    let sl: Vec<Vec<Slice>> = diagrams.par_iter().map(slices).collect();
    let raw = GramMatrix::new(
        pairwise_matrix(sl.len(), |i, j| kernel_slices(&sl[i], &sl[j], p)),
        ids,
        false,
    )?;
    if normalized {
        normalize_kernel(&raw)
    } else {
        Ok(raw)
    }
}

/// Kernel values between `rows` and `cols`, as a `rows × cols` matrix.
pub fn cross_kernel(rows: &[Diagram3D], cols: &[Diagram3D], p: KernelParams) -> DMatrix<f64> {
    let sr: Vec<Vec<Slice>> = rows.par_iter().map(slices).collect();
    let sc: Vec<Vec<Slice>> = cols.par_iter().map(slices).collect();
    let vals: Vec<f64> = (0..sr.len() * sc.len())
        .into_par_iter()
        .map(|k| kernel_slices(&sr[k / sc.len()], &sc[k % sc.len()], p))
        .collect();
    DMatrix::from_row_slice(sr.len(), sc.len(), &vals)
}

/// Convex combination of Gram matrices over the same items.
pub fn combine_grams(grams: &[GramMatrix], weights: &[f64]) -> Result<GramMatrix> {
    let first = grams
        .first()
        .ok_or_else(|| Error::Empty("no Gram matrices to combine".into()))?;
    if grams.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} Gram matrices but {} weights",
            grams.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("weights", "must be nonnegative and sum to 1"));
    }
    if let Some(g) = grams.iter().find(|g| g.len() != first.len()) {
        return Err(Error::Shape(format!(
            "Gram matrices of sizes {} and {}",
            first.len(),
            g.len()
        )));
    }
    let mut out = DMatrix::zeros(first.len(), first.len());
    for (g, &w) in grams.iter().zip(weights) {
        if w != 0.0 {
            out += &g.matrix * w;
        }
    }
    Ok(GramMatrix {
        matrix: out,
        ids: first.ids.clone(),
        normalized: grams.iter().all(|g| g.normalized),
    })
}
