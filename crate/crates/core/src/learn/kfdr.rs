use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::GramMatrix;

/// Kernel Fisher discriminant ratios `κ_{M,s}` for the splits
/// `s = 2..=M`, where items `1..s-1` form the first class and `s..=M` the
/// second (1-based, as in the ordering of the Gram matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct KfdrSeries {
    /// `(s, κ)` pairs in increasing `s`.
    pub values: Vec<(usize, f64)>,
    pub eta: f64,
    /// Smallest `s` attaining the maximum.
    pub argmax: usize,
}

impl KfdrSeries {
    pub fn kappa(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.1)
    }

    /// Pointwise mean of series over the same number of items.
    pub fn average(series: &[KfdrSeries]) -> Result<KfdrSeries> {
        let first = series
            .first()
            .ok_or_else(|| Error::Empty("no series to average".into()))?;
        if series.iter().any(|s| s.values.len() != first.values.len()) {
            return Err(Error::Shape("series of different lengths".into()));
        }
        let values: Vec<(usize, f64)> = first
            .values
            .iter()
            .enumerate()
            .map(|(k, &(s, _))| {
                (s, series.iter().map(|x| x.values[k].1).sum::<f64>() / series.len() as f64)
            })
            .collect();
        Ok(KfdrSeries {
            argmax: argmax(&values),
            values,
            eta: first.eta,
        })
    }

    /// CSV with header `s,kappa`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,kappa\n");
        for (s, k) in &self.values {
            out.push_str(&format!("{s},{k:?}\n"));
        }
        out
    }
}

fn argmax(values: &[(usize, f64)]) -> usize {
    values
        .iter()
        .fold(None::<(usize, f64)>, |best, &(s, k)| match best {
            Some((_, b)) if b >= k => best,
            _ => Some((s, k)),
        })
        .map_or(0, |b| b.0)
}

/// KFDR series of the ordered items of `k`, computed from the Gram matrix
/// alone as `κ = (m1 m2 / M) δᵀ K (N K / M + η I)⁻¹ δ` with block mean
/// coefficients `δ` and block centering matrix `N`. Values are clamped at
/// zero against rounding.
pub fn kfdr_series(k: &GramMatrix, eta: f64) -> Result<KfdrSeries> {
    let m = k.len();
    if m < 2 {
        return Err(Error::param("gram", format!("need at least 2 items, got {m}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    let kk = &k.matrix;
    let mf = m as f64;
    let mut values = Vec::with_capacity(m - 1);
    for s in 2..=m {
        let m1 = s - 1;
        let m2 = m - m1;
        let block = |i: usize| i < m1;
        let delta = DVector::from_fn(m, |i, _| if block(i) { -1.0 / m1 as f64 } else { 1.0 / m2 as f64 });
        // N K: subtract block column means of K from each row of the block.
        let mut col_mean1 = DVector::<f64>::zeros(m);
        let mut col_mean2 = DVector::<f64>::zeros(m);
        for i in 0..m {
            if block(i) {
                col_mean1 += kk.row(i).transpose();
            } else {
                col_mean2 += kk.row(i).transpose();
            }
        }
        col_mean1 /= m1 as f64;
        col_mean2 /= m2 as f64;
        let mut a = DMatrix::from_fn(m, m, |i, j| {
            let mean = if block(i) { col_mean1[j] } else { col_mean2[j] };
            (kk[(i, j)] - mean) / mf
        });
        for i in 0..m {
            a[(i, i)] += eta;
        }
        let x = a
            .lu()
            .solve(&delta)
            .ok_or_else(|| Error::Numerical(format!("singular system at s = {s}")))?;
        let kappa = (m1 * m2) as f64 / mf * delta.dot(&(kk * x));
        values.push((s, kappa.max(0.0)));
    }
    Ok(KfdrSeries {
        argmax: argmax(&values),
        values,
        eta,
    })
}

/// Estimated change point: the split index of largest ratio, smallest on
/// ties.
pub fn detect_changepoint(series: &KfdrSeries) -> usize {
    argmax(&series.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_items_give_zero() {
        let k = GramMatrix::from_matrix(DMatrix::from_element(6, 6, 1.0), true).unwrap();
        let s = kfdr_series(&k, 0.1).unwrap();
        assert!(s.kappa().all(|x| x.abs() < 1e-12));
        assert_eq!(s.values.first().unwrap().0, 2);
        assert_eq!(s.values.last().unwrap().0, 6);
    }

    #[test]
    fn ties_pick_smallest_index() {
        let s = KfdrSeries {
            values: vec![(2, 1.0), (3, 3.0), (4, 3.0)],
            eta: 0.1,
            argmax: 0,
        };
        assert_eq!(detect_changepoint(&s), 3);
        let up = KfdrSeries {
            values: vec![(2, 1.0), (3, 2.0), (4, 3.0)],
            eta: 0.1,
            argmax: 0,
        };
        assert_eq!(detect_changepoint(&up), 4);
    }

    #[test]
    fn step_change_is_found() {
        // Two well separated groups of linear features.
        let x: Vec<f64> = (0..10).map(|i| if i < 6 { 0.0 } else { 1.0 } + 0.01 * i as f64).collect();
        let k = GramMatrix::from_matrix(DMatrix::from_fn(10, 10, |i, j| x[i] * x[j] + 1.0), false).unwrap();
        assert_eq!(kfdr_series(&k, 0.01).unwrap().argmax, 7);
    }

    #[test]
    fn rejects_bad_input() {
        let k = GramMatrix::from_matrix(DMatrix::identity(1, 1), true).unwrap();
        assert!(kfdr_series(&k, 0.1).is_err());
        let k = GramMatrix::from_matrix(DMatrix::identity(3, 3), true).unwrap();
        assert!(kfdr_series(&k, 0.0).is_err());
    }
}
