//! Soft-margin kernel SVM on a precomputed Gram matrix, solved by sequential
//! minimal optimization with second-order working-set selection.
//! Multiclass problems are decomposed one-vs-one with majority voting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::GramMatrix;

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOL: f64 = 1e-3;

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 10_000_000;

/// A two-class machine. Decision value for an item `x` is
/// `Σ coef_i K(train_i, x) - rho`; positive means `positive`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    /// Class indices `(positive, negative)`.
    pub classes: (usize, usize),
    /// Training positions (into the full training set) with nonzero
    /// coefficient.
    pub support: Vec<usize>,
    /// `α_i y_i` for each support position.
    pub coef: Vec<f64>,
    pub rho: f64,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
}

impl BinarySvm {
    /// Decision value from kernel values against the full training set.
    pub fn decision(&self, k_row: impl Fn(usize) -> f64) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(&i, &c)| c * k_row(i))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    /// Distinct class labels, in increasing order.
    pub classes: Vec<usize>,
    pub machines: Vec<BinarySvm>,
    /// Identifiers of the training items, in Gram order.
    pub train_ids: Vec<String>,
    pub c: f64,
}

/// Dual solution for labels `y ∈ {±1}` on the Gram submatrix `k`.
fn smo(k: &DMatrix<f64>, y: &[f64], c: f64) -> (Vec<f64>, f64, f64) {
    let m = y.len();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut gap = 0.0;

    for _ in 0..MAX_ITER {
        // i maximizes -y G over the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..m {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..m {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                gmax2 = gmax2.max(y[t] * grad[t]);
                let diff = gmax + y[t] * grad[t];
                if diff > 0.0 {
                    let quad = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                    let obj = -diff * diff / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if gap < KKT_TOL {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[(i, i)] + k[(j, j)] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[(i, i)] + k[(j, j)] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Offset: mean over free variables, else midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..m {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    (alpha, rho, gap)
}

/// Trains a one-vs-one SVM on Gram matrix `k` with class `labels`.
pub fn svm_train(k: &GramMatrix, labels: &[usize], c: f64) -> Result<TrainedClassifier> {
    if labels.len() != k.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} items",
            labels.len(),
            k.len()
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("must be positive, got {c}")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::param("labels", "training set has a single class"));
    }
    let mut machines = Vec::new();
    for (a, &ca) in classes.iter().enumerate() {
        for &cb in &classes[a + 1..] {
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == ca || labels[i] == cb)
                .collect();
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == ca { 1.0 } else { -1.0 }).collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |p, q| k.matrix[(idx[p], idx[q])]);
            let (alpha, rho, gap) = smo(&sub, &y, c);
            let (support, coef) = idx
                .iter()
                .zip(alpha.iter().zip(&y))
                .filter(|(_, (a, _))| **a > 0.0)
                .map(|(&i, (a, yy))| (i, a * yy))
                .unzip();
            machines.push(BinarySvm {
                classes: (ca, cb),
                support,
                coef,
                rho,
                kkt_gap: gap,
            });
        }
    }
    Ok(TrainedClassifier {
        classes,
        machines,
        train_ids: k.ids.clone(),
        c,
    })
}

/// Predicts labels from `k_cross` (test items × training items). Votes tie
/// toward the smaller class label.
pub fn svm_predict(model: &TrainedClassifier, k_cross: &DMatrix<f64>) -> Result<Vec<usize>> {
    if k_cross.ncols() != model.train_ids.len() {
        return Err(Error::Shape(format!(
            "cross kernel has {} columns, model was trained on {} items",
            k_cross.ncols(),
            model.train_ids.len()
        )));
    }
    Ok((0..k_cross.nrows())
        .map(|r| {
            let mut votes = vec![0usize; model.classes.len()];
            for mach in &model.machines {
                let winner = if mach.decision(|i| k_cross[(r, i)]) > 0.0 {
                    mach.classes.0
                } else {
                    mach.classes.1
                };
                let pos = model.classes.binary_search(&winner).expect("known class");
                votes[pos] += 1;
            }
            let best = votes
                .iter()
                .enumerate()
                .fold(0, |b, (i, &v)| if v > votes[b] { i } else { b });
            model.classes[best]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(x: &[f64]) -> GramMatrix {
        GramMatrix::from_matrix(DMatrix::from_fn(x.len(), x.len(), |i, j| x[i] * x[j]), false).unwrap()
    }

    #[test]
    fn two_points_are_separated() {
        let k = linear(&[-1.0, 1.0]);
        let model = svm_train(&k, &[0, 1], 1.0).unwrap();
        assert_eq!(svm_predict(&model, &k.matrix).unwrap(), vec![0, 1]);
        assert!(model.machines[0].kkt_gap < KKT_TOL);
    }

    #[test]
    fn three_classes_on_a_line() {
        // Features (x, 1) so that a bias-free kernel still separates.
        let x: [f64; 9] = [-3.0, -2.5, -2.0, 0.0, 0.2, -0.2, 2.0, 2.5, 3.0];
        let labels = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let rbf = DMatrix::from_fn(9, 9, |i, j| (-(x[i] - x[j]) * (x[i] - x[j])).exp());
        let k = GramMatrix::from_matrix(rbf, true).unwrap();
        let model = svm_train(&k, &labels, 10.0).unwrap();
        assert_eq!(svm_predict(&model, &k.matrix).unwrap(), labels.to_vec());
        assert!(model.machines.iter().all(|m| m.kkt_gap < KKT_TOL));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(svm_train(&linear(&[1.0, 2.0]), &[3, 3], 1.0).is_err());
    }
}
