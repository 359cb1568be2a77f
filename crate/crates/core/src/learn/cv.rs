use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::svm::{svm_predict, svm_train};
use crate::error::{Error, Result};
use crate::generators::realization_seed;
use crate::kernel::{combine_grams, GramMatrix};

/// Candidate SVM regularization constants.
pub const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

const INNER_FOLDS: usize = 3;

/// Class names and the class index of every item.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub names: Vec<String>,
    pub labels: Vec<usize>,
}

impl LabelSet {
    /// Class indices in order of first appearance.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut classes = Vec::new();
        let labels = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                *index.entry(n.to_string()).or_insert_with(|| {
                    classes.push(n.to_string());
                    classes.len() - 1
                })
            })
            .collect();
        Self {
            names: classes,
            labels,
        }
    }

    /// Parses `id,label` rows (optional header `id,label`) and orders the
    /// labels like `ids`.
    pub fn from_csv(text: &str, source: &str, ids: &[String]) -> Result<Self> {
        let mut by_id = HashMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (k == 0 && line == "id,label") {
                continue;
            }
            let (id, label) = line.split_once(',').ok_or_else(|| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                msg: "expected `id,label`".into(),
            })?;
            by_id.insert(id.trim().to_string(), label.trim().to_string());
        }
        let names: Vec<&String> = ids
            .iter()
            .map(|id| {
                by_id
                    .get(id)
                    .ok_or_else(|| Error::param("labels", format!("{source}: no label for item `{id}`")))
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_names(&names))
    }

    pub fn class_count(&self) -> usize {
        self.names.len()
    }
}

/// Accuracy, mean and standard deviation over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub mean: f64,
    pub sd: f64,
    /// Pooled accuracy of each repeat.
    pub accuracies: Vec<f64>,
}

impl CvReport {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Self {
        let n = accuracies.len().max(1) as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        Self {
            mean,
            sd: var.sqrt(),
            accuracies,
        }
    }
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Row-normalized confusion matrix: entry `(t, p)` is the fraction of items
/// of class `t` predicted as `p`.
pub fn confusion_matrix(predicted: &[usize], truth: &[usize], classes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(classes, classes);
    for (&p, &t) in predicted.iter().zip(truth) {
        m[(t, p)] += 1.0;
    }
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    m
}

/// Stratified assignment of `labels` (restricted to `items`) to `k` folds:
/// each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[usize], items: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("folds", format!("need at least 2, got {k}")));
    }
    let mut by_class: Vec<(usize, Vec<usize>)> = Vec::new();
    for &i in items {
        match by_class.iter_mut().find(|(c, _)| *c == labels[i]) {
            Some((_, v)) => v.push(i),
            None => by_class.push((labels[i], vec![i])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    if let Some((c, v)) = by_class.iter().find(|(_, v)| v.len() < k) {
        return Err(Error::param(
            "folds",
            format!("{k} folds exceed the {} items of class {c}", v.len()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, mut v) in by_class {
        v.shuffle(&mut rng);
        for i in v {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Random split taking `per_group` training items from every group of
/// `groups` (e.g. every class and model parameter value); the rest is test.
pub fn train_test_split(groups: &[usize], per_group: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut keys: Vec<usize> = groups.to_vec();
    keys.sort_unstable();
    keys.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for g in keys {
        let mut v: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == g).collect();
        v.shuffle(&mut rng);
        let cut = per_group.min(v.len());
        train.extend_from_slice(&v[..cut]);
        test.extend_from_slice(&v[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn cross_rows(k: &GramMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| k.matrix[(rows[a], cols[b])])
}

/// Trains on `train` with constant `c` and predicts `test`.
pub fn fit_predict(k: &GramMatrix, labels: &[usize], train: &[usize], test: &[usize], c: f64) -> Result<Vec<usize>> {
    let sub = k.submatrix(train);
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let model = svm_train(&sub, &y, c)?;
    svm_predict(&model, &cross_rows(k, test, train))
}

/// Inner cross-validated accuracy of constant `c` on `items`.
fn inner_accuracy(k: &GramMatrix, labels: &[usize], items: &[usize], c: f64, seed: u64) -> Result<f64> {
    let min_class = class_sizes(labels, items).into_iter().min().unwrap_or(0);
    let folds = stratified_folds(labels, items, INNER_FOLDS.min(min_class), seed)?;
    let mut correct = 0usize;
    for f in &folds {
        let train: Vec<usize> = items.iter().copied().filter(|i| f.binary_search(i).is_err()).collect();
        let pred = fit_predict(k, labels, &train, f, c)?;
        correct += pred.iter().zip(f).filter(|(p, &i)| **p == labels[i]).count();
    }
    Ok(correct as f64 / items.len() as f64)
}

fn class_sizes(labels: &[usize], items: &[usize]) -> Vec<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &i in items {
        *counts.entry(labels[i]).or_default() += 1;
    }
    counts.into_values().collect()
}

/// Regularization constant from [`C_GRID`] with best inner 3-fold accuracy on
/// `train` (smallest on ties). Falls back to 1 when a class is too small to
/// split.
pub fn select_c(k: &GramMatrix, labels: &[usize], train: &[usize], seed: u64) -> Result<f64> {
    if class_sizes(labels, train).into_iter().min().unwrap_or(0) < 2 {
        return Ok(1.0);
    }
    let mut best = (f64::NEG_INFINITY, 1.0);
    for c in C_GRID {
        let acc = inner_accuracy(k, labels, train, c, seed)?;
        if acc > best.0 {
            best = (acc, c);
        }
    }
    Ok(best.1)
}

/// Weight `w` of the first Gram matrix in `w K0 + (1 - w) K1`, chosen from
/// `{0, 0.1, ..., 1}` by inner cross-validated accuracy on `train`; ties go
/// to the weight closest to 0.5.
pub fn select_combination(grams: &[GramMatrix; 2], labels: &[usize], train: &[usize], seed: u64) -> Result<f64> {
    if class_sizes(labels, train).into_iter().min().unwrap_or(0) < 2 {
        return Ok(0.5);
    }
    let mut best: (f64, f64) = (f64::NEG_INFINITY, 0.5);
    for step in 0..=10 {
        let w = step as f64 / 10.0;
        let k = combine_grams(grams, &[w, 1.0 - w])?;
        let c = select_c(&k, labels, train, seed)?;
        let acc = inner_accuracy(&k, labels, train, c, seed)?;
        let closer = (w - 0.5).abs() < (best.1 - 0.5).abs();
        if acc > best.0 || (acc == best.0 && closer) {
            best = (acc, w);
        }
    }
    Ok(best.1)
}

/// Repeated stratified k-fold cross-validation with the regularization
/// constant selected on each training fold.
pub fn cross_validate(k: &GramMatrix, labels: &[usize], folds: usize, repeats: usize, seed: u64) -> Result<CvReport> {
    if labels.len() != k.len() {
        return Err(Error::Shape(format!("{} labels for {} items", labels.len(), k.len())));
    }
    if repeats == 0 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    let items: Vec<usize> = (0..k.len()).collect();
    let accuracies = (0..repeats)
        .map(|r| {
            let s = realization_seed(seed, r as u64);
            let parts = stratified_folds(labels, &items, folds, s)?;
            let correct: Vec<usize> = parts
                .par_iter()
                .map(|test| -> Result<usize> {
                    let train: Vec<usize> = items.iter().copied().filter(|i| test.binary_search(i).is_err()).collect();
                    let c = select_c(k, labels, &train, s)?;
                    let pred = fit_predict(k, labels, &train, test, c)?;
                    Ok(pred.iter().zip(test).filter(|(p, &i)| **p == labels[i]).count())
                })
                .collect::<Result<_>>()?;
            Ok(correct.iter().sum::<usize>() as f64 / items.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvReport::from_accuracies(accuracies))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(m: usize) -> (GramMatrix, Vec<usize>) {
        let labels: Vec<usize> = (0..m).map(|i| i % 2).collect();
        let k = DMatrix::from_fn(m, m, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 });
        (GramMatrix::from_matrix(k, true).unwrap(), labels)
    }

    #[test]
    fn separable_blocks_are_perfect() {
        let (k, labels) = blocks(20);
        let r = cross_validate(&k, &labels, 5, 3, 1).unwrap();
        assert_eq!(r.accuracies, vec![1.0; 3]);
        assert_eq!(r.sd, 0.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let (k, labels) = blocks(12);
        let labels: Vec<usize> = labels.iter().enumerate().map(|(i, &l)| if i % 5 == 0 { 1 - l } else { l }).collect::<Vec<usize>>();
        assert_eq!(
            cross_validate(&k, &labels, 3, 2, 9).unwrap(),
            cross_validate(&k, &labels, 3, 2, 9).unwrap()
        );
    }

    #[test]
    fn folds_are_stratified_partitions() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let items: Vec<usize> = (0..30).collect();
        let folds = stratified_folds(&labels, &items, 5, 4).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, items);
        for f in &folds {
            for c in 0..3 {
                assert_eq!(f.iter().filter(|&&i| labels[i] == c).count(), 2);
            }
        }
        assert!(stratified_folds(&labels, &items, 11, 4).is_err());
        assert!(stratified_folds(&labels, &items, 1, 4).is_err());
    }

    #[test]
    fn split_takes_per_group() {
        let groups: Vec<usize> = (0..40).map(|i| i / 10).collect();
        let (train, test) = train_test_split(&groups, 5, 3);
        assert_eq!(train.len(), 20);
        assert_eq!(test.len(), 20);
        for g in 0..4 {
            assert_eq!(train.iter().filter(|&&i| groups[i] == g).count(), 5);
        }
    }

    #[test]
    fn confusion_rows_sum_to_one() {
        let m = confusion_matrix(&[0, 1, 1, 0], &[0, 1, 0, 0], 2);
        assert_eq!(m[(0, 0)], 2.0 / 3.0);
        assert_eq!(m[(1, 1)], 1.0);
    }

    #[test]
    fn label_set_from_csv() {
        let ids = vec!["b".to_string(), "a".to_string()];
        let l = LabelSet::from_csv("id,label\na,x\nb,y\n", "t", &ids).unwrap();
        assert_eq!(l.names, vec!["y", "x"]);
        assert_eq!(l.labels, vec![0, 1]);
        assert!(LabelSet::from_csv("a,x\n", "t", &ids).is_err());
    }
}
