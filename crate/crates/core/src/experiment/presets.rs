use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{diagrams_for, gram_for, ReportDir, TauGrid};
use crate::baselines::measure_gram;
use crate::diffusion::{separation_eigenvalue, spectral_decompose, suggest_tau_max};
use crate::error::{Error, Result};
use crate::generators::{configuration_model, generate, realization_seed, GeneratorSpec, Model};
use crate::graph::WeightedGraph;
use crate::kernel::GramMatrix;
use crate::learn::{accuracy, confusion_matrix, fit_predict, kfdr_series, select_c, train_test_split, CvReport, KfdrSeries};

/// The three experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    GnTransition,
    ModelId,
    BaTauMax,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::GnTransition => "gn-transition",
            Preset::ModelId => "model-id",
            Preset::BaTauMax => "ba-taumax",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gn-transition" => Ok(Preset::GnTransition),
            "model-id" => Ok(Preset::ModelId),
            "ba-taumax" => Ok(Preset::BaTauMax),
            _ => Err(Error::param(
                "preset",
                format!("unknown preset `{s}` (expected gn-transition, model-id or ba-taumax)"),
            )),
        }
    }
}

fn positive(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::param(name, "must be at least 1"));
    }
    Ok(())
}

fn write_config<T: Serialize>(out: Option<&ReportDir>, settings: &T) -> Result<()> {
    if let Some(dir) = out {
        let text = toml::to_string(settings).map_err(|e| Error::param("settings", e.to_string()))?;
        dir.write("config.toml", &text)?;
    }
    Ok(())
}

/// Detection of the community transition of the Girvan–Newman benchmark: a
/// sweep over `r = 1/steps, 2/steps, ..., 1`, KFDR over the ordered Gram
/// matrix, averaged over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnTransition {
    pub realizations: usize,
    pub steps: usize,
    pub n: usize,
    pub tau: TauGrid,
    pub dim: usize,
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GnTransitionReport {
    pub r: Vec<f64>,
    /// κ averaged over realizations.
    pub kappa: KfdrSeries,
    pub per_realization: Vec<KfdrSeries>,
    /// Bandwidth chosen for each realization.
    pub sigmas: Vec<f64>,
    /// The detected transition `r*`.
    pub r_star: f64,
}

impl GnTransition {
    pub fn desk() -> Self {
        Self {
            realizations: 3,
            steps: 100,
            n: 128,
            tau: TauGrid::unit(100),
            dim: 1,
            eta: 0.1,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            realizations: 10,
            ..Self::desk()
        }
    }

    pub fn r_values(&self) -> Vec<f64> {
        (1..=self.steps).map(|i| i as f64 / self.steps as f64).collect()
    }

    pub fn validate(&self) -> Result<Vec<f64>> {
        positive("realizations", self.realizations)?;
        if self.steps < 2 {
            return Err(Error::param("steps", "the sweep needs at least two values of r"));
        }
        GeneratorSpec::new(Model::GirvanNewman { r: 1.0, p_in: None }, self.n, 0).validate()?;
        if !(self.eta > 0.0) {
            return Err(Error::param("eta", format!("{} must be positive", self.eta)));
        }
        self.tau.validate()
    }

    pub fn graphs(&self, realization: usize) -> Result<Vec<WeightedGraph>> {
        let base = realization_seed(self.seed, realization as u64);
        self.r_values()
            .par_iter()
            .enumerate()
            .map(|(i, &r)| {
                let spec = GeneratorSpec::new(Model::GirvanNewman { r, p_in: None }, self.n, realization_seed(base, i as u64));
                generate(&spec)
            })
            .collect()
    }

    /// Writes `kappa.csv` (`s,r,kappa`, averaged), `kappa_realizations.csv`
    /// and `summary.csv` when `out` is given.
    pub fn run(&self, out: Option<&ReportDir>) -> Result<GnTransitionReport> {
        let grid = self.validate()?;
        write_config(out, self)?;
        let mut per_realization = Vec::with_capacity(self.realizations);
        let mut sigmas = Vec::with_capacity(self.realizations);
        for k in 0..self.realizations {
            let graphs = self.graphs(k)?;
            let diagrams = diagrams_for(&graphs, &grid, self.dim)?;
            let (gram, p) = gram_for(&diagrams, None, true)?;
            sigmas.push(p.sigma());
            per_realization.push(kfdr_series(&gram, self.eta)?);
        }
        let kappa = KfdrSeries::average(&per_realization)?;
        let r = self.r_values();
        let r_star = r[kappa.argmax - 1];
        let report = GnTransitionReport {
            r,
            kappa,
            per_realization,
            sigmas,
            r_star,
        };
        if let Some(dir) = out {
            let mut csv = String::from("s,r,kappa\n");
            for &(s, k) in &report.kappa.values {
                let _ = writeln!(csv, "{s},{:?},{k:?}", report.r[s - 1]);
            }
            dir.write("kappa.csv", &csv)?;
            let mut csv = String::from("realization,sigma,s,r,kappa\n");
            for (i, series) in report.per_realization.iter().enumerate() {
                for &(s, k) in &series.values {
                    let _ = writeln!(csv, "{i},{:?},{s},{:?},{k:?}", report.sigmas[i], report.r[s - 1]);
                }
            }
            dir.write("kappa_realizations.csv", &csv)?;
            let summary = format!("argmax_s,r_star,eta\n{},{:?},{:?}\n", report.kappa.argmax, report.r_star, self.eta);
            dir.write("summary.csv", &summary)?;
        }
        Ok(report)
    }
}

/// Generative model family for model identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gn,
    Ws,
}

impl Family {
    fn tag(self) -> &'static str {
        match self {
            Family::Gn => "GN",
            Family::Ws => "WS",
        }
    }
}

/// Identification of the generating model: networks of every family and
/// their configuration networks are classes; 10 networks per parameter value
/// are split into train and test halves for each random split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelId {
    pub families: Vec<Family>,
    pub gn_r: Vec<f64>,
    pub ws_beta: Vec<f64>,
    pub ws_k: usize,
    pub n: usize,
    /// Adds one configuration-network class per family.
    pub include_configuration: bool,
    pub networks_per_value: usize,
    pub train_per_value: usize,
    pub splits: usize,
    pub tau: TauGrid,
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ModelIdReport {
    pub classes: Vec<String>,
    pub accuracy: CvReport,
    /// Mean row-normalized confusion matrix, rows true class, columns
    /// predicted class.
    pub confusion: DMatrix<f64>,
    /// Scale-variant and common-measures accuracy on the configuration
    /// classes alone, when there are at least two of them.
    pub configuration: Option<(CvReport, CvReport)>,
}

struct Item {
    class: usize,
    group: usize,
    graph: WeightedGraph,
}

impl ModelId {
    pub fn desk() -> Self {
        Self {
            families: vec![Family::Gn, Family::Ws],
            gn_r: vec![0.01, 0.5, 1.0],
            ws_beta: vec![0.0, 0.5, 1.0],
            ws_k: 8,
            n: 128,
            include_configuration: true,
            networks_per_value: 10,
            train_per_value: 5,
            splits: 20,
            tau: TauGrid::unit(100),
            dim: 1,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            gn_r: (1..=10).map(|i| i as f64 / 10.0).collect(),
            ws_beta: (1..=10).map(|i| i as f64 / 10.0).collect(),
            splits: 100,
            ..Self::desk()
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.families.iter().map(|f| format!("{}-org", f.tag())).collect();
        if self.include_configuration {
            names.extend(self.families.iter().map(|f| format!("{}-conf", f.tag())));
        }
        names
    }

    fn values(&self, f: Family) -> &[f64] {
        match f {
            Family::Gn => &self.gn_r,
            Family::Ws => &self.ws_beta,
        }
    }

    pub fn validate(&self) -> Result<Vec<f64>> {
        let mut seen = self.families.clone();
        seen.sort_by_key(|f| *f as u8);
        seen.dedup();
        if seen.len() != self.families.len() {
            return Err(Error::param("families", "duplicate model family"));
        }
        if self.class_names().len() < 2 {
            return Err(Error::param(
                "families",
                format!("degenerate configuration: {} class(es), classification needs at least 2", self.class_names().len()),
            ));
        }
        for &f in &self.families {
            if self.values(f).is_empty() {
                return Err(Error::param("families", format!("no parameter values for {}", f.tag())));
            }
            for &v in self.values(f) {
                self.spec(f, v, 0).validate()?;
            }
        }
        positive("splits", self.splits)?;
        positive("train_per_value", self.train_per_value)?;
        if self.train_per_value >= self.networks_per_value {
            return Err(Error::param("train_per_value", "must leave at least one test network per value"));
        }
        self.tau.validate()
    }

    fn spec(&self, f: Family, v: f64, seed: u64) -> GeneratorSpec {
        let model = match f {
            Family::Gn => Model::GirvanNewman { r: v, p_in: None },
            Family::Ws => Model::WattsStrogatz { k: self.ws_k, beta: v },
        };
        GeneratorSpec::new(model, self.n, seed)
    }

    fn items(&self) -> Result<Vec<Item>> {
        let nf = self.families.len();
        let mut jobs = Vec::new();
        for (fi, &f) in self.families.iter().enumerate() {
            for (vi, &v) in self.values(f).iter().enumerate() {
                for rep in 0..self.networks_per_value {
                    jobs.push((fi, f, vi, v, rep));
                }
            }
        }
        let per_job: Vec<Vec<Item>> = jobs
            .par_iter()
            .map(|&(fi, f, vi, v, rep)| {
                let key = ((fi * 1000 + vi) * 1000 + rep) as u64;
                let seed = realization_seed(self.seed, key);
                let g = generate(&self.spec(f, v, seed))?;
                let group = |class: usize| class * 1000 + vi;
                let mut out = Vec::with_capacity(2);
                if self.include_configuration {
                    let c = configuration_model(&g, realization_seed(seed, 1))?;
                    out.push(Item { class: nf + fi, group: group(nf + fi), graph: c });
                }
                out.insert(0, Item { class: fi, group: group(fi), graph: g });
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(per_job.into_iter().flatten().collect())
    }

    /// Writes `confusion.csv`, `accuracy.csv` (one row per split) and
    /// `summary.csv` when `out` is given.
    pub fn run(&self, out: Option<&ReportDir>) -> Result<ModelIdReport> {
        let grid = self.validate()?;
        write_config(out, self)?;
        let classes = self.class_names();
        let items = self.items()?;
        let graphs: Vec<WeightedGraph> = items.iter().map(|i| i.graph.clone()).collect();
        let labels: Vec<usize> = items.iter().map(|i| i.class).collect();
        let groups: Vec<usize> = items.iter().map(|i| i.group).collect();
        let diagrams = diagrams_for(&graphs, &grid, self.dim)?;
        let (gram, _) = gram_for(&diagrams, None, true)?;

        let all: Vec<usize> = (0..items.len()).collect();
        let (accuracy, confusion) = self.evaluate(&gram, &labels, &groups, &all, classes.len())?;

        let nf = self.families.len();
        let configuration = if self.include_configuration && nf >= 2 {
            let conf: Vec<usize> = all.iter().copied().filter(|&i| labels[i] >= nf).collect();
            let sub_graphs: Vec<WeightedGraph> = conf.iter().map(|&i| graphs[i].clone()).collect();
            let sub_labels: Vec<usize> = conf.iter().map(|&i| labels[i] - nf).collect();
            let sub_groups: Vec<usize> = conf.iter().map(|&i| groups[i]).collect();
            let local: Vec<usize> = (0..conf.len()).collect();
            let sv = gram.submatrix(&conf);
            let cm = measure_gram(&sub_graphs, self.seed)?;
            let (a, _) = self.evaluate(&sv, &sub_labels, &sub_groups, &local, nf)?;
            let (b, _) = self.evaluate(&cm, &sub_labels, &sub_groups, &local, nf)?;
            Some((a, b))
        } else {
            None
        };

        let report = ModelIdReport {
            classes,
            accuracy,
            confusion,
            configuration,
        };
        if let Some(dir) = out {
            let mut csv = format!("true\\predicted,{}\n", report.classes.join(","));
            for (t, name) in report.classes.iter().enumerate() {
                let row: Vec<String> = report.confusion.row(t).iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(csv, "{name},{}", row.join(","));
            }
            dir.write("confusion.csv", &csv)?;
            let mut csv = String::from("split,accuracy");
            if report.configuration.is_some() {
                csv.push_str(",conf_scale_variant,conf_common_measures");
            }
            csv.push('\n');
            for (s, a) in report.accuracy.accuracies.iter().enumerate() {
                let _ = write!(csv, "{s},{a:?}");
                if let Some((x, y)) = &report.configuration {
                    let _ = write!(csv, ",{:?},{:?}", x.accuracies[s], y.accuracies[s]);
                }
                csv.push('\n');
            }
            dir.write("accuracy.csv", &csv)?;
            let mut summary = String::from("method,subset,mean,sd\n");
            let _ = writeln!(summary, "scale_variant,all,{:?},{:?}", report.accuracy.mean, report.accuracy.sd);
            if let Some((x, y)) = &report.configuration {
                let _ = writeln!(summary, "scale_variant,configuration,{:?},{:?}", x.mean, x.sd);
                let _ = writeln!(summary, "common_measures,configuration,{:?},{:?}", y.mean, y.sd);
            }
            dir.write("summary.csv", &summary)?;
        }
        Ok(report)
    }

    /// Test accuracy and mean confusion matrix over random splits of
    /// `items`, with `C` chosen on each training set.
    fn evaluate(
        &self,
        k: &GramMatrix,
        labels: &[usize],
        groups: &[usize],
        items: &[usize],
        classes: usize,
    ) -> Result<(CvReport, DMatrix<f64>)> {
        let item_groups: Vec<usize> = items.iter().map(|&i| groups[i]).collect();
        let runs: Vec<(f64, DMatrix<f64>)> = (0..self.splits)
            .into_par_iter()
            .map(|s| {
                let split_seed = realization_seed(self.seed ^ 0x5eed, s as u64);
                let (tr, te) = train_test_split(&item_groups, self.train_per_value, split_seed);
                let train: Vec<usize> = tr.iter().map(|&i| items[i]).collect();
                let test: Vec<usize> = te.iter().map(|&i| items[i]).collect();
                let c = select_c(k, labels, &train, split_seed)?;
                let pred = fit_predict(k, labels, &train, &test, c)?;
                let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
                Ok((accuracy(&pred, &truth), confusion_matrix(&pred, &truth, classes)))
            })
            .collect::<Result<_>>()?;
        let mut confusion = DMatrix::zeros(classes, classes);
        for (_, m) in &runs {
            confusion += m;
        }
        confusion /= runs.len() as f64;
        let acc = CvReport::from_accuracies(runs.into_iter().map(|r| r.0).collect());
        Ok((acc, confusion))
    }
}

/// Barabási–Albert networks against their configuration networks, classified
/// with diagrams over `1..=tau_max` for a range of `tau_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaTauMax {
    pub m0: Vec<usize>,
    pub networks_per_m0: usize,
    pub train_per_m0: usize,
    pub tau_max: Vec<usize>,
    pub splits: usize,
    pub n: usize,
    pub gap_factor: f64,
    pub seed: u64,
}

/// Spectral summary of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRow {
    pub m0: usize,
    pub configuration: bool,
    pub network: usize,
    pub lambda_sep: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone)]
pub struct BaTauMaxReport {
    /// `(tau_max, accuracy over splits)` in increasing `tau_max`.
    pub accuracy: Vec<(usize, CvReport)>,
    pub spectral: Vec<SpectralRow>,
}

impl BaTauMaxReport {
    pub fn accuracy_at(&self, tau_max: usize) -> Option<f64> {
        self.accuracy.iter().find(|a| a.0 == tau_max).map(|a| a.1.mean)
    }
}

impl BaTauMax {
    pub fn desk() -> Self {
        Self {
            m0: (1..=10).collect(),
            networks_per_m0: 6,
            train_per_m0: 3,
            tau_max: vec![5, 10, 20, 35, 50, 65, 80, 100],
            splits: 20,
            n: 128,
            gap_factor: 10.0,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            m0: (1..=50).collect(),
            networks_per_m0: 10,
            train_per_m0: 5,
            tau_max: (1..=20).map(|k| 5 * k).collect(),
            splits: 100,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0.is_empty() {
            return Err(Error::param("m0", "no value of m0"));
        }
        for &m in &self.m0 {
            GeneratorSpec::new(Model::BarabasiAlbert { m0: m }, self.n, 0).validate()?;
        }
        if self.tau_max.is_empty() || self.tau_max.windows(2).any(|w| w[1] <= w[0]) || self.tau_max[0] == 0 {
            return Err(Error::param("tau_max", "must be a nonempty increasing list of positive integers"));
        }
        positive("splits", self.splits)?;
        positive("train_per_m0", self.train_per_m0)?;
        if self.train_per_m0 >= self.networks_per_m0 {
            return Err(Error::param("train_per_m0", "must leave at least one test network per m0"));
        }
        if !(self.gap_factor > 0.0) {
            return Err(Error::param("gap_factor", "must be positive"));
        }
        Ok(())
    }

    /// Writes `accuracy_vs_taumax.csv` (`tau_max,mean,sd`) and
    /// `spectral.csv` when `out` is given.
    pub fn run(&self, out: Option<&ReportDir>) -> Result<BaTauMaxReport> {
        self.validate()?;
        write_config(out, self)?;
        let mut jobs = Vec::new();
        for (mi, &m0) in self.m0.iter().enumerate() {
            for rep in 0..self.networks_per_m0 {
                jobs.push((mi, m0, rep));
            }
        }
        let pairs: Vec<[(WeightedGraph, SpectralRow); 2]> = jobs
            .par_iter()
            .map(|&(mi, m0, rep)| {
                let seed = realization_seed(self.seed, (mi * 1000 + rep) as u64);
                let g = generate(&GeneratorSpec::new(Model::BarabasiAlbert { m0 }, self.n, seed))?;
                let c = configuration_model(&g, realization_seed(seed, 1))?;
                let row = |h: &WeightedGraph, configuration: bool| -> Result<SpectralRow> {
                    let spec = spectral_decompose(&h.laplacian())?;
                    Ok(SpectralRow {
                        m0,
                        configuration,
                        network: rep,
                        lambda_sep: separation_eigenvalue(&spec)?,
                        tau_max: suggest_tau_max(&spec, self.gap_factor)?,
                    })
                };
                let (rg, rc) = (row(&g, false)?, row(&c, true)?);
                Ok([(g, rg), (c, rc)])
            })
            .collect::<Result<_>>()?;
        let mut graphs = Vec::new();
        let mut spectral = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for pair in pairs {
            for (g, row) in pair {
                let class = row.configuration as usize;
                labels.push(class);
                groups.push(self.m0.iter().position(|&m| m == row.m0).unwrap() * 2 + class);
                graphs.push(g);
                spectral.push(row);
            }
        }

        let top = *self.tau_max.last().unwrap();
        let grid = TauGrid::unit(top).values();
        let diagrams = diagrams_for(&graphs, &grid, 1)?;
        let mut accuracy = Vec::with_capacity(self.tau_max.len());
        for &t in &self.tau_max {
            let cut: Vec<_> = diagrams.iter().map(|d| d.truncated(t as f64)).collect();
            let (gram, _) = gram_for(&cut, None, true)?;
            let accs: Vec<f64> = (0..self.splits)
                .into_par_iter()
                .map(|s| {
                    let split_seed = realization_seed(self.seed ^ 0x5eed, s as u64);
                    let (train, test) = train_test_split(&groups, self.train_per_m0, split_seed);
                    let c = select_c(&gram, &labels, &train, split_seed)?;
                    let pred = fit_predict(&gram, &labels, &train, &test, c)?;
                    let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
                    Ok(crate::learn::accuracy(&pred, &truth))
                })
                .collect::<Result<_>>()?;
            accuracy.push((t, CvReport::from_accuracies(accs)));
        }

        let report = BaTauMaxReport { accuracy, spectral };
        if let Some(dir) = out {
            let mut csv = String::from("tau_max,mean,sd\n");
            for (t, r) in &report.accuracy {
                let _ = writeln!(csv, "{t},{:?},{:?}", r.mean, r.sd);
            }
            dir.write("accuracy_vs_taumax.csv", &csv)?;
            let mut csv = String::from("m0,class,network,lambda_sep,tau_max\n");
            for r in &report.spectral {
                let class = if r.configuration { "conf" } else { "ba" };
                let _ = writeln!(csv, "{},{class},{},{:?},{:?}", r.m0, r.network, r.lambda_sep, r.tau_max);
            }
            dir.write("spectral.csv", &csv)?;
        }
        Ok(report)
    }
}
