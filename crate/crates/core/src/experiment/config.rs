use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::persistence::{validate_tau_grid, MAX_DIM};

/// Timescale grid: an arithmetic progression or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauGrid {
    Range { start: f64, step: f64, count: usize },
    List(Vec<f64>),
}

impl TauGrid {
    /// `start, start + step, ...` with `count` entries.
    pub fn range(start: f64, step: f64, count: usize) -> Self {
        TauGrid::Range { start, step, count }
    }

    /// The integer grid `1, 2, ..., tau_max`.
    pub fn unit(tau_max: usize) -> Self {
        Self::range(1.0, 1.0, tau_max)
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            // Multiply rather than accumulate so that integer grids stay exact.
            TauGrid::Range { start, step, count } => (0..*count).map(|k| start + step * k as f64).collect(),
            TauGrid::List(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<Vec<f64>> {
        if let TauGrid::Range { step, .. } = self {
            if !(*step > 0.0) {
                return Err(Error::param("tau.step", format!("{step} must be positive")));
            }
        }
        let v = self.values();
        validate_tau_grid(&v)?;
        Ok(v)
    }
}

impl Default for TauGrid {
    fn default() -> Self {
        Self::unit(100)
    }
}

/// Settings shared by the pipeline commands. Loaded from TOML; command-line
/// flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau: TauGrid,
    /// Hole dimensions to compute, each 0 or 1.
    pub dims: Vec<usize>,
    /// Kernel bandwidth; chosen by the median heuristic when absent.
    pub sigma: Option<f64>,
    /// Diagonal-distance scale of the kernel; defaults to `sigma`.
    pub xi: Option<f64>,
    /// KFDR regularization.
    pub eta: f64,
    /// Whether Gram matrices are normalized to unit diagonal.
    pub normalized: bool,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: TauGrid::default(),
            dims: vec![1],
            sigma: None,
            xi: None,
            eta: 0.1,
            normalized: true,
            seed: 0,
            input: None,
            output: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    /// Checks every field, and that `input` exists, before any long
    /// computation starts. Returns the validated grid.
    pub fn validate(&self) -> Result<Vec<f64>> {
        let grid = self.tau.validate()?;
        if self.dims.is_empty() {
            return Err(Error::param("dims", "no hole dimension selected"));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d > MAX_DIM) {
            return Err(Error::param("dims", format!("dimension {d} exceeds {MAX_DIM}")));
        }
        for (name, v) in [("sigma", self.sigma), ("xi", self.xi)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::param(name, format!("{v} must be positive and finite")));
                }
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", format!("{} must be positive and finite", self.eta)));
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        Ok(grid)
    }

    /// Explicit kernel parameters, if `sigma` is set.
    pub fn kernel_params(&self) -> Result<Option<KernelParams>> {
        self.sigma
            .map(|s| KernelParams::new(s, self.xi.unwrap_or(s)))
            .transpose()
    }
}
