//! Pipeline configuration and the scaled-down experiment presets.
//!
//! Every preset has a desk-scale default (`desk()`) and an approximation of
//! the published protocol (`full()`). Runs are deterministic given the
//! settings: all randomness flows from `seed` through [`realization_seed`].
//!
//! [`realization_seed`]: crate::generators::realization_seed

mod config;
mod presets;
mod report;

pub use config::{PipelineConfig, TauGrid};
pub use presets::{
    BaTauMax, BaTauMaxReport, Family, GnTransition, GnTransitionReport, ModelId, ModelIdReport, Preset,
    SpectralRow,
};
pub use report::ReportDir;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::kernel::{bandwidth_heuristic, gram_matrix, GramMatrix, KernelParams};
use crate::persistence::{scale_variant_diagram, Diagram3D};

/// 3D diagrams of one hole dimension, one per graph.
pub fn diagrams_for(graphs: &[WeightedGraph], tau_grid: &[f64], dim: usize) -> Result<Vec<Diagram3D>> {
    graphs
        .par_iter()
        .map(|g| scale_variant_diagram(&g.laplacian(), tau_grid, dim))
        .collect()
}

/// Gram matrix with explicit parameters, or with the bandwidth heuristic when
/// `params` is `None`. Returns the parameters used.
pub fn gram_for(
    diagrams: &[Diagram3D],
    params: Option<KernelParams>,
    normalized: bool,
) -> Result<(GramMatrix, KernelParams)> {
    let p = match params {
        Some(p) => p,
        None => bandwidth_heuristic(diagrams)?,
    };
    Ok((gram_matrix(diagrams, p, normalized)?, p))
}
