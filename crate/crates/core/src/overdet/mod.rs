//! Measures of overdetermination for a computed pair `(Ω, u)` and numerical
//! checks of the quantitative results: ball exclusion (T4), superlevel
//! diameters (T5), cap heights (L3R) and boundary convexity (T8).

mod checks;
mod pfunction;
pub mod recovery;

pub use checks::{check_cap_heights, check_t4, check_t5, check_t8_convexity, sample_lines, T8Options};
pub use pfunction::{delta_p_identity, p_function, DeltaPReport, PReport};

use crate::analytic::AnalyticError;
use crate::fem::{neumann_trace, FemError, NonlinearitySpec, ScalarField};
use crate::geom2d::{GeomError, Mesh};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverdetError {
    #[error("boundary has zero length or zero mean flux")]
    ZeroBoundary,
    #[error("check requires a periodic cell")]
    NotApplicable,
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// Statistics of the Neumann trace, length weighted over boundary edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverdetReport {
    pub alpha_hat: f64,
    /// Standard deviation over `|α̂|`.
    pub rel_spread: f64,
    pub max_abs_dev: f64,
    pub loop_means: Vec<f64>,
}

pub fn overdet_residual(mesh: &Mesh, u: &ScalarField, f: &NonlinearitySpec) -> Result<OverdetReport, OverdetError> {
    let trace = neumann_trace(mesh, u, f)?;
    report_from_edges(mesh, &trace.edge)
}

/// Statistics of given per-edge values.
pub fn report_from_edges(mesh: &Mesh, edge: &[f64]) -> Result<OverdetReport, OverdetError> {
    let edges = &mesh.boundary_edges;
    let total: f64 = edges.iter().map(|e| e.length).sum();
    if !(total > 0.0) {
        return Err(OverdetError::ZeroBoundary);
    }
    let alpha_hat = edge.iter().zip(edges).map(|(g, e)| g * e.length).sum::<f64>() / total;
    if alpha_hat == 0.0 || !alpha_hat.is_finite() {
        return Err(OverdetError::ZeroBoundary);
    }
    let var = edge.iter().zip(edges).map(|(g, e)| (g - alpha_hat).powi(2) * e.length).sum::<f64>() / total;
    let max_abs_dev = edge.iter().map(|g| (g - alpha_hat).abs()).fold(0.0, f64::max);
    let mut loop_means = Vec::new();
    for lp in &mesh.boundary_loops {
        let l: f64 = lp.edges.iter().map(|&e| edges[e].length).sum();
        loop_means.push(lp.edges.iter().map(|&e| edge[e] * edges[e].length).sum::<f64>() / l);
    }
    Ok(OverdetReport { alpha_hat, rel_spread: var.sqrt() / alpha_hat.abs(), max_abs_dev, loop_means })
}

/// Outcome of one theorem check. `margin = bound − measured`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub flags: Vec<String>,
}

impl TheoremCheck {
    fn strict(theorem: &str, measured: f64, bound: f64, flags: Vec<String>) -> Self {
        TheoremCheck {
            theorem: theorem.into(),
            pass: measured < bound,
            measured,
            bound,
            margin: bound - measured,
            flags,
        }
    }
}
