//! Numerical extremal domains: the gradient flow of `λ₁` at fixed area,
//! and continuation of the periodic strip branch with its bifurcation
//! period.

mod branch;
mod derivative;
mod flow;
mod morph;

pub use branch::{
    bifurcation_period, bifurcation_period_with, branch_csv, continue_branch, continue_branch_with, mirror_coeffs,
    mu_coefficient, mu_scan, solve_strip, BifurcationOptions, Branch, BranchOptions, BranchPoint, StripSolve,
};
pub use derivative::{discrete_gradient, filtered_spread, fourier_filter, shape_derivative, BoundaryField};
pub use flow::{flow_to_extremal, flow_with, trajectory_csv, FlowOptions, FlowResult, FlowState};
pub use morph::Morph;

use crate::fem::FemError;
use crate::geom2d::GeomError;
use crate::overdet::OverdetError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("boundary tangled at step {step} after {halvings} step halvings")]
    MeshTangled { step: usize, halvings: usize },
    #[error("flow stagnated at step {step}: λ₁ did not decrease after {halvings} halvings")]
    StagnatedFlow { step: usize, halvings: usize },
    #[error("no sign change of μ(T) on the scanned interval")]
    NoSignChange,
    #[error("continuation Newton diverged at s = {s:.6} (residual {residual:.3e})")]
    NewtonDiverged { s: f64, residual: f64 },
    #[error("Fourier truncation insufficient: |c_N| / |c_1| = {ratio:.3e}")]
    TruncationInsufficient { ratio: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Overdet(#[from] OverdetError),
}
