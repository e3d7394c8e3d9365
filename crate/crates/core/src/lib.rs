//! Numerical laboratory for the overdetermined problem
//! `Δu + f(u) = 0` in Ω, `u = 0` and `∂u/∂ν = α` on ∂Ω, on planar domains.
//!
//! * [`geom2d`]: domains, meshes, boundary curvature, inradius and caps.
//! * [`fem`]: P1 assembly, first Dirichlet eigenpair, semilinear Newton
//!   solves and variational Neumann traces.
//! * [`analytic`]: Bessel functions and the closed-form ball and strip
//!   solutions.
//! * [`overdet`]: Neumann residuals, the P-function and the quantitative
//!   checks (ball exclusion, superlevel diameters, cap heights, convexity).
//! * [`shapeopt`]: eigenvalue gradient flow and the periodic strip branch.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod fem;
pub mod geom2d;
pub mod overdet;
pub mod par;
pub mod shapeopt;
