use super::{FemError, ProfileLu, ScalarField, SparseSym, System};
use crate::geom2d::Mesh;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Unshifted iterations before the Rayleigh shift is introduced.
    pub warmup: usize,
    /// Extra iterations after `tol` is met, to reach the round-off floor.
    pub polish: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, max_iter: 500, warmup: 4, polish: 0 }
    }
}

/// First Dirichlet eigenpair, normalised to `∫ u² = 1` and positive inside.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub u: ScalarField,
    /// Relative residual `‖Kx − λMx‖ / ‖λMx‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenpair of `K x = λ M x` on the unknowns of `sys`, by
/// shift-inverted iteration with one Rayleigh-quotient shift update.
pub fn eigen_smallest(sys: &System, opts: &EigenOptions) -> Result<EigenPair, FemError> {
    let (lambda, x, residual, iterations) = inverse_iteration(&sys.k, &sys.m, opts)?;
    let u = sys.dofs.scatter(&x);
    Ok(EigenPair { lambda, u: ScalarField::new(u), residual, iterations })
}

/// Convenience wrapper: assemble on `mesh` with all boundary vertices
/// eliminated.
pub fn eigen_on_mesh(mesh: &Mesh) -> Result<(System, EigenPair), FemError> {
    let sys = System::dirichlet(mesh)?;
    let pair = eigen_smallest(&sys, &EigenOptions::default())?;
    Ok((sys, pair))
}

fn inverse_iteration(
    k: &SparseSym,
    m: &SparseSym,
    opts: &EigenOptions,
) -> Result<(f64, Vec<f64>, f64, usize), FemError> {
    let n = k.n;
    if n == 0 {
        return Err(FemError::NoUnknowns);
    }
    let mut lu = ProfileLu::factor(k)?;
    let mut shifted = false;
    let mut x = vec![1.0; n];
    normalise(m, &mut x);
    let mut residual = f64::INFINITY;
    let mut extra = None;
    for it in 1..=opts.max_iter + opts.polish {
        let mx = m.matvec(&x);
        let mut y = lu.solve(&mx);
        normalise(m, &mut y);
        x = y;
        let kx = k.matvec(&x);
        let mx = m.matvec(&x);
        let lambda = dot(&x, &kx) / dot(&x, &mx);
        let num: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let den = lambda.abs() * norm(&mx);
        residual = num / den;
        if residual <= opts.tol && extra.is_none() {
            extra = Some(opts.polish);
        }
        if extra == Some(0) {
            fix_sign(&mut x);
            return Ok((lambda, x, residual, it));
        }
        if let Some(e) = extra.as_mut() {
            *e -= 1;
            continue;
        }
        if it >= opts.max_iter {
            break;
        }
        if !shifted && it >= opts.warmup {
            let s = lambda * (1.0 - (10.0 * residual).clamp(1e-3, 0.5));
            let shifted_matrix = SparseSym::combine(1.0, k, -s, m, None);
            // keep the unshifted factor if the shifted one breaks down
            if let Ok(f) = ProfileLu::factor_with(&shifted_matrix, rcm_of(k)) {
                lu = f;
            }
            shifted = true;
        }
    }
    Err(FemError::IterationLimit { iterations: opts.max_iter, residual })
}

fn rcm_of(a: &SparseSym) -> Vec<usize> {
    super::profile::rcm_order(a)
}

fn normalise(m: &SparseSym, x: &mut [f64]) {
    let s = dot(x, &m.matvec(x)).sqrt();
    for v in x.iter_mut() {
        *v /= s;
    }
}

fn fix_sign(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    if s < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
