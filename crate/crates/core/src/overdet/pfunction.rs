use super::recovery::recover;
use super::OverdetError;
use crate::fem::{assemble, DofMap, NonlinearitySpec, ScalarField};
use crate::geom2d::{boundary_geometry, Mesh, Vec2};
use serde::{Deserialize, Serialize};

/// Critical points are interior vertices with `|∇u| < CRITICAL_FRACTION · max|∇u|`.
pub const CRITICAL_FRACTION: f64 = 0.02;

/// Boundary data of the P-function argument at one vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIdentity {
    pub vertex: usize,
    /// Recovered second derivative along the boundary tangent.
    pub u_tt: f64,
    /// `u_tt / α̂`, the curvature implied by `u_tt = α k`.
    pub implied_curvature: f64,
    /// Geometric curvature; absent at corners.
    pub curvature: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PReport {
    /// `P = |∇u|² + 2 F(u)` at every vertex.
    pub p: ScalarField,
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub boundary_mean: f64,
    pub interior_max: f64,
    pub interior_max_vertex: usize,
    pub interior_max_at: Vec2,
    /// `2 max F(u)` over interior critical points.
    pub criterion_left: f64,
    /// `α̂²`.
    pub criterion_right: f64,
    pub criterion_holds: bool,
    /// Three times the worst gradient-fit residual, in units of `P`.
    pub tau_p: f64,
    /// Interior max within `tau_p` of the boundary max.
    pub max_on_boundary: bool,
    pub critical_points: Vec<usize>,
    pub boundary: Vec<BoundaryIdentity>,
    pub flags: Vec<String>,
}

impl PReport {
    /// `max |P − c| / |c|` over all vertices.
    pub fn max_rel_deviation(&self, c: f64) -> f64 {
        self.p.values.iter().map(|p| (p - c).abs() / c.abs()).fold(0.0, f64::max)
    }
}

pub fn p_function(mesh: &Mesh, u: &ScalarField, f: &NonlinearitySpec, alpha_hat: f64) -> Result<PReport, OverdetError> {
    u.check_len(mesh)?;
    let (rec, hess) = recover(mesh, &u.values);
    let bnd = mesh.is_boundary_vertex();
    let nv = mesh.n_vertices();
    let p: Vec<f64> = (0..nv).map(|v| rec.grad[v].norm2() + 2.0 * f.antiderivative(u.values[v])).collect();

    let mut flags = Vec::new();
    let bvals: Vec<f64> = (0..nv).filter(|&v| bnd[v]).map(|v| p[v]).collect();
    let boundary_min = bvals.iter().cloned().fold(f64::INFINITY, f64::min);
    let boundary_max = bvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let boundary_mean = bvals.iter().sum::<f64>() / bvals.len().max(1) as f64;
    let interior: Vec<usize> = (0..nv).filter(|&v| !bnd[v]).collect();
    let interior_max_vertex = interior.iter().copied().max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
    let interior_max = if interior.is_empty() { f64::NEG_INFINITY } else { p[interior_max_vertex] };

    let gmax = rec.grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let critical_points: Vec<usize> =
        interior.iter().copied().filter(|&v| rec.grad[v].norm() < CRITICAL_FRACTION * gmax).collect();
    let pool: &[usize] = if critical_points.is_empty() {
        flags.push("NoCriticalPoint".to_string());
        &interior
    } else {
        &critical_points
    };
    let criterion_left = 2.0 * pool.iter().map(|&v| f.antiderivative(u.values[v])).fold(f64::NEG_INFINITY, f64::max);
    let criterion_right = alpha_hat * alpha_hat;
    let criterion_holds = criterion_left < criterion_right;

    let tau_p = 3.0
        * (0..nv)
            .map(|v| {
                let r = rec.residual[v];
                2.0 * rec.grad[v].norm() * r + r * r
            })
            .fold(0.0, f64::max);
    let max_on_boundary = interior_max <= boundary_max + tau_p;

    let geo = boundary_geometry(mesh);
    let mut seen = vec![false; nv];
    let mut boundary = Vec::new();
    for bv in &geo.vertices {
        if std::mem::replace(&mut seen[bv.vertex], true) {
            continue;
        }
        let t = bv.tangent;
        let h = hess[bv.vertex];
        let u_tt = h[0] * t.0 * t.0 + 2.0 * h[1] * t.0 * t.1 + h[2] * t.1 * t.1;
        boundary.push(BoundaryIdentity {
            vertex: bv.vertex,
            u_tt,
            implied_curvature: u_tt / alpha_hat,
            curvature: bv.curvature,
        });
    }

    Ok(PReport {
        p: ScalarField::new(p),
        boundary_min,
        boundary_max,
        boundary_mean,
        interior_max,
        interior_max_vertex,
        interior_max_at: mesh.vertices[interior_max_vertex],
        criterion_left,
        criterion_right,
        criterion_holds,
        tau_p,
        max_on_boundary,
        critical_points,
        boundary,
        flags,
    })
}

/// Weak-form residual of `|D²u|² = f(u)² + ½ΔP`, tested against the
/// interior hat functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPReport {
    /// `|Σ r_i| / Σ (|terms_i|)`.
    pub integrated_ratio: f64,
    /// `Σ |r_i| / Σ (|terms_i|)`.
    pub l1_ratio: f64,
}

pub fn delta_p_identity(mesh: &Mesh, u: &ScalarField, f: &NonlinearitySpec) -> Result<DeltaPReport, OverdetError> {
    u.check_len(mesh)?;
    let (rec, hess) = recover(mesh, &u.values);
    let nv = mesh.n_vertices();
    let p: Vec<f64> = (0..nv).map(|v| rec.grad[v].norm2() + 2.0 * f.antiderivative(u.values[v])).collect();
    let h2: Vec<f64> = hess.iter().map(|h| h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]).collect();
    let f2: Vec<f64> = u.values.iter().map(|&x| f.f(x).powi(2)).collect();
    let (k, m) = assemble(mesh)?;
    let dofs = DofMap::dirichlet(mesh);
    let a = dofs.accumulate(&m.matvec(&h2));
    let b = dofs.accumulate(&m.matvec(&f2));
    let c = dofs.accumulate(&k.matvec(&p));
    let mut sum = 0.0;
    let mut abs = 0.0;
    let mut mag = 0.0;
    for d in 0..dofs.n_dofs {
        let r = a[d] - b[d] + 0.5 * c[d];
        sum += r;
        abs += r.abs();
        mag += a[d].abs() + b[d].abs() + 0.5 * c[d].abs();
    }
    Ok(DeltaPReport { integrated_ratio: sum.abs() / mag, l1_ratio: abs / mag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{ball_solution, strip_solution};
    use crate::geom2d::{build_domain, DomainSpec};

    fn strip_case(h: f64) -> (Mesh, ScalarField) {
        let s = strip_solution(1.0, -1.0).unwrap();
        let mesh = build_domain(&DomainSpec::straight_strip(2.0, 0.5 * s.width), h).unwrap();
        let u = ScalarField::from_fn(&mesh, |p: Vec2| s.profile(p.1 + 0.5 * s.width));
        (mesh, u)
    }

    #[test]
    fn strip_p_is_nearly_constant_and_improves() {
        let f = NonlinearitySpec::Linear { lambda: 1.0 };
        let mut devs = Vec::new();
        for h in [0.08, 0.04] {
            let (mesh, u) = strip_case(h);
            let r = p_function(&mesh, &u, &f, -1.0).unwrap();
            devs.push(r.max_rel_deviation(1.0));
            assert!((r.criterion_left - 1.0).abs() < 0.01);
        }
        assert!(devs[1] <= 0.02, "{devs:?}");
        assert!(devs[0] / devs[1] >= 2.0, "{devs:?}");
    }

    #[test]
    fn linear_criterion_is_lambda_max_squared() {
        let (mesh, u) = strip_case(0.1);
        let lambda = 1.0;
        let r = p_function(&mesh, &u, &NonlinearitySpec::Linear { lambda }, -1.0).unwrap();
        let umax = r.critical_points.iter().map(|&v| u.values[v]).fold(0.0, f64::max);
        assert!((r.criterion_left - lambda * umax * umax).abs() < 1e-14);
    }

    #[test]
    fn disk_identity_and_p_maximum() {
        let b = ball_solution(1.0, -1.0).unwrap();
        let mesh = build_domain(&DomainSpec::Disk { radius: b.radius }, 0.08).unwrap();
        let u = ScalarField::from_fn(&mesh, |p| b.profile(p.norm()));
        let f = NonlinearitySpec::Linear { lambda: 1.0 };
        let r = p_function(&mesh, &u, &f, -1.0).unwrap();
        assert!(!r.criterion_holds);
        assert!((r.interior_max - b.h0 * b.h0).abs() / (b.h0 * b.h0) < 0.02);
        for bi in &r.boundary {
            let k = bi.curvature.unwrap();
            assert!((bi.implied_curvature - k).abs() < 0.1 * k, "{bi:?}");
        }
        let d = delta_p_identity(&mesh, &u, &f).unwrap();
        assert!(d.integrated_ratio < 0.1, "{d:?}");
    }

    #[test]
    fn strip_delta_p_both_sides_vanish_analytically() {
        // u = A cos(√λ y): |D²u|² = λ² u² = f(u)², and P is constant.
        let (lambda, a) = (2.0f64, 0.7);
        let f = NonlinearitySpec::Linear { lambda };
        for i in 0..20 {
            let y = -1.0 + 0.1 * i as f64;
            let u = a * (lambda.sqrt() * y).cos();
            let uyy = -lambda * u;
            assert!((uyy * uyy - f.f(u).powi(2)).abs() < 1e-14);
        }
    }
}
