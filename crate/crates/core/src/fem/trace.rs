use super::{assemble, DofMap, FemError, NonlinearitySpec, ProfileLu, ScalarField, SparseSym};
use crate::geom2d::Mesh;

/// Normal derivative `∂u/∂ν` on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct NeumannTrace {
    /// Nodal flux, indexed by vertex; zero at interior vertices.
    pub vertex: Vec<f64>,
    /// One value per boundary edge: the mean of its endpoint fluxes.
    pub edge: Vec<f64>,
}

impl NeumannTrace {
    /// `∮ ∂u/∂ν ds` with the per-edge values.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        self.edge.iter().zip(&mesh.boundary_edges).map(|(g, e)| g * e.length).sum()
    }
}

/// Variational trace: solves `M_∂ g = K u − M f(u)` on the boundary rows,
/// with `M_∂` the P1 boundary mass matrix. Periodic seams are merged first,
/// so the walls of a strip cell are closed loops on the torus.
pub fn neumann_trace(mesh: &Mesh, u: &ScalarField, f: &NonlinearitySpec) -> Result<NeumannTrace, FemError> {
    u.check_len(mesh)?;
    let (k, m) = assemble(mesh)?;
    let fu: Vec<f64> = u.values.iter().map(|&v| f.f(v)).collect();
    let ku = k.matvec(&u.values);
    let mf = m.matvec(&fu);
    let load: Vec<f64> = ku.iter().zip(&mf).map(|(a, b)| a - b).collect();
    let dofs = DofMap::free(mesh);
    let r = dofs.accumulate(&load);

    let mut bmap: Vec<Option<usize>> = vec![None; dofs.n_dofs];
    let mut nb = 0;
    for e in &mesh.boundary_edges {
        for &v in &e.v {
            let d = dofs.map[v].expect("free map covers every vertex");
            if bmap[d].is_none() {
                bmap[d] = Some(nb);
                nb += 1;
            }
        }
    }
    let mut trip = Vec::with_capacity(4 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let a = bmap[dofs.map[e.v[0]].unwrap()].unwrap();
        let b = bmap[dofs.map[e.v[1]].unwrap()].unwrap();
        let l = e.length / 6.0;
        trip.extend([(a, a, 2.0 * l), (b, b, 2.0 * l), (a, b, l), (b, a, l)]);
    }
    let mb = SparseSym::from_triplets(nb, trip, true, true);
    let mut rhs = vec![0.0; nb];
    for (d, bd) in bmap.iter().enumerate() {
        if let Some(bd) = bd {
            rhs[*bd] = r[d];
        }
    }
    let g = ProfileLu::factor(&mb)?.solve(&rhs);
    let mut vertex = vec![0.0; mesh.n_vertices()];
    for e in &mesh.boundary_edges {
        for &v in &e.v {
            vertex[v] = g[bmap[dofs.map[v].unwrap()].unwrap()];
        }
    }
    let edge = mesh.boundary_edges.iter().map(|e| 0.5 * (vertex[e.v[0]] + vertex[e.v[1]])).collect();
    Ok(NeumannTrace { vertex, edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{j01, strip_solution};
    use crate::fem::{eigen_on_mesh, solve_semilinear};
    use crate::geom2d::{build_domain, DomainSpec, Vec2};
    use std::f64::consts::PI;

    fn spread(mesh: &Mesh, t: &NeumannTrace) -> (f64, f64) {
        let len: f64 = mesh.boundary_edges.iter().map(|e| e.length).sum();
        let mean = t.integral(mesh) / len;
        let var: f64 =
            t.edge.iter().zip(&mesh.boundary_edges).map(|(g, e)| (g - mean).powi(2) * e.length).sum::<f64>() / len;
        (mean, var.sqrt() / mean.abs())
    }

    #[test]
    fn disk_eigenfunction_has_constant_trace() {
        let mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.04).unwrap();
        let (_, pair) = eigen_on_mesh(&mesh).unwrap();
        let f = NonlinearitySpec::Linear { lambda: pair.lambda };
        let t = neumann_trace(&mesh, &pair.u, &f).unwrap();
        let (mean, rel) = spread(&mesh, &t);
        assert!(rel < 0.01, "{rel}");
        // normalised radial eigenfunction: A² π J1(j)² = 1, trace = −A j J1(j)
        let j = j01();
        let a = 1.0 / (PI.sqrt() * crate::analytic::bessel_j1(j));
        let exact = -a * j * crate::analytic::bessel_j1(j);
        assert!((mean - exact).abs() / exact.abs() < 0.01, "{mean} {exact}");
    }

    #[test]
    fn ellipse_trace_is_not_constant() {
        let mesh = build_domain(&DomainSpec::Ellipse { semi_a: 2.0, semi_b: 1.0 }, 0.05).unwrap();
        let (_, pair) = eigen_on_mesh(&mesh).unwrap();
        let f = NonlinearitySpec::Linear { lambda: pair.lambda };
        let t = neumann_trace(&mesh, &pair.u, &f).unwrap();
        assert!(spread(&mesh, &t).1 > 0.2);
        // the flux is largest in magnitude at the flat sides
        let side = mesh.boundary_edges.iter().position(|e| mesh.vertices[e.v[0]].0.abs() < 0.05).unwrap();
        let tip = mesh.boundary_edges.iter().position(|e| mesh.vertices[e.v[0]].0.abs() > 1.97).unwrap();
        assert!(t.edge[side].abs() > t.edge[tip].abs());
    }

    #[test]
    fn interpolated_strip_solution_has_trace_alpha() {
        let (lambda, alpha) = (1.0, -1.0);
        let s = strip_solution(lambda, alpha).unwrap();
        let spec = DomainSpec::straight_strip(4.0, 0.5 * s.width);
        let mesh = build_domain(&spec, 0.05).unwrap();
        let u = ScalarField::from_fn(&mesh, |p: Vec2| s.profile(p.1 + 0.5 * s.width));
        let t = neumann_trace(&mesh, &u, &NonlinearitySpec::Linear { lambda }).unwrap();
        for g in &t.edge {
            assert!((g - alpha).abs() < 0.01 * alpha.abs(), "{g}");
        }
    }

    #[test]
    fn divergence_identity() {
        let mesh = build_domain(&DomainSpec::straight_strip(3.0, PI / 2f64.sqrt()), 0.08).unwrap();
        let c = PI / 2f64.sqrt();
        let u0 = ScalarField::from_fn(&mesh, |p: Vec2| 0.9 * (PI * p.1 / (2.0 * c)).cos());
        let f = NonlinearitySpec::AllenCahn;
        let sol = solve_semilinear(&mesh, &f, &u0).unwrap();
        let t = neumann_trace(&mesh, &sol.u, &f).unwrap();
        let (_, m) = assemble(&mesh).unwrap();
        let fu: Vec<f64> = sol.u.values.iter().map(|&v| f.f(v)).collect();
        let int_f: f64 = m.matvec(&fu).iter().sum();
        assert!((t.integral(&mesh) + int_f).abs() < 1e-8);

        let disk = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.1).unwrap();
        let (_, pair) = eigen_on_mesh(&disk).unwrap();
        let f = NonlinearitySpec::Linear { lambda: pair.lambda };
        let t = neumann_trace(&disk, &pair.u, &f).unwrap();
        let (_, m) = assemble(&disk).unwrap();
        let int_f: f64 = m.matvec(&pair.u.values).iter().sum::<f64>() * pair.lambda;
        assert!((t.integral(&disk) + int_f).abs() < 1e-8);
    }
}
