//! P1 finite elements on [`Mesh`]: assembly, Dirichlet eigenpairs,
//! semilinear Newton solves and the variational Neumann trace.

mod eigen;
mod nonlinear;
pub mod profile;
mod sparse;
mod trace;

pub use eigen::{eigen_on_mesh, eigen_smallest, EigenOptions, EigenPair};
pub use nonlinear::{
    jacobian, solve_semilinear, solve_semilinear_with, NewtonOptions, NonlinearitySpec, SemilinearSolution,
};
pub use profile::ProfileLu;
pub use sparse::SparseSym;
pub use trace::{neumann_trace, NeumannTrace};

use crate::geom2d::{Mesh, Vec2};
use crate::par;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("zero pivot {pivot:e} at row {row}")]
    SingularMatrix { row: usize, pivot: f64 },
    #[error("eigen iteration did not converge after {iterations} steps (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("Newton diverged at step {iteration} (residual {residual:e})")]
    NewtonDiverged { iteration: usize, residual: f64 },
    #[error("solution has negative value {min:e}")]
    NonPositiveSolution { min: f64 },
    #[error("field length {got} does not match {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("mesh has no interior unknowns")]
    NoUnknowns,
}

/// Per-vertex nodal values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField { values: vec![0.0; n] }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> Self {
        ScalarField { values: mesh.vertices.iter().map(|&p| f(p)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])).unwrap_or(0)
    }

    pub fn check_len(&self, mesh: &Mesh) -> Result<(), FemError> {
        if self.values.len() != mesh.n_vertices() {
            return Err(FemError::LengthMismatch { expected: mesh.n_vertices(), got: self.values.len() });
        }
        Ok(())
    }

    /// `vertex_index,x,y,value` with a header line.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut s = String::from("vertex_index,x,y,value\n");
        for (i, (p, v)) in mesh.vertices.iter().zip(&self.values).enumerate() {
            writeln!(s, "{},{:.17e},{:.17e},{:.17e}", i, p.0, p.1, v).unwrap();
        }
        s
    }
}

/// Unknown numbering: periodic partners share one unknown and Dirichlet
/// vertices (when requested) have none.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub map: Vec<Option<usize>>,
    pub n_dofs: usize,
}

impl DofMap {
    /// Boundary vertices eliminated, seams merged.
    pub fn dirichlet(mesh: &Mesh) -> Self {
        Self::build(mesh, true)
    }

    /// All vertices kept, seams merged.
    pub fn free(mesh: &Mesh) -> Self {
        Self::build(mesh, false)
    }

    fn build(mesh: &Mesh, eliminate_boundary: bool) -> Self {
        let nv = mesh.n_vertices();
        let mut rep: Vec<usize> = (0..nv).collect();
        if let Some(per) = &mesh.periodic {
            for &(l, r) in &per.pairs {
                rep[r] = l;
            }
        }
        let bnd = mesh.is_boundary_vertex();
        let mut map = vec![None; nv];
        let mut n = 0;
        for v in 0..nv {
            if rep[v] != v || (eliminate_boundary && bnd[v]) {
                continue;
            }
            map[v] = Some(n);
            n += 1;
        }
        for v in 0..nv {
            if rep[v] != v {
                map[v] = map[rep[v]];
            }
        }
        DofMap { map, n_dofs: n }
    }

    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs];
        for (v, d) in self.map.iter().enumerate() {
            if let Some(d) = d {
                x[*d] = values[v];
            }
        }
        x
    }

    /// Expands unknowns to vertices; eliminated vertices get zero.
    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|d| d.map_or(0.0, |d| x[d])).collect()
    }

    /// Sums vertex-indexed loads onto unknowns.
    pub fn accumulate(&self, load: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs];
        for (v, d) in self.map.iter().enumerate() {
            if let Some(d) = d {
                x[*d] += load[v];
            }
        }
        x
    }
}

/// Local P1 stiffness and mass matrices of one triangle.
pub fn element_matrices(p: [Vec2; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area = 0.5 * e[2].cross(-e[1]);
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e[i].dot(e[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m, area)
}

/// Stiffness `K` and consistent mass `M` on all vertices. Element matrices
/// may be computed in parallel; the scatter is sequential in triangle order,
/// so the result does not depend on the thread count.
pub fn assemble(mesh: &Mesh) -> Result<(SparseSym, SparseSym), FemError> {
    let locals = par::map_range(mesh.triangles.len(), |t| {
        let tri = mesh.triangles[t];
        element_matrices([mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]])
    });
    let n = mesh.n_vertices();
    let mut tk = Vec::with_capacity(9 * locals.len());
    let mut tm = Vec::with_capacity(9 * locals.len());
    for (t, (k, m, area)) in locals.iter().enumerate() {
        if !(area.abs() >= 1e-14) {
            return Err(FemError::DegenerateTriangle { triangle: t, area: *area });
        }
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                tk.push((tri[i], tri[j], k[i][j]));
                tm.push((tri[i], tri[j], m[i][j]));
            }
        }
    }
    Ok((SparseSym::from_triplets(n, tk, true, true), SparseSym::from_triplets(n, tm, true, true)))
}

/// Assembled operators restricted to the Dirichlet unknowns.
#[derive(Clone, Debug)]
pub struct System {
    pub k_full: SparseSym,
    pub m_full: SparseSym,
    pub dofs: DofMap,
    pub k: SparseSym,
    pub m: SparseSym,
}

impl System {
    pub fn dirichlet(mesh: &Mesh) -> Result<Self, FemError> {
        let (k_full, m_full) = assemble(mesh)?;
        let dofs = DofMap::dirichlet(mesh);
        if dofs.n_dofs == 0 {
            return Err(FemError::NoUnknowns);
        }
        let k = k_full.restrict(&dofs.map, dofs.n_dofs);
        let m = m_full.restrict(&dofs.map, dofs.n_dofs);
        Ok(System { k_full, m_full, dofs, k, m })
    }

    /// `∫ w` for a nodal field, via the mass matrix.
    pub fn integrate(&self, w: &[f64]) -> f64 {
        self.m_full.matvec(w).iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2d::{build_domain, DomainSpec};

    #[test]
    fn single_right_triangle() {
        let mesh = Mesh::from_parts(
            vec![Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![(vec![0, 1, 2], true)],
            None,
            vec![],
        )
        .unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        let kx = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let a = 0.5 / 12.0;
        let mx = [[2.0 * a, a, a], [a, 2.0 * a, a], [a, a, 2.0 * a]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - kx[i][j]).abs() < 1e-15);
                assert!((m.get(i, j) - mx[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constants_are_in_the_kernel_and_matrices_are_symmetric() {
        for spec in [DomainSpec::Disk { radius: 1.0 }, DomainSpec::Ellipse { semi_a: 2.0, semi_b: 1.0 }] {
            let mesh = build_domain(&spec, 0.1).unwrap();
            let (k, m) = assemble(&mesh).unwrap();
            let ones = vec![1.0; k.n];
            assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
            assert!(k.is_value_symmetric() && m.is_value_symmetric());
            let total: f64 = m.matvec(&ones).iter().sum();
            assert!((total - mesh.area()).abs() < 1e-12);
            let w: Vec<f64> = mesh.vertices.iter().map(|p| (3.0 * p.0).sin() + p.1).collect();
            assert!(k.quad_form(&w) >= 0.0 && m.quad_form(&w) > 0.0);
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let mesh = Mesh {
            vertices: vec![Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(2.0, 0.0)],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
            boundary_loops: vec![],
            periodic: None,
            corners: vec![],
        };
        assert!(matches!(assemble(&mesh), Err(FemError::DegenerateTriangle { .. })));
    }

    #[test]
    fn periodic_dofs_merge_seams() {
        let mesh = build_domain(&DomainSpec::straight_strip(2.0, 0.5), 0.1).unwrap();
        let d = DofMap::dirichlet(&mesh);
        let per = mesh.periodic.as_ref().unwrap();
        for &(l, r) in &per.pairs {
            assert_eq!(d.map[l], d.map[r]);
        }
        let bnd = mesh.is_boundary_vertex();
        assert!(bnd.iter().zip(&d.map).all(|(b, m)| !b || m.is_none()));
    }

    #[test]
    fn csv_export() {
        let mesh = build_domain(&DomainSpec::unit_square(), 0.25).unwrap();
        let f = ScalarField::from_fn(&mesh, |p| p.0);
        let csv = f.to_csv(&mesh);
        assert!(csv.starts_with("vertex_index,x,y,value\n0,"));
        assert_eq!(csv.lines().count(), mesh.n_vertices() + 1);
    }
}
