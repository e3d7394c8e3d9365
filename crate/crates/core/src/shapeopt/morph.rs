use super::ShapeError;
use crate::fem::{ProfileLu, System};
use crate::geom2d::{Mesh, Vec2};

/// Moves a mesh with its boundary: interior vertices follow the discrete
/// harmonic extension of the boundary displacement, computed on a fixed
/// reference mesh. The topology never changes, so quantities computed on
/// morphed meshes depend smoothly on the boundary positions.
pub struct Morph {
    reference: Mesh,
    sys: System,
    lu: ProfileLu,
}

impl Morph {
    pub fn new(reference: &Mesh) -> Result<Self, ShapeError> {
        let sys = System::dirichlet(reference)?;
        let lu = ProfileLu::factor(&sys.k)?;
        Ok(Morph { reference: reference.clone(), sys, lu })
    }

    pub fn reference(&self) -> &Mesh {
        &self.reference
    }

    /// Mesh whose boundary vertices sit at `positions` (indexed by vertex;
    /// interior entries are ignored).
    pub fn apply(&self, positions: &[Vec2]) -> Mesh {
        let r = &self.reference;
        let bnd = r.is_boundary_vertex();
        let mut out = r.vertices.clone();
        for axis in 0..2 {
            let comp = |p: Vec2| if axis == 0 { p.0 } else { p.1 };
            let d: Vec<f64> = (0..r.n_vertices())
                .map(|v| if bnd[v] { comp(positions[v]) - comp(r.vertices[v]) } else { 0.0 })
                .collect();
            let load = self.sys.k_full.matvec(&d);
            let rhs: Vec<f64> = self.sys.dofs.accumulate(&load).iter().map(|x| -x).collect();
            let di = self.sys.dofs.scatter(&self.lu.solve(&rhs));
            for v in 0..r.n_vertices() {
                let shift = if bnd[v] { d[v] } else { di[v] };
                if axis == 0 {
                    out[v].0 += shift;
                } else {
                    out[v].1 += shift;
                }
            }
        }
        r.with_vertices(out)
    }

    /// Turns a gradient with respect to all vertex positions into one with
    /// respect to the boundary positions alone, the interior following by
    /// harmonic extension. Interior entries of the result are zero.
    pub fn pullback(&self, grad: &[Vec2]) -> Vec<Vec2> {
        let r = &self.reference;
        let bnd = r.is_boundary_vertex();
        let mut out: Vec<Vec2> = (0..r.n_vertices()).map(|v| if bnd[v] { grad[v] } else { Vec2(0.0, 0.0) }).collect();
        for axis in 0..2 {
            let g: Vec<f64> = grad.iter().map(|p| if axis == 0 { p.0 } else { p.1 }).collect();
            let w = self.sys.dofs.scatter(&self.lu.solve(&self.sys.dofs.gather(&g)));
            let kw = self.sys.k_full.matvec(&w);
            for v in (0..r.n_vertices()).filter(|&v| bnd[v]) {
                if axis == 0 {
                    out[v].0 -= kw[v];
                } else {
                    out[v].1 -= kw[v];
                }
            }
        }
        out
    }
}
