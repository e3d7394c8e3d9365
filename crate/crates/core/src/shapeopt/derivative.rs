use super::ShapeError;
use crate::fem::{neumann_trace, EigenPair, NeumannTrace, NonlinearitySpec};
use crate::geom2d::{boundary_geometry, Mesh, Vec2};
use std::f64::consts::TAU;

/// Values at the boundary vertices of a mesh in loop order, with the
/// quadrature weight of each vertex (half its adjacent edge lengths).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    pub vertices: Vec<usize>,
    pub loop_id: Vec<usize>,
    pub arclength: Vec<f64>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec2>,
    pub values: Vec<f64>,
    /// Length of each boundary loop.
    pub loop_lengths: Vec<f64>,
}

impl BoundaryField {
    /// Samples a per-vertex array on the boundary.
    pub fn sample(mesh: &Mesh, per_vertex: &[f64]) -> Self {
        let geo = boundary_geometry(mesh);
        let mut w = vec![0.0; mesh.n_vertices()];
        let mut loop_lengths = vec![0.0; mesh.boundary_loops.len()];
        for e in &mesh.boundary_edges {
            w[e.v[0]] += 0.5 * e.length;
            w[e.v[1]] += 0.5 * e.length;
            loop_lengths[e.loop_id] += e.length;
        }
        // seam vertices of periodic walls appear twice and share the weight
        let mut count = vec![0usize; mesh.n_vertices()];
        for bv in &geo.vertices {
            count[bv.vertex] += 1;
        }
        BoundaryField {
            vertices: geo.vertices.iter().map(|b| b.vertex).collect(),
            loop_id: geo.vertices.iter().map(|b| b.loop_id).collect(),
            arclength: geo.vertices.iter().map(|b| b.arclength).collect(),
            weights: geo.vertices.iter().map(|b| w[b.vertex] / count[b.vertex] as f64).collect(),
            normals: geo.vertices.iter().map(|b| b.normal).collect(),
            values: geo.vertices.iter().map(|b| per_vertex[b.vertex]).collect(),
            loop_lengths,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Length-weighted mean of `values`.
    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum::<f64>() / self.total_weight()
    }

    /// Length-weighted standard deviation over `|mean|`.
    pub fn rel_spread(&self) -> f64 {
        let m = self.mean();
        let var =
            self.weights.iter().zip(&self.values).map(|(w, v)| w * (v - m).powi(2)).sum::<f64>() / self.total_weight();
        var.sqrt() / m.abs()
    }

    fn subtract_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
    }
}

/// Steepest-descent density of `λ₁` at fixed area: `(∂u/∂ν)²` minus its
/// length-weighted mean, for an eigenpair normalised to `∫u² = 1`.
/// Moving the boundary by `V ν` changes `λ₁` by `−∫(∂u/∂ν)² V ds`.
pub fn shape_derivative(mesh: &Mesh, pair: &EigenPair) -> Result<BoundaryField, ShapeError> {
    let trace = neumann_trace(mesh, &pair.u, &NonlinearitySpec::Linear { lambda: pair.lambda })?;
    let sq: Vec<f64> = trace.vertex.iter().map(|g| g * g).collect();
    let mut field = BoundaryField::sample(mesh, &sq);
    field.subtract_mean();
    Ok(field)
}

/// Gradient of the discrete eigenvalue `λ_h` with respect to every vertex
/// position, for an eigenpair normalised to `uᵀMu = 1`:
/// `dλ_h = uᵀ(dK − λ_h dM)u`, summed element by element.
pub fn discrete_gradient(mesh: &Mesh, pair: &EigenPair) -> Vec<Vec2> {
    let u = &pair.u.values;
    let lambda = pair.lambda;
    let mut grad = vec![Vec2(0.0, 0.0); mesh.n_vertices()];
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.vertices[v]);
        let w = tri.map(|v| u[v]);
        let b = [p[1].1 - p[2].1, p[2].1 - p[0].1, p[0].1 - p[1].1];
        let c = [p[2].0 - p[1].0, p[0].0 - p[2].0, p[1].0 - p[0].0];
        let area = 0.5 * (p[0].0 * b[0] + p[1].0 * b[1] + p[2].0 * b[2]);
        let g = Vec2(w[0] * b[0] + w[1] * b[1] + w[2] * b[2], w[0] * c[0] + w[1] * c[1] + w[2] * c[2]);
        let gg = g.dot(g);
        let s1 = w[0] + w[1] + w[2];
        let mass = (s1 * s1 + w[0] * w[0] + w[1] * w[1] + w[2] * w[2]) / 12.0;
        // d(energy)/dA and d(mass)/dA combined
        let da = -gg / (4.0 * area * area) - lambda * mass;
        for k in 0..3 {
            let (next, prev) = (w[(k + 1) % 3], w[(k + 2) % 3]);
            let dx = g.1 * (next - prev) / (2.0 * area) + da * 0.5 * b[k];
            let dy = g.0 * (prev - next) / (2.0 * area) + da * 0.5 * c[k];
            grad[tri[k]] += Vec2(dx, dy);
        }
    }
    grad
}

/// Keeps the Fourier modes `0..=modes` of `field.values` on each loop, in
/// the arclength parameter.
pub fn fourier_filter(field: &BoundaryField, modes: usize) -> Vec<f64> {
    let mut out = field.values.clone();
    for (lid, &len) in field.loop_lengths.iter().enumerate() {
        let idx: Vec<usize> = (0..field.values.len()).filter(|&i| field.loop_id[i] == lid).collect();
        if idx.is_empty() {
            continue;
        }
        let m = modes.min(idx.len() / 2);
        let mut coef = vec![(0.0, 0.0); m + 1];
        for &i in &idx {
            let (w, v, t) = (field.weights[i], field.values[i], TAU * field.arclength[i] / len);
            for (k, c) in coef.iter_mut().enumerate() {
                let (s, co) = (k as f64 * t).sin_cos();
                c.0 += w * v * co;
                c.1 += w * v * s;
            }
        }
        for &i in &idx {
            let t = TAU * field.arclength[i] / len;
            let mut v = coef[0].0 / len;
            for (k, c) in coef.iter().enumerate().skip(1) {
                let (s, co) = (k as f64 * t).sin_cos();
                v += 2.0 / len * (c.0 * co + c.1 * s);
            }
            out[i] = v;
        }
    }
    out
}

/// Relative spread of the Neumann trace after removing Fourier modes above
/// `modes`; mesh-scale oscillations of the discrete trace are filtered out.
pub fn filtered_spread(mesh: &Mesh, trace: &NeumannTrace, modes: usize) -> f64 {
    let mut field = BoundaryField::sample(mesh, &trace.vertex);
    field.values = fourier_filter(&field, modes);
    field.rel_spread()
}
