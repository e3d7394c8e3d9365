//! Patch recovery of nodal gradients and Hessians from P1 fields: a
//! least-squares quadratic fit of the nodal values over the two-ring of each
//! vertex. Quadratics are reproduced exactly, boundary vertices included.

use crate::geom2d::{unroll_periodic, Mesh, Vec2};

/// Recovered nodal gradient with the fit misfit of its patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovered {
    pub grad: Vec<Vec2>,
    /// `max |u_i − q(x_i)|` over the patch divided by the patch radius, a
    /// gradient-scale error estimate.
    pub residual: Vec<f64>,
}

/// Recovered Hessian entries `(u_xx, u_xy, u_yy)` per vertex.
pub type Hessian = [f64; 3];

/// Piecewise-constant gradient of a P1 field on one (counterclockwise)
/// triangle.
pub fn element_gradient(mesh: &Mesh, t: usize, values: &[f64]) -> Vec2 {
    let tri = mesh.triangles[t];
    let p = tri.map(|v| mesh.vertices[v]);
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area2 = e[2].cross(-e[1]);
    let mut g = Vec2::ZERO;
    for i in 0..3 {
        g += e[i].perp() * (values[tri[i]] / area2);
    }
    g
}

fn two_rings(mesh: &Mesh) -> Vec<Vec<usize>> {
    let nb = mesh.vertex_neighbors();
    (0..mesh.n_vertices())
        .map(|v| {
            let mut ring = vec![v];
            for &w in &nb[v] {
                ring.push(w);
                ring.extend_from_slice(&nb[w]);
            }
            ring.sort_unstable();
            ring.dedup();
            ring
        })
        .collect()
}

/// Least-squares fit of `a + g·d + ½ dᵀHd` (or of `a + g·d` when the patch
/// cannot carry a quadratic). Returns `(g, H, misfit / radius)`.
fn fit(origin: Vec2, pts: &[(Vec2, f64)]) -> (Vec2, Hessian, f64) {
    let scale = pts.iter().map(|(p, _)| p.dist(origin)).fold(0.0, f64::max);
    if scale == 0.0 {
        return (Vec2::ZERO, [0.0; 3], 0.0);
    }
    let basis = |d: Vec2| [1.0, d.0, d.1, 0.5 * d.0 * d.0, d.0 * d.1, 0.5 * d.1 * d.1];
    for n in [6, 3] {
        if pts.len() < n {
            continue;
        }
        let mut ata = vec![vec![0.0; n]; n];
        let mut atb = vec![0.0; n];
        for &(p, u) in pts {
            let row = basis((p - origin) * (1.0 / scale));
            for i in 0..n {
                for j in 0..n {
                    ata[i][j] += row[i] * row[j];
                }
                atb[i] += row[i] * u;
            }
        }
        let Some(c) = solve_dense(ata, atb) else { continue };
        let misfit = pts
            .iter()
            .map(|&(p, u)| {
                let row = basis((p - origin) * (1.0 / scale));
                (u - (0..n).map(|i| row[i] * c[i]).sum::<f64>()).abs()
            })
            .fold(0.0, f64::max);
        let g = Vec2(c[1], c[2]) * (1.0 / scale);
        let s2 = scale * scale;
        let h = if n == 6 { [c[3] / s2, c[4] / s2, c[5] / s2] } else { [0.0; 3] };
        return (g, h, misfit / scale);
    }
    (Vec2::ZERO, [0.0; 3], 0.0)
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() <= 1e-10 * norm {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Nodal gradient and Hessian. Periodic cells are recovered on three glued
/// copies so seam patches are complete.
pub fn recover(mesh: &Mesh, values: &[f64]) -> (Recovered, Vec<Hessian>) {
    match unroll_periodic(mesh) {
        None => recover_plain(mesh, values, None),
        Some((glued, middle, _)) => {
            let nv = mesh.n_vertices();
            let vals: Vec<f64> = (0..glued.n_vertices()).map(|g| values[g % nv]).collect();
            recover_plain(&glued, &vals, Some(&middle))
        }
    }
}

fn recover_plain(mesh: &Mesh, values: &[f64], pick: Option<&[usize]>) -> (Recovered, Vec<Hessian>) {
    let rings = two_rings(mesh);
    let targets: Vec<usize> = match pick {
        Some(p) => p.to_vec(),
        None => (0..mesh.n_vertices()).collect(),
    };
    let fits = crate::par::map_slice(&targets, |&v| {
        let pts: Vec<(Vec2, f64)> = rings[v].iter().map(|&w| (mesh.vertices[w], values[w])).collect();
        fit(mesh.vertices[v], &pts)
    });
    let grad = fits.iter().map(|f| f.0).collect();
    let residual = fits.iter().map(|f| f.2).collect();
    (Recovered { grad, residual }, fits.iter().map(|f| f.1).collect())
}
