use super::{Mesh, Vec2};

/// Curvature estimate at one boundary vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryVertex {
    pub vertex: usize,
    pub loop_id: usize,
    /// Arclength from the start of the loop.
    pub arclength: f64,
    pub tangent: Vec2,
    pub normal: Vec2,
    /// Signed curvature; positive where the domain is locally convex
    /// (`+1/R` on a disk of radius `R`). `None` at corners.
    pub curvature: Option<f64>,
    /// Set when the stencil was collinear to within 1e-14 and `k = 0` was
    /// substituted.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGeometry {
    /// One entry per vertex of each loop, in loop order. Open (periodic)
    /// loops include both seam copies.
    pub vertices: Vec<BoundaryVertex>,
}

impl BoundaryGeometry {
    /// Curvature by mesh vertex index (first occurrence).
    pub fn curvature_of(&self, v: usize) -> Option<f64> {
        self.vertices.iter().find(|b| b.vertex == v).and_then(|b| b.curvature)
    }
}

const STENCIL: usize = 5;

/// Tangents, normals and curvature along every boundary loop. Curvature is
/// a least-squares circle fit over five consecutive vertices, shifted so it
/// never straddles a corner.
pub fn boundary_geometry(mesh: &Mesh) -> BoundaryGeometry {
    let mut out = Vec::new();
    let is_corner = {
        let mut c = vec![false; mesh.n_vertices()];
        for &v in &mesh.corners {
            c[v] = true;
        }
        c
    };
    for (li, lp) in mesh.boundary_loops.iter().enumerate() {
        let verts = mesh.loop_vertices(li);
        // cyclic point sequence; open periodic loops drop the duplicate end
        // and wrap with a period shift
        let closed = lp.closed;
        let n = if closed { verts.len() } else { verts.len() - 1 };
        let shift = if closed { Vec2::ZERO } else { mesh.vertices[verts[n]] - mesh.vertices[verts[0]] };
        let point = |k: i64| -> Vec2 {
            let wraps = k.div_euclid(n as i64);
            let idx = k.rem_euclid(n as i64) as usize;
            mesh.vertices[verts[idx]] + shift * wraps as f64
        };
        let corner_at = |k: i64| closed && is_corner[verts[k.rem_euclid(n as i64) as usize]];

        let mut s = 0.0;
        for (pos, &v) in verts.iter().enumerate() {
            let k = pos as i64;
            if pos > 0 {
                s += point(k).dist(point(k - 1));
            }
            let prev = point(k - 1);
            let next = point(k + 1);
            let here = point(k);
            let e0 = (here - prev).normalized();
            let e1 = (next - here).normalized();
            let tangent = (e0 + e1).normalized();
            let normal = Vec2(tangent.1, -tangent.0);
            if corner_at(k) {
                out.push(BoundaryVertex {
                    vertex: v,
                    loop_id: li,
                    arclength: s,
                    tangent,
                    normal,
                    curvature: None,
                    degenerate: false,
                });
                continue;
            }
            // choose a window of STENCIL points containing k that avoids corners
            let half = (STENCIL / 2) as i64;
            let mut window = None;
            for off in [0i64, -1, 1, -2, 2] {
                let lo = k - half + off;
                let hi = lo + STENCIL as i64 - 1;
                if lo > k || hi < k {
                    continue;
                }
                // corners may sit at the window ends only
                if (lo + 1..hi).all(|j| !corner_at(j)) {
                    window = Some(lo);
                    break;
                }
            }
            let lo = window.unwrap_or(k - 1);
            let len = if window.is_some() { STENCIL } else { 3 };
            let pts: Vec<Vec2> = (0..len as i64).map(|j| point(lo + j)).collect();
            let (k_est, degenerate) = fit_curvature(&pts, here, tangent, normal);
            out.push(BoundaryVertex {
                vertex: v,
                loop_id: li,
                arclength: s,
                tangent,
                normal,
                curvature: Some(k_est),
                degenerate,
            });
        }
    }
    BoundaryGeometry { vertices: out }
}

/// Algebraic circle fit `A (s^2 + n^2) + B s + n + D = 0` in the local frame
/// (tangent `s`, outward normal `n`) centred at `origin`. Curvature is
/// `2A / sqrt(B^2 + 1 - 4AD)`; straight lines give `A = 0` exactly.
fn fit_curvature(pts: &[Vec2], origin: Vec2, t: Vec2, nrm: Vec2) -> (f64, bool) {
    let scale = pts.iter().map(|p| p.dist(origin)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let local: Vec<(f64, f64)> = pts
        .iter()
        .map(|&p| {
            let d = (p - origin) * (1.0 / scale);
            (d.dot(t), d.dot(nrm))
        })
        .collect();
    let collinear = {
        let (a, b) = (local[0], local[local.len() - 1]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let l = dx.hypot(dy);
        local.iter().all(|&(x, y)| ((x - a.0) * dy - (y - a.1) * dx).abs() / l <= 1e-14)
    };
    if collinear {
        return (0.0, true);
    }
    // normal equations for unknowns (A, B, D), rhs -n
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for &(s, n) in &local {
        let row = [s * s + n * n, s, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            r[i] -= row[i] * n;
        }
    }
    let sol = solve3(m, r);
    match sol {
        Some([a, b, d]) => {
            let den = (b * b + 1.0 - 4.0 * a * d).max(f64::MIN_POSITIVE).sqrt();
            (2.0 * a / den / scale, false)
        }
        None => (0.0, true),
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..3 {
            let f = m[i][c] / m[c][c];
            for j in c..3 {
                m[i][j] -= f * m[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}
