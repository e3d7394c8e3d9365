//! Deterministic triangulation: exact boundary samples, an offset hexagonal
//! point set for the interior, Laplacian relaxation and constrained Delaunay
//! triangulation. Periodic strips use a mapped grid whose topology does not
//! depend on the shape coefficients.

use super::mesh::{min_angle, Mesh, Periodicity};
use super::predicates::{CrossingIndex, SegmentIndex};
use super::{strip_half_width, subdivided_polygon, DomainSpec, GeomError, Vec2};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

/// Minimum triangle angle accepted by [`build_domain`].
pub const MIN_ANGLE_DEG: f64 = 20.0;

const RELAX_PASSES: usize = 4;
const EXTRA_RELAX_PASSES: usize = 8;

/// Triangulates `spec` with target edge length `h`.
pub fn build_domain(spec: &DomainSpec, h: f64) -> Result<Mesh, GeomError> {
    spec.validate()?;
    let size = spec.characteristic_size();
    if !(h > 0.0 && h < size) {
        return Err(GeomError::InvalidSpec(format!("mesh size {h} outside (0, {size})")));
    }
    match spec {
        DomainSpec::PeriodicStrip { period, half_width_coeffs } => {
            let nx = 2 * ((period / (2.0 * h)).ceil() as usize).max(2);
            let ny_half = ((half_width_coeffs[0] / h).round() as usize).max(2);
            let mesh = strip_cell_mesh(*period, half_width_coeffs, nx, ny_half);
            let min_angle_deg = mesh.min_angle_deg();
            if min_angle_deg < MIN_ANGLE_DEG {
                return Err(GeomError::MeshQualityFailure { min_angle_deg, h });
            }
            Ok(mesh)
        }
        DomainSpec::Polygon { vertices } => {
            let (pts, corners) = subdivided_polygon(vertices, h);
            build_from_loops(&[pts], &corners, h)
        }
        _ => build_from_loops(&spec.boundary_loops(h), &[], h),
    }
}

/// Triangulates the region bounded by closed `loops` (domain on the left of
/// each loop). Loop points become the boundary vertices verbatim;
/// `corners` are indices into the concatenated loop points.
pub fn build_from_loops(loops: &[Vec<Vec2>], corners: &[usize], h: f64) -> Result<Mesh, GeomError> {
    let segs: Vec<(Vec2, Vec2)> =
        loops.iter().flat_map(|lp| (0..lp.len()).map(move |i| (lp[i], lp[(i + 1) % lp.len()]))).collect();
    if segs.len() < 3 {
        return Err(GeomError::InvalidSpec("boundary needs at least three points".into()));
    }
    let index = SegmentIndex::new(segs, h);
    let inside = CrossingIndex::new(loops);
    let n_boundary: usize = loops.iter().map(|l| l.len()).sum();

    let mut interior = hex_points(loops, &index, &inside, h);
    let mut best: Option<(f64, Vec<[usize; 3]>, Vec<Vec2>)> = None;
    for pass in 0..=(RELAX_PASSES + EXTRA_RELAX_PASSES) {
        let tris = triangulate(loops, &inside, &interior)?;
        if pass >= RELAX_PASSES {
            let pts = all_points(loops, &interior);
            let q = tris.iter().map(|t| min_angle(&pts, *t)).fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| q > b.0) {
                best = Some((q, tris.clone(), interior.clone()));
            }
            if q >= MIN_ANGLE_DEG {
                break;
            }
        }
        interior = relax(loops, &interior, &tris, n_boundary, &index, &inside, h);
    }
    let (q, best_tris, best_interior) = best.expect("at least one quality pass");
    if q < MIN_ANGLE_DEG {
        return Err(GeomError::MeshQualityFailure { min_angle_deg: q, h });
    }
    let tris = best_tris;
    let vertices = all_points(loops, &best_interior);

    let mut chains = Vec::new();
    let mut off = 0;
    for lp in loops {
        chains.push(((off..off + lp.len()).collect::<Vec<_>>(), true));
        off += lp.len();
    }
    Mesh::from_parts(vertices, tris, chains, None, corners.to_vec())
}

fn all_points(loops: &[Vec<Vec2>], interior: &[Vec2]) -> Vec<Vec2> {
    loops.iter().flatten().copied().chain(interior.iter().copied()).collect()
}

fn hex_points(loops: &[Vec<Vec2>], index: &SegmentIndex, inside: &CrossingIndex, h: f64) -> Vec<Vec2> {
    let (mut lo, mut hi) = (Vec2(f64::MAX, f64::MAX), Vec2(f64::MIN, f64::MIN));
    for p in loops.iter().flatten() {
        lo = Vec2(lo.0.min(p.0), lo.1.min(p.1));
        hi = Vec2(hi.0.max(p.0), hi.1.max(p.1));
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let j0 = (lo.1 / dy).floor() as i64;
    let j1 = (hi.1 / dy).ceil() as i64;
    let i0 = (lo.0 / h).floor() as i64 - 1;
    let i1 = (hi.0 / h).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in i0..=i1 {
            let p = Vec2(i as f64 * h + shift, j as f64 * dy);
            if index.distance_capped(p, h) >= 0.6 * h && inside.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

fn triangulate(loops: &[Vec<Vec2>], inside: &CrossingIndex, interior: &[Vec2]) -> Result<Vec<[usize; 3]>, GeomError> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let insert_err = |e: spade::InsertionError| GeomError::InvalidSpec(format!("triangulation: {e:?}"));
    let mut map = Vec::new(); // spade handle index -> our index
    let mut ours = 0usize;
    let mut push = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: Vec2, map: &mut Vec<usize>| {
        let hnd = cdt.insert(Point2::new(p.0, p.1)).map_err(insert_err)?;
        if hnd.index() >= map.len() {
            map.resize(hnd.index() + 1, usize::MAX);
        }
        if map[hnd.index()] != usize::MAX {
            return Err(GeomError::InvalidSpec(format!("duplicate point {p:?}")));
        }
        map[hnd.index()] = ours;
        ours += 1;
        Ok(hnd)
    };
    for lp in loops {
        let handles: Vec<_> = lp.iter().map(|&p| push(&mut cdt, p, &mut map)).collect::<Result<_, _>>()?;
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if !cdt.can_add_constraint(a, b) {
                return Err(GeomError::InvalidSpec("boundary loops intersect".into()));
            }
            cdt.add_constraint(a, b);
        }
    }
    for &p in interior {
        push(&mut cdt, p, &mut map)?;
    }
    if cdt.num_vertices() != map.len() {
        return Err(GeomError::InvalidSpec("constraint insertion split a boundary edge".into()));
    }
    let mut tris = Vec::new();
    for f in cdt.inner_faces() {
        let v = f.vertices();
        let p: Vec<Vec2> = v.iter().map(|h| Vec2(h.position().x, h.position().y)).collect();
        let c = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
        if inside.contains(c) {
            let t = [map[v[0].fix().index()], map[v[1].fix().index()], map[v[2].fix().index()]];
            let ccw = (p[1] - p[0]).cross(p[2] - p[0]) > 0.0;
            tris.push(if ccw { t } else { [t[0], t[2], t[1]] });
        }
    }
    Ok(tris)
}

fn relax(
    loops: &[Vec<Vec2>],
    interior: &[Vec2],
    tris: &[[usize; 3]],
    n_boundary: usize,
    index: &SegmentIndex,
    inside: &CrossingIndex,
    h: f64,
) -> Vec<Vec2> {
    let pts = all_points(loops, interior);
    let mut sum = vec![Vec2::ZERO; pts.len()];
    let mut cnt = vec![0usize; pts.len()];
    let mut seen = std::collections::HashSet::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if seen.insert((a.min(b), a.max(b))) {
                sum[a] += pts[b];
                cnt[a] += 1;
                sum[b] += pts[a];
                cnt[b] += 1;
            }
        }
    }
    interior
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let k = n_boundary + i;
            if cnt[k] == 0 {
                return p;
            }
            let q = sum[k] * (1.0 / cnt[k] as f64);
            if index.distance_capped(q, h) >= 0.35 * h && inside.contains(q) {
                q
            } else {
                p
            }
        })
        .collect()
}

/// Mapped structured mesh of one period cell of the strip `{|y| < w(x)}`:
/// `nx` columns (must be even) and `2 * ny_half` rows. Node `(i, j)` sits at
/// `x = i T / nx`, `y = (j / ny_half - 1) w(x)`. Diagonals run `/` in the
/// upper half and `\` in the lower half, so the mesh is symmetric in `y` and
/// invariant under a one-column shift.
pub fn strip_cell_mesh(period: f64, coeffs: &[f64], nx: usize, ny_half: usize) -> Mesh {
    strip_mesh(period, coeffs, nx, ny_half, false)
}

/// Like [`strip_cell_mesh`], but every grid cell is split into four
/// triangles around an extra centre vertex (appended after the grid
/// vertices). The mesh is invariant under `x ↦ T − x`, `y ↦ −y` and shifts
/// by one cell, so discrete solutions on even half-widths stay even.
pub fn strip_cell_mesh_crossed(period: f64, coeffs: &[f64], nx: usize, ny_half: usize) -> Mesh {
    strip_mesh(period, coeffs, nx, ny_half, true)
}

fn strip_mesh(period: f64, coeffs: &[f64], nx: usize, ny_half: usize, crossed: bool) -> Mesh {
    assert!(nx >= 2 && nx.is_multiple_of(2) && ny_half >= 1);
    let ny = 2 * ny_half;
    let id = |i: usize, j: usize| i * (ny + 1) + j;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        let x = period * i as f64 / nx as f64;
        let w = strip_half_width(coeffs, period, x);
        for j in 0..=ny {
            let eta = j as f64 / ny_half as f64 - 1.0;
            vertices.push(Vec2(x, eta * w));
        }
    }
    let mut triangles = Vec::with_capacity(4 * nx * ny);
    for i in 0..nx {
        let xc = period * (i as f64 + 0.5) / nx as f64;
        let wc = strip_half_width(coeffs, period, xc);
        for j in 0..ny {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if crossed {
                let e = vertices.len();
                vertices.push(Vec2(xc, ((j as f64 + 0.5) / ny_half as f64 - 1.0) * wc));
                triangles.extend([[a, b, e], [b, c, e], [c, d, e], [d, a, e]]);
            } else if j >= ny_half {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let bottom: Vec<usize> = (0..=nx).map(|i| id(i, 0)).collect();
    let top: Vec<usize> = (0..=nx).rev().map(|i| id(i, ny)).collect();
    let pairs = (0..=ny).map(|j| (id(0, j), id(nx, j))).collect();
    Mesh::from_parts(
        vertices,
        triangles,
        vec![(bottom, false), (top, false)],
        Some(Periodicity { period, pairs }),
        Vec::new(),
    )
    .expect("structured strip mesh is consistent")
}
