//! Caps cut off by a line, as used by the moving-plane arguments.

use super::predicates::point_in_loops;
use super::{GeomError, Mesh, Vec2, INSIDE_TOL};
use serde::{Deserialize, Serialize};

/// Oriented line; `L+` is the half-plane to the left of `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Vec2,
    pub dir: Vec2,
}

impl Line {
    pub fn new(point: Vec2, dir: Vec2) -> Self {
        Line { point, dir: dir.normalized() }
    }
    /// `y = c` with `L+ = {y > c}`.
    pub fn horizontal(c: f64) -> Self {
        Line::new(Vec2(0.0, c), Vec2(1.0, 0.0))
    }
    /// `x = c` with `L+ = {x > c}`.
    pub fn vertical(c: f64) -> Self {
        Line::new(Vec2(c, 0.0), Vec2(0.0, -1.0))
    }
    pub fn normal(&self) -> Vec2 {
        self.dir.perp()
    }
    /// Signed distance, positive in `L+`.
    pub fn signed(&self, p: Vec2) -> f64 {
        (p - self.point).dot(self.normal())
    }
    pub fn along(&self, p: Vec2) -> f64 {
        (p - self.point).dot(self.dir)
    }
    pub fn reflect(&self, p: Vec2) -> Vec2 {
        p - self.normal() * (2.0 * self.signed(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapComponent {
    pub bounded: bool,
    /// Largest distance of the cap to the line; absent when unbounded.
    pub height: Option<f64>,
    pub graph_over_chord: bool,
    pub reflection_contained: bool,
    /// For periodic cells: distance from the cap to the truncation of the
    /// unrolled copies. Absent for bounded meshes.
    pub distance_to_cut: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapReport {
    pub line: Line,
    pub components: Vec<CapComponent>,
}

impl CapReport {
    pub fn bounded(&self) -> impl Iterator<Item = &CapComponent> {
        self.components.iter().filter(|c| c.bounded)
    }
}

const TRANSVERSAL_ANGLE: f64 = 1e-6;

/// Connected components of `Omega ∩ L+` with their height, graph and
/// reflection predicates. Periodic cells are unrolled over three periods.
pub fn cap_reflect(mesh: &Mesh, line: Line) -> Result<CapReport, GeomError> {
    let work = Unrolled::new(mesh);
    let m = &work.mesh;
    let d: Vec<f64> = m.vertices.iter().map(|&p| line.signed(p)).collect();

    for (ei, e) in m.boundary_edges.iter().enumerate() {
        let (da, db) = (d[e.v[0]], d[e.v[1]]);
        if da * db <= 0.0 {
            let dir = (m.vertices[e.v[1]] - m.vertices[e.v[0]]).normalized();
            let angle = dir.cross(line.dir).abs().asin();
            if angle < TRANSVERSAL_ANGLE {
                return Err(GeomError::NonTransversal { edge: ei % mesh.boundary_edges.len().max(1), angle });
            }
        }
    }

    // union-find over triangles meeting L+
    let nt = m.triangles.len();
    let in_plus: Vec<bool> = m.triangles.iter().map(|t| t.iter().any(|&v| d[v] > 0.0)).collect();
    let mut parent: Vec<usize> = (0..nt).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edge_owner: std::collections::HashMap<(usize, usize), usize> = Default::default();
    for (ti, t) in m.triangles.iter().enumerate() {
        if !in_plus[ti] {
            continue;
        }
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if d[a] <= 0.0 && d[b] <= 0.0 {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if let Some(&o) = edge_owner.get(&key) {
                let (ra, rb) = (find(&mut parent, o), find(&mut parent, ti));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            } else {
                edge_owner.insert(key, ti);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut comp_of = vec![usize::MAX; nt];
    for ti in 0..nt {
        if in_plus[ti] {
            let r = find(&mut parent, ti);
            let c = match roots.iter().position(|&x| x == r) {
                Some(c) => c,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            comp_of[ti] = c;
        }
    }

    let tol = INSIDE_TOL + work.sagitta;
    let mut components = Vec::new();
    for c in 0..roots.len() {
        let mut verts: Vec<usize> =
            (0..nt).filter(|&t| comp_of[t] == c).flat_map(|t| m.triangles[t]).filter(|&v| d[v] > 0.0).collect();
        verts.sort_unstable();
        verts.dedup();
        let touches_cut = verts.iter().any(|&v| work.on_cut[v]);
        let bounded = !touches_cut;
        let height = verts.iter().map(|&v| d[v]).fold(0.0, f64::max);

        // boundary chains of the cap
        let chains = work.cap_chains(&d, &comp_of, c);
        let graph_over_chord = chains_are_graph(&chains, &line, m, work.sagitta);

        let bverts: Vec<usize> = chains
            .iter()
            .flat_map(|ch| ch.iter().map(|&(e, _)| e))
            .flat_map(|e| m.boundary_edges[e].v)
            .filter(|&v| d[v] > 0.0)
            .collect();
        let reflection_contained = bverts.iter().all(|&v| work.contains(line.reflect(m.vertices[v]), tol));

        let distance_to_cut =
            work.period.map(|_| verts.iter().map(|&v| work.cut_distance(m.vertices[v])).fold(f64::INFINITY, f64::min));
        components.push(CapComponent {
            bounded,
            height: if bounded { Some(height) } else { None },
            graph_over_chord,
            reflection_contained,
            distance_to_cut,
        });
    }
    Ok(CapReport { line, components })
}

/// `(edge, loop position)` sequences of consecutive boundary edges in the cap.
type Chain = Vec<(usize, usize)>;

/// Backtracks shorter than the chord sagitta are polygonal artifacts of a
/// curved boundary and are ignored.
fn chains_are_graph(chains: &[Chain], line: &Line, m: &Mesh, sagitta: f64) -> bool {
    let scale = m.vertices.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let eps = 1e-12 * scale + sagitta;
    let mut intervals = Vec::new();
    for ch in chains {
        // projected coordinates of the clipped polyline
        let mut s = Vec::new();
        for &(e, _) in ch {
            let [a, b] = m.boundary_edges[e].v;
            let (pa, pb) = (m.vertices[a], m.vertices[b]);
            let (da, db) = (line.signed(pa), line.signed(pb));
            let clip = |p: Vec2, q: Vec2, dp: f64, dq: f64| p.lerp(q, dp / (dp - dq));
            let a_pt = if da > 0.0 { pa } else { clip(pa, pb, da, db) };
            let b_pt = if db > 0.0 { pb } else { clip(pa, pb, da, db) };
            if s.is_empty() {
                s.push(line.along(a_pt));
            }
            s.push(line.along(b_pt));
        }
        if s.len() < 2 {
            continue;
        }
        let inc = s[s.len() - 1] >= s[0];
        for w in s.windows(2) {
            let step = if inc { w[1] - w[0] } else { w[0] - w[1] };
            if step < -eps {
                return false;
            }
        }
        let (lo, hi) = if inc { (s[0], s[s.len() - 1]) } else { (s[s.len() - 1], s[0]) };
        intervals.push((lo, hi));
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    intervals.windows(2).all(|w| w[1].0 >= w[0].1 - eps)
}

/// Three glued copies of a periodic cell: the glued mesh, the index of each
/// original vertex in the middle copy, and the vertices on the outer seams.
/// Vertex `g` of the glued mesh carries the values of original vertex
/// `g % n`.
pub(crate) fn unroll_periodic(mesh: &Mesh) -> Option<(Mesh, Vec<usize>, Vec<bool>)> {
    let per = mesh.periodic.as_ref()?;
    let nv = mesh.n_vertices();
    let u = Unrolled::new(mesh);
    let mut middle: Vec<usize> = (nv..2 * nv).collect();
    for &(l, r) in &per.pairs {
        middle[r] = 2 * nv + l;
    }
    Some((u.mesh, middle, u.on_cut))
}

/// The mesh itself, or three glued periodic copies.
struct Unrolled {
    mesh: Mesh,
    on_cut: Vec<bool>,
    period: Option<f64>,
    /// Boundary loops as closed polygons for containment (bounded case).
    loops: Vec<Vec<Vec2>>,
    walls: Vec<Vec<Vec2>>,
    sagitta: f64,
}

impl Unrolled {
    fn new(mesh: &Mesh) -> Self {
        let sagitta = chord_sagitta(mesh);
        let Some(per) = &mesh.periodic else {
            let loops = mesh.loop_polylines().into_iter().map(|(p, _)| p).collect();
            return Unrolled {
                mesh: mesh.clone(),
                on_cut: vec![false; mesh.n_vertices()],
                period: None,
                loops,
                walls: Vec::new(),
                sagitta,
            };
        };
        let t = per.period;
        let nv = mesh.n_vertices();
        // copy k occupies indices k*nv..; right column of copy k is glued to
        // the left column of copy k+1
        let mut vertices = Vec::with_capacity(3 * nv);
        for k in 0..3 {
            let sh = Vec2((k as f64 - 1.0) * t, 0.0);
            vertices.extend(mesh.vertices.iter().map(|&p| p + sh));
        }
        let mut remap: Vec<usize> = (0..3 * nv).collect();
        for k in 0..2 {
            for &(l, r) in &per.pairs {
                remap[k * nv + r] = (k + 1) * nv + l;
            }
        }
        let triangles: Vec<[usize; 3]> = (0..3)
            .flat_map(|k| mesh.triangles.iter().map(move |t| t.map(|v| k * nv + v)))
            .map(|t| t.map(|v| remap[v]))
            .collect();
        let mut chains = Vec::new();
        for li in 0..mesh.boundary_loops.len() {
            let lv = mesh.loop_vertices(li);
            let left_to_right = mesh.vertices[lv[0]].0 < mesh.vertices[lv[lv.len() - 1]].0;
            let order: Vec<usize> = if left_to_right { vec![0, 1, 2] } else { vec![2, 1, 0] };
            let mut chain: Vec<usize> = Vec::new();
            for k in order {
                for &v in &lv {
                    let g = remap[k * nv + v];
                    if chain.last() != Some(&g) {
                        chain.push(g);
                    }
                }
            }
            chains.push((chain, false));
        }
        let mut on_cut = vec![false; 3 * nv];
        for &(l, _) in &per.pairs {
            on_cut[l] = true;
        }
        for &(_, r) in &per.pairs {
            on_cut[2 * nv + r] = true;
        }
        let walls = mesh.loop_polylines().into_iter().map(|(p, _)| p).collect();
        let unrolled = Mesh::from_parts(vertices, triangles, chains, None, Vec::new())
            .expect("unrolled periodic mesh is consistent");
        Unrolled { mesh: unrolled, on_cut, period: Some(t), loops: Vec::new(), walls, sagitta }
    }

    fn contains(&self, p: Vec2, tol: f64) -> bool {
        match self.period {
            None => point_in_loops(p, &self.loops, tol),
            Some(t) => {
                let x = p.0.rem_euclid(t);
                let wall_y = |poly: &Vec<Vec2>| -> f64 {
                    for w in poly.windows(2) {
                        let (a, b) = if w[0].0 <= w[1].0 { (w[0], w[1]) } else { (w[1], w[0]) };
                        if x >= a.0 && x <= b.0 {
                            return a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0);
                        }
                    }
                    0.0
                };
                let (ya, yb) = (wall_y(&self.walls[0]), wall_y(&self.walls[1]));
                p.1 >= ya.min(yb) - tol && p.1 <= ya.max(yb) + tol
            }
        }
    }

    fn cut_distance(&self, p: Vec2) -> f64 {
        let t = self.period.unwrap_or(0.0);
        (p.0 + t).min(2.0 * t - p.0)
    }

    fn cap_chains(&self, d: &[f64], comp_of: &[usize], c: usize) -> Vec<Chain> {
        let m = &self.mesh;
        let mut chains = Vec::new();
        for lp in &m.boundary_loops {
            let n = lp.edges.len();
            let member: Vec<bool> = lp
                .edges
                .iter()
                .map(|&e| {
                    let be = &m.boundary_edges[e];
                    comp_of[be.triangle] == c && (d[be.v[0]] > 0.0 || d[be.v[1]] > 0.0)
                })
                .collect();
            if !member.iter().any(|&x| x) {
                continue;
            }
            // start right after a non-member edge so wrapped runs stay whole
            let start = if lp.closed { member.iter().position(|&x| !x).map(|i| i + 1).unwrap_or(0) } else { 0 };
            let mut cur: Chain = Vec::new();
            for step in 0..n {
                let i = (start + step) % n;
                if !lp.closed && start + step >= n {
                    break;
                }
                if member[i] {
                    cur.push((lp.edges[i], i));
                } else if !cur.is_empty() {
                    chains.push(std::mem::take(&mut cur));
                }
            }
            if !cur.is_empty() {
                chains.push(cur);
            }
        }
        chains
    }
}

/// Largest chord-to-arc gap along smooth parts of the boundary, estimated
/// from turning angles; corners are excluded.
fn chord_sagitta(mesh: &Mesh) -> f64 {
    let mut is_corner = vec![false; mesh.n_vertices()];
    for &v in &mesh.corners {
        is_corner[v] = true;
    }
    let mut s: f64 = 0.0;
    for lp in &mesh.boundary_loops {
        let n = lp.edges.len();
        let m = if lp.closed { n } else { n.saturating_sub(1) };
        for i in 0..m {
            let e0 = &mesh.boundary_edges[lp.edges[i]];
            let e1 = &mesh.boundary_edges[lp.edges[(i + 1) % n]];
            if is_corner[e0.v[1]] {
                continue;
            }
            let turn = e0.normal.cross(e1.normal).abs().asin();
            let k = turn / (0.5 * (e0.length + e1.length));
            let l = e0.length.max(e1.length);
            s = s.max(l * l * k / 8.0);
        }
    }
    // l²k/8 underestimates the true sagitta at fourth order in the turn
    1.1 * s
}
