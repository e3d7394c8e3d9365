use super::{GeomError, Vec2};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints, ordered so the domain lies on the left.
    pub v: [usize; 2],
    pub normal: Vec2,
    pub length: f64,
    pub loop_id: usize,
    /// Index of the triangle owning this edge.
    pub triangle: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    /// Edge indices in traversal order.
    pub edges: Vec<usize>,
    /// False for the open walls of a periodic cell (closed modulo the period).
    pub closed: bool,
}

/// Identification of the left (`x = 0`) and right (`x = T`) vertex columns
/// of a periodic cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Periodicity {
    pub period: f64,
    /// `(left, right)` vertex pairs, sorted by `y`.
    pub pairs: Vec<(usize, usize)>,
}

/// Conforming triangulation with oriented boundary loops.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub boundary_loops: Vec<BoundaryLoop>,
    pub periodic: Option<Periodicity>,
    /// Boundary vertices where the boundary has a corner (polygon vertices).
    pub corners: Vec<usize>,
}

impl Mesh {
    /// Assembles a mesh from vertices, triangles and boundary chains given
    /// as vertex sequences (domain on the left). Normals and owners are
    /// derived. Triangles are reoriented counterclockwise.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        mut triangles: Vec<[usize; 3]>,
        chains: Vec<(Vec<usize>, bool)>,
        periodic: Option<Periodicity>,
        corners: Vec<usize>,
    ) -> Result<Mesh, GeomError> {
        for t in triangles.iter_mut() {
            if signed_area(&vertices, *t) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                owner.insert((t[k], t[(k + 1) % 3]), ti);
            }
        }
        let mut boundary_edges = Vec::new();
        let mut boundary_loops = Vec::new();
        for (li, (chain, closed)) in chains.into_iter().enumerate() {
            let n = chain.len();
            let m = if closed { n } else { n - 1 };
            let mut edges = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (chain[i], chain[(i + 1) % n]);
                let triangle = *owner
                    .get(&(a, b))
                    .ok_or_else(|| GeomError::Parse(format!("boundary edge ({a},{b}) has no owning triangle")))?;
                let d = vertices[b] - vertices[a];
                let length = d.norm();
                let normal = Vec2(d.1 / length, -d.0 / length);
                edges.push(boundary_edges.len());
                boundary_edges.push(BoundaryEdge { v: [a, b], normal, length, loop_id: li, triangle });
            }
            boundary_loops.push(BoundaryLoop { edges, closed });
        }
        Ok(Mesh { vertices, triangles, boundary_edges, boundary_loops, periodic, corners })
    }

    /// Same topology with moved vertices; boundary normals and lengths are
    /// recomputed.
    pub fn with_vertices(&self, vertices: Vec<Vec2>) -> Mesh {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut m = self.clone();
        m.vertices = vertices;
        for e in &mut m.boundary_edges {
            let d = m.vertices[e.v[1]] - m.vertices[e.v[0]];
            e.length = d.norm();
            e.normal = Vec2(d.1 / e.length, -d.0 / e.length);
        }
        m
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        self.triangles.iter().map(|t| min_angle(&self.vertices, *t)).fold(f64::INFINITY, f64::min)
    }

    /// Longest edge over all triangles.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                h = h.max(self.vertices[t[k]].dist(self.vertices[t[(k + 1) % 3]]));
            }
        }
        h
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            b[e.v[0]] = true;
            b[e.v[1]] = true;
        }
        b
    }

    /// Vertices of each loop in traversal order. Open loops include both ends.
    pub fn loop_vertices(&self, loop_id: usize) -> Vec<usize> {
        let lp = &self.boundary_loops[loop_id];
        let mut out: Vec<usize> = lp.edges.iter().map(|&e| self.boundary_edges[e].v[0]).collect();
        if !lp.closed {
            if let Some(&last) = lp.edges.last() {
                out.push(self.boundary_edges[last].v[1]);
            }
        }
        out
    }

    /// Boundary loops as coordinate polygons (open loops as polylines).
    pub fn loop_polylines(&self) -> Vec<(Vec<Vec2>, bool)> {
        (0..self.boundary_loops.len())
            .map(|l| (self.loop_vertices(l).iter().map(|&v| self.vertices[v]).collect(), self.boundary_loops[l].closed))
            .collect()
    }

    /// Vertex-to-vertex adjacency over triangle edges, sorted.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                nb[a].push(b);
                nb[b].push(a);
            }
        }
        for l in nb.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut vt = vec![Vec::new(); self.vertices.len()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                vt[v].push(ti);
            }
        }
        vt
    }

    /// Checks the structural invariants: positive orientation, boundary
    /// edges owned by exactly one triangle, outward normals, conformity
    /// (each interior edge shared by exactly two triangles).
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            if signed_area(&self.vertices, *t) <= 0.0 {
                return Err(format!("triangle {ti} not positively oriented"));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let seam: std::collections::HashSet<usize> =
            self.periodic.as_ref().map(|p| p.pairs.iter().flat_map(|&(l, r)| [l, r]).collect()).unwrap_or_default();
        let bset: std::collections::HashSet<(usize, usize)> =
            self.boundary_edges.iter().map(|e| (e.v[0].min(e.v[1]), e.v[0].max(e.v[1]))).collect();
        for (&(a, b), &c) in &count {
            if c > 2 {
                return Err(format!("edge ({a},{b}) shared by {c} triangles"));
            }
            if c == 1 && !bset.contains(&(a, b)) && !(seam.contains(&a) && seam.contains(&b)) {
                return Err(format!("edge ({a},{b}) is free but not a boundary edge"));
            }
            if c == 2 && bset.contains(&(a, b)) {
                return Err(format!("boundary edge ({a},{b}) shared by two triangles"));
            }
        }
        for (ei, e) in self.boundary_edges.iter().enumerate() {
            let t = self.triangles[e.triangle];
            let c = (self.vertices[t[0]] + self.vertices[t[1]] + self.vertices[t[2]]) * (1.0 / 3.0);
            let mid = (self.vertices[e.v[0]] + self.vertices[e.v[1]]) * 0.5;
            if e.normal.dot(c - mid) >= 0.0 {
                return Err(format!("boundary edge {ei} normal not outward"));
            }
        }
        Ok(())
    }

    /// Plain-text export: header `OFF-like: nv nt nbe`, then `x y` vertex
    /// lines, `i j k` triangle lines and `i j nx ny` boundary-edge lines.
    pub fn to_off_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF-like: {} {} {}", self.vertices.len(), self.triangles.len(), self.boundary_edges.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", v.0, v.1);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {:?} {:?}", e.v[0], e.v[1], e.normal.0, e.normal.1);
        }
        s
    }

    /// Parses the text export. Boundary chains are rebuilt by following
    /// edge endpoints; periodic information is not part of the format.
    pub fn from_off_text(text: &str) -> Result<Mesh, GeomError> {
        let perr = |m: String| GeomError::Parse(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| perr("empty input".into()))?;
        let rest = header.strip_prefix("OFF-like:").ok_or_else(|| perr("missing OFF-like header".into()))?;
        let counts: Vec<usize> = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(format!("bad count {t}"))))
            .collect::<Result<_, _>>()?;
        if counts.len() != 3 {
            return Err(perr("header needs nv nt nbe".into()));
        }
        let nums = |l: &str| -> Result<Vec<f64>, GeomError> {
            l.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| perr(format!("bad number {t}")))).collect()
        };
        let mut vertices = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let v = nums(lines.next().ok_or_else(|| perr("truncated vertices".into()))?)?;
            vertices.push(Vec2(v[0], v[1]));
        }
        let mut triangles = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let v = nums(lines.next().ok_or_else(|| perr("truncated triangles".into()))?)?;
            triangles.push([v[0] as usize, v[1] as usize, v[2] as usize]);
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut order = Vec::new();
        for _ in 0..counts[2] {
            let v = nums(lines.next().ok_or_else(|| perr("truncated boundary edges".into()))?)?;
            next.insert(v[0] as usize, v[1] as usize);
            order.push(v[0] as usize);
        }
        let mut chains = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for &start in &order {
            if seen.contains(&start) {
                continue;
            }
            let mut chain = vec![start];
            seen.insert(start);
            let mut cur = start;
            while let Some(&n) = next.get(&cur) {
                if n == start {
                    break;
                }
                if !seen.insert(n) {
                    return Err(perr("boundary edges do not form loops".into()));
                }
                chain.push(n);
                cur = n;
            }
            chains.push((chain, true));
        }
        Mesh::from_parts(vertices, triangles, chains, None, Vec::new())
    }
}

pub(crate) fn signed_area(v: &[Vec2], t: [usize; 3]) -> f64 {
    0.5 * (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]])
}

pub(crate) fn min_angle(v: &[Vec2], t: [usize; 3]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..3 {
        let a = v[t[k]];
        let b = v[t[(k + 1) % 3]];
        let c = v[t[(k + 2) % 3]];
        let (u, w) = (b - a, c - a);
        let ang = u.cross(w).abs().atan2(u.dot(w)).to_degrees();
        m = m.min(ang);
    }
    m
}
