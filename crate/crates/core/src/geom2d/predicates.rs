//! Low-level planar predicates shared by the mesher and the geometric checks.

use super::Vec2;

/// Distance from `p` to the closed segment `[a, b]`.
pub fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn polygon_signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.cross(q);
        a += w;
        cx += (p.0 + q.0) * w;
        cy += (p.1 + q.1) * w;
    }
    Vec2(cx / (3.0 * a), cy / (3.0 * a))
}

/// Orientation of the triple: > 0 counterclockwise, < 0 clockwise.
#[inline]
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Proper or touching intersection of two closed segments.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0 && r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// True when no two non-adjacent edges of the closed polygon intersect.
pub fn polygon_is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd crossing test over a set of closed loops. Points within `tol`
/// of any loop edge count as inside.
pub fn point_in_loops(p: Vec2, loops: &[Vec<Vec2>], tol: f64) -> bool {
    let mut inside = false;
    for lp in loops {
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            if dist_point_segment(p, a, b) <= tol {
                return true;
            }
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
                if x > p.0 {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Even-odd crossing test with the loop edges bucketed into horizontal
/// slabs, so a query only visits edges spanning its `y`.
#[derive(Clone, Debug)]
pub struct CrossingIndex {
    segs: Vec<(Vec2, Vec2)>,
    y0: f64,
    dy: f64,
    rows: Vec<Vec<u32>>,
}

impl CrossingIndex {
    pub fn new(loops: &[Vec<Vec2>]) -> Self {
        let segs: Vec<(Vec2, Vec2)> =
            loops.iter().flat_map(|lp| (0..lp.len()).map(move |i| (lp[i], lp[(i + 1) % lp.len()]))).collect();
        let ylo = segs.iter().map(|s| s.0 .1).fold(f64::INFINITY, f64::min);
        let yhi = segs.iter().map(|s| s.0 .1).fold(f64::NEG_INFINITY, f64::max);
        let nrows = ((segs.len() as f64).sqrt().ceil() as usize).max(1) * 2;
        let dy = ((yhi - ylo) / nrows as f64).max(f64::MIN_POSITIVE);
        let mut rows = vec![Vec::new(); nrows];
        let row = |y: f64| (((y - ylo) / dy).floor().max(0.0) as usize).min(nrows - 1);
        for (k, &(a, b)) in segs.iter().enumerate() {
            for r in row(a.1.min(b.1))..=row(a.1.max(b.1)) {
                rows[r].push(k as u32);
            }
        }
        CrossingIndex { segs, y0: ylo, dy, rows }
    }

    /// Strict even-odd inside test (no tolerance).
    pub fn contains(&self, p: Vec2) -> bool {
        let r = (p.1 - self.y0) / self.dy;
        if r < 0.0 || r > self.rows.len() as f64 {
            return false;
        }
        let r = (r.floor() as usize).min(self.rows.len() - 1);
        let mut inside = false;
        for &k in &self.rows[r] {
            let (a, b) = self.segs[k as usize];
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
                if x > p.0 {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Uniform bucket grid over a set of segments, answering nearest-distance
/// queries by expanding rings of cells.
#[derive(Clone, Debug)]
pub struct SegmentIndex {
    segs: Vec<(Vec2, Vec2)>,
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentIndex {
    pub fn new(segs: Vec<(Vec2, Vec2)>, cell: f64) -> Self {
        assert!(!segs.is_empty() && cell > 0.0);
        let (mut lo, mut hi) = (Vec2(f64::MAX, f64::MAX), Vec2(f64::MIN, f64::MIN));
        for &(a, b) in &segs {
            for p in [a, b] {
                lo = Vec2(lo.0.min(p.0), lo.1.min(p.1));
                hi = Vec2(hi.0.max(p.0), hi.1.max(p.1));
            }
        }
        let nx = (((hi.0 - lo.0) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.1 - lo.1) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let clampi = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        for (k, &(a, b)) in segs.iter().enumerate() {
            let i0 = clampi((a.0.min(b.0) - lo.0) / cell, nx);
            let i1 = clampi((a.0.max(b.0) - lo.0) / cell, nx);
            let j0 = clampi((a.1.min(b.1) - lo.1) / cell, ny);
            let j1 = clampi((a.1.max(b.1) - lo.1) / cell, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        SegmentIndex { segs, origin: lo, cell, nx, ny, buckets }
    }

    pub fn segments(&self) -> &[(Vec2, Vec2)] {
        &self.segs
    }

    /// Distance from `p` to the nearest segment.
    pub fn distance(&self, p: Vec2) -> f64 {
        self.distance_capped(p, f64::INFINITY)
    }

    /// `min(distance(p), cap)`, stopping the search once `cap` is certain.
    pub fn distance_capped(&self, p: Vec2, cap: f64) -> f64 {
        let fi = ((p.0 - self.origin.0) / self.cell).floor();
        let fj = ((p.1 - self.origin.1) / self.cell).floor();
        let ci = (fi.max(0.0) as usize).min(self.nx - 1) as i64;
        let cj = (fj.max(0.0) as usize).min(self.ny - 1) as i64;
        // Euclidean distance from p to the grid box
        let w = Vec2(self.nx as f64 * self.cell, self.ny as f64 * self.cell);
        let q = p - self.origin;
        let dx = (-q.0).max(q.0 - w.0).max(0.0);
        let dy = (-q.1).max(q.1 - w.1).max(0.0);
        let box_dist = dx.hypot(dy);
        if box_dist >= cap {
            return cap;
        }
        let max_r = self.nx.max(self.ny) as i64;
        let mut best = f64::INFINITY;
        for r in 0..=max_r {
            for j in (cj - r)..=(cj + r) {
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                for i in (ci - r)..=(ci + r) {
                    if i < 0 || i >= self.nx as i64 {
                        continue;
                    }
                    if (j - cj).abs() != r && (i - ci).abs() != r {
                        continue;
                    }
                    for &k in &self.buckets[j as usize * self.nx + i as usize] {
                        let (a, b) = self.segs[k as usize];
                        best = best.min(dist_point_segment(p, a, b));
                    }
                }
            }
            // cells beyond ring r are at least r cells from p's clamped cell
            let lower = (r as f64 * self.cell).max(box_dist);
            if best <= lower || lower >= cap {
                return best.min(cap);
            }
        }
        best.min(cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_cases() {
        let (a, b) = (Vec2(0.0, 0.0), Vec2(2.0, 0.0));
        assert_eq!(dist_point_segment(Vec2(1.0, 3.0), a, b), 3.0);
        assert_eq!(dist_point_segment(Vec2(-3.0, 4.0), a, b), 5.0);
        assert_eq!(dist_point_segment(Vec2(1.0, 1.0), a, a), 2f64.sqrt());
    }

    #[test]
    fn square_area_and_inside() {
        let sq = vec![Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(1.0, 1.0), Vec2(0.0, 1.0)];
        assert_eq!(polygon_signed_area(&sq), 1.0);
        let loops = vec![sq.clone()];
        assert!(point_in_loops(Vec2(0.5, 0.5), &loops, 1e-10));
        assert!(point_in_loops(Vec2(1.0, 0.5), &loops, 1e-10));
        assert!(!point_in_loops(Vec2(1.0 + 1e-6, 0.5), &loops, 1e-10));
        assert!(polygon_is_simple(&sq));
        let bowtie = vec![Vec2(0.0, 0.0), Vec2(1.0, 1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)];
        assert!(!polygon_is_simple(&bowtie));
    }

    #[test]
    fn segment_index_matches_brute_force() {
        let n = 97;
        let segs: Vec<_> = (0..n)
            .map(|i| {
                let t0 = i as f64 / n as f64 * std::f64::consts::TAU;
                let t1 = (i + 1) as f64 / n as f64 * std::f64::consts::TAU;
                (Vec2(t0.cos(), 0.5 * t0.sin()), Vec2(t1.cos(), 0.5 * t1.sin()))
            })
            .collect();
        let idx = SegmentIndex::new(segs.clone(), 0.07);
        for k in 0..400 {
            let p = Vec2(-3.0 + 6.0 * ((k * 37) % 400) as f64 / 400.0, -2.0 + 4.0 * (k as f64 / 400.0));
            let brute = segs.iter().map(|&(a, b)| dist_point_segment(p, a, b)).fold(f64::INFINITY, f64::min);
            assert!((idx.distance(p) - brute).abs() < 1e-14, "{p:?}");
            assert!((idx.distance_capped(p, 0.3) - brute.min(0.3)).abs() < 1e-14, "{p:?}");
            let loops = vec![segs.iter().map(|s| s.0).collect::<Vec<_>>()];
            assert_eq!(CrossingIndex::new(&loops).contains(p), point_in_loops(p, &loops, 0.0));
        }
    }
}
