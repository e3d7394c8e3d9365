use super::predicates::{point_in_loops, SegmentIndex};
use super::{strip_half_width, DomainSpec, GeomError, Mesh, Vec2, INSIDE_TOL};

/// Source geometry for [`inscribed_ball`].
#[derive(Clone, Copy, Debug)]
pub enum InradiusTarget<'a> {
    Spec(&'a DomainSpec),
    Mesh(&'a Mesh),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InscribedBall {
    pub radius: f64,
    pub center: Vec2,
}

/// Largest distance-to-boundary over the points of a grid with spacing `g`
/// lying in the closed domain. A lower bound on the inradius, within `O(g)`.
/// Periodic strips are evaluated on one period cell with the walls unrolled
/// over three periods.
pub fn inscribed_ball(target: InradiusTarget<'_>, g: f64) -> Result<InscribedBall, GeomError> {
    if !(g > 0.0) {
        return Err(GeomError::InvalidSpec("grid spacing must be positive".into()));
    }
    let region = Region::new(target, g)?;
    let (lo, hi) = region.bbox;
    let nx = ((hi.0 - lo.0) / g).floor() as i64 + 1;
    let ny = ((hi.1 - lo.1) / g).floor() as i64 + 1;
    let point = |i: i64, j: i64| Vec2(lo.0 + i as f64 * g, lo.1 + j as f64 * g);

    // branch and bound over index blocks; distance is 1-Lipschitz
    let mut best: Option<(f64, Vec2)> = None;
    let mut stack = vec![(0i64, nx, 0i64, ny)];
    while let Some((i0, i1, j0, j1)) = stack.pop() {
        if i0 >= i1 || j0 >= j1 {
            continue;
        }
        let (ic, jc) = ((i0 + i1 - 1) / 2, (j0 + j1 - 1) / 2);
        let c = point(ic, jc);
        let d = region.signed_distance(c);
        if d >= 0.0 && best.is_none_or(|b| d > b.0) {
            best = Some((d, c));
        }
        if i1 - i0 == 1 && j1 - j0 == 1 {
            continue;
        }
        let rx = ((ic - i0).max(i1 - 1 - ic)) as f64 * g;
        let ry = ((jc - j0).max(j1 - 1 - jc)) as f64 * g;
        let upper = d + rx.hypot(ry);
        if upper < 0.0 || best.is_some_and(|b| upper <= b.0) {
            continue;
        }
        let (im, jm) = ((i0 + i1) / 2, (j0 + j1) / 2);
        for (a0, a1) in [(i0, im), (im, i1)] {
            for (b0, b1) in [(j0, jm), (jm, j1)] {
                if (a0, a1, b0, b1) != (i0, i1, j0, j1) {
                    stack.push((a0, a1, b0, b1));
                }
            }
        }
    }
    best.map(|(radius, center)| InscribedBall { radius, center }).ok_or(GeomError::EmptyDomain)
}

struct Region<'a> {
    index: SegmentIndex,
    inside: Box<dyn Fn(Vec2) -> bool + 'a>,
    bbox: (Vec2, Vec2),
}

impl<'a> Region<'a> {
    fn new(target: InradiusTarget<'a>, g: f64) -> Result<Self, GeomError> {
        match target {
            InradiusTarget::Spec(spec) => {
                spec.validate()?;
                if let DomainSpec::PeriodicStrip { period, half_width_coeffs } = spec {
                    let t = *period;
                    let n = ((t / (g / 4.0).min(t / 64.0)).ceil() as usize).max(64);
                    let mut segs = Vec::new();
                    for sign in [-1.0, 1.0] {
                        let wall: Vec<Vec2> = (0..=3 * n)
                            .map(|i| {
                                let x = -t + t * i as f64 / n as f64;
                                Vec2(x, sign * strip_half_width(half_width_coeffs, t, x))
                            })
                            .collect();
                        segs.extend(wall.windows(2).map(|w| (w[0], w[1])));
                    }
                    let wmax = half_width_coeffs[0] + half_width_coeffs[1..].iter().map(|c| c.abs()).sum::<f64>();
                    let index = SegmentIndex::new(segs, g.max(t / 64.0));
                    return Ok(Region {
                        index,
                        inside: Box::new(move |p: Vec2| spec.contains(p, INSIDE_TOL)),
                        bbox: (Vec2(0.0, -wmax), Vec2(t, wmax)),
                    });
                }
                let size = spec.characteristic_size();
                let h = (g / 4.0).min(size / 100.0);
                let loops = spec.boundary_loops(h);
                let (index, bbox) = index_loops(&loops, g);
                Ok(Region { index, inside: Box::new(move |p: Vec2| spec.contains(p, INSIDE_TOL)), bbox })
            }
            InradiusTarget::Mesh(mesh) => {
                if let Some(per) = &mesh.periodic {
                    let t = per.period;
                    let mut segs = Vec::new();
                    for (poly, _) in mesh.loop_polylines() {
                        for shift in [-t, 0.0, t] {
                            segs.extend(poly.windows(2).map(|w| (w[0] + Vec2(shift, 0.0), w[1] + Vec2(shift, 0.0))));
                        }
                    }
                    let ys: Vec<f64> = mesh.vertices.iter().map(|v| v.1).collect();
                    let ymin = ys.iter().cloned().fold(f64::MAX, f64::min);
                    let ymax = ys.iter().cloned().fold(f64::MIN, f64::max);
                    let walls: Vec<Vec<Vec2>> = mesh.loop_polylines().into_iter().map(|(p, _)| p).collect();
                    let index = SegmentIndex::new(segs, g.max(mesh.max_edge()));
                    let inside = move |p: Vec2| {
                        let x = p.0.rem_euclid(t);
                        let bound = |poly: &Vec<Vec2>| -> f64 {
                            for w in poly.windows(2) {
                                let (a, b) = if w[0].0 <= w[1].0 { (w[0], w[1]) } else { (w[1], w[0]) };
                                if x >= a.0 && x <= b.0 {
                                    return a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0);
                                }
                            }
                            0.0
                        };
                        let ya = bound(&walls[0]);
                        let yb = bound(&walls[1]);
                        p.1 >= ya.min(yb) - INSIDE_TOL && p.1 <= ya.max(yb) + INSIDE_TOL
                    };
                    return Ok(Region { index, inside: Box::new(inside), bbox: (Vec2(0.0, ymin), Vec2(t, ymax)) });
                }
                let loops: Vec<Vec<Vec2>> = mesh.loop_polylines().into_iter().map(|(p, _)| p).collect();
                let (index, bbox) = index_loops(&loops, g);
                Ok(Region { index, inside: Box::new(move |p: Vec2| point_in_loops(p, &loops, INSIDE_TOL)), bbox })
            }
        }
    }

    fn signed_distance(&self, p: Vec2) -> f64 {
        let d = self.index.distance(p);
        if (self.inside)(p) {
            d
        } else {
            -d
        }
    }
}

fn index_loops(loops: &[Vec<Vec2>], g: f64) -> (SegmentIndex, (Vec2, Vec2)) {
    let segs: Vec<(Vec2, Vec2)> =
        loops.iter().flat_map(|lp| (0..lp.len()).map(move |i| (lp[i], lp[(i + 1) % lp.len()]))).collect();
    let (mut lo, mut hi) = (Vec2(f64::MAX, f64::MAX), Vec2(f64::MIN, f64::MIN));
    for p in loops.iter().flatten() {
        lo = Vec2(lo.0.min(p.0), lo.1.min(p.1));
        hi = Vec2(hi.0.max(p.0), hi.1.max(p.1));
    }
    let cell = ((hi.0 - lo.0).max(hi.1 - lo.1) / 64.0).max(g);
    (SegmentIndex::new(segs, cell), (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_inradius() {
        let g = 0.01;
        let b = inscribed_ball(InradiusTarget::Spec(&DomainSpec::Disk { radius: 1.5 }), g).unwrap();
        assert!(b.radius <= 1.5 + 1e-12 && b.radius >= 1.5 - g, "{}", b.radius);
        assert!(b.center.norm() <= g);
    }

    #[test]
    fn square_inradius() {
        let g = 0.01;
        let b = inscribed_ball(InradiusTarget::Spec(&DomainSpec::unit_square()), g).unwrap();
        assert!((b.radius - 0.5).abs() <= g);
        assert!(b.center.dist(Vec2(0.5, 0.5)) <= 2.0 * g);
    }

    #[test]
    fn straight_strip_inradius_is_half_width() {
        let g = 0.01;
        let spec = DomainSpec::straight_strip(3.0, 1.0);
        let b = inscribed_ball(InradiusTarget::Spec(&spec), g).unwrap();
        assert!((b.radius - 1.0).abs() <= g);
        assert!(b.center.1.abs() <= g);
        let m = super::super::build_domain(&spec, 0.1).unwrap();
        let bm = inscribed_ball(InradiusTarget::Mesh(&m), g).unwrap();
        assert!((bm.radius - 1.0).abs() <= g);
    }

    #[test]
    fn mesh_and_spec_agree_on_ellipse() {
        let spec = DomainSpec::Ellipse { semi_a: 2.0, semi_b: 1.0 };
        let m = super::super::build_domain(&spec, 0.05).unwrap();
        let a = inscribed_ball(InradiusTarget::Spec(&spec), 0.01).unwrap();
        let b = inscribed_ball(InradiusTarget::Mesh(&m), 0.01).unwrap();
        assert!((a.radius - 1.0).abs() <= 0.01);
        assert!((a.radius - b.radius).abs() <= 0.02);
    }
}
