use super::Vec2;

/// Convex hull by Andrew's monotone chain, counterclockwise, without
/// collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Exact maximum pairwise distance, by rotating calipers on the hull.
pub fn component_diameter(points: &[Vec2]) -> f64 {
    let hull = convex_hull(points);
    let n = hull.len();
    match n {
        0 | 1 => return 0.0,
        2 => return hull[0].dist(hull[1]),
        _ => {}
    }
    let area2 = |a: Vec2, b: Vec2, c: Vec2| (b - a).cross(c - a).abs();
    let mut best: f64 = 0.0;
    let mut j = 1;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        while area2(a, b, hull[(j + 1) % n]) > area2(a, b, hull[j]) {
            j = (j + 1) % n;
        }
        best = best.max(a.dist(hull[j])).max(b.dist(hull[j]));
    }
    best
}

/// Smallest enclosing circle (center, radius), Welzl's incremental form.
/// Points are visited in a fixed pseudo-random order for determinism.
pub fn min_enclosing_circle(points: &[Vec2]) -> (Vec2, f64) {
    let mut pts = convex_hull(points);
    if pts.is_empty() {
        return (Vec2::ZERO, 0.0);
    }
    // deterministic shuffle (xorshift)
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for i in (1..pts.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        pts.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let eps = 1e-12;
    let inside = |c: (Vec2, f64), p: Vec2| p.dist(c.0) <= c.1 * (1.0 + eps) + eps;
    let mut c = (pts[0], 0.0);
    for i in 1..pts.len() {
        if inside(c, pts[i]) {
            continue;
        }
        c = (pts[i], 0.0);
        for j in 0..i {
            if inside(c, pts[j]) {
                continue;
            }
            let mid = (pts[i] + pts[j]) * 0.5;
            c = (mid, mid.dist(pts[i]));
            for k in 0..j {
                if !inside(c, pts[k]) {
                    c = circumcircle(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}

fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> (Vec2, f64) {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * b.cross(c);
    if d.abs() < 1e-300 {
        // collinear: widest pair
        let pairs = [(Vec2::ZERO, b), (Vec2::ZERO, c), (b, c)];
        let (p, q) = pairs.iter().copied().max_by(|x, y| x.0.dist(x.1).total_cmp(&y.0.dist(y.1))).unwrap();
        let m = (p + q) * 0.5;
        return (m + a, m.dist(p));
    }
    let ux = (c.1 * b.norm2() - b.1 * c.norm2()) / d;
    let uy = (b.0 * c.norm2() - c.0 * b.norm2()) / d;
    let u = Vec2(ux, uy);
    (u + a, u.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Vec2]) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                d = d.max(points[i].dist(points[j]));
            }
        }
        d
    }

    #[test]
    fn small_cases() {
        assert_eq!(component_diameter(&[Vec2(0.0, 0.0), Vec2(3.0, 4.0)]), 5.0);
        let sq = [Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(1.0, 1.0), Vec2(0.0, 1.0)];
        assert_eq!(component_diameter(&sq), 2f64.sqrt());
        assert_eq!(component_diameter(&[Vec2(2.0, 2.0)]), 0.0);
        let (c, r) = min_enclosing_circle(&sq);
        assert!((r - 2f64.sqrt() / 2.0).abs() < 1e-12 && c.dist(Vec2(0.5, 0.5)) < 1e-12);
    }

    #[test]
    fn random_disk_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        while pts.len() < 1000 {
            let p = Vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.norm() <= 1.0 {
                pts.push(p);
            }
        }
        let d = component_diameter(&pts);
        assert!((1.9..=2.0).contains(&d));
        assert_eq!(d, brute(&pts));
        let (_, r) = min_enclosing_circle(&pts);
        assert!(r <= 1.0 + 1e-12 && r >= d / 2.0 - 1e-12);
    }

    proptest! {
        #[test]
        fn diameter_matches_brute_force_on_integers(raw in prop::collection::vec((-50i32..50, -50i32..50), 1..60)) {
            let pts: Vec<Vec2> = raw.iter().map(|&(x, y)| Vec2(x as f64, y as f64)).collect();
            prop_assert_eq!(component_diameter(&pts), brute(&pts));
        }

        #[test]
        fn enclosing_circle_contains_everything(raw in prop::collection::vec((-50i32..50, -50i32..50), 1..60)) {
            let pts: Vec<Vec2> = raw.iter().map(|&(x, y)| Vec2(x as f64, y as f64)).collect();
            let (c, r) = min_enclosing_circle(&pts);
            for p in &pts {
                prop_assert!(p.dist(c) <= r * (1.0 + 1e-9) + 1e-9);
            }
            prop_assert!(r <= brute(&pts) / 3f64.sqrt() + 1e-9);
        }
    }
}
