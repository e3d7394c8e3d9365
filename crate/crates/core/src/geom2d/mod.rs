//! Planar domains, their triangulations and the geometric predicates used
//! by the ball-exclusion and moving-plane checks.

mod boundary;
mod caps;
mod hull;
mod inradius;
mod mesh;
mod mesher;
pub mod predicates;
mod vec2;

pub use boundary::{boundary_geometry, BoundaryGeometry, BoundaryVertex};
pub(crate) use caps::unroll_periodic;
pub use caps::{cap_reflect, CapComponent, CapReport, Line};
pub use hull::{component_diameter, convex_hull, min_enclosing_circle};
pub use inradius::{inscribed_ball, InradiusTarget, InscribedBall};
pub use mesh::{BoundaryEdge, BoundaryLoop, Mesh, Periodicity};
pub use mesher::{build_domain, build_from_loops, strip_cell_mesh, strip_cell_mesh_crossed};
pub use vec2::Vec2;

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Absolute tolerance for point-in-domain tests; boundary points are inside.
pub const INSIDE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("mesh quality floor not reached: min angle {min_angle_deg:.2} deg at h = {h}")]
    MeshQualityFailure { min_angle_deg: f64, h: f64 },
    #[error("line is not transversal to the boundary (edge {edge} within {angle:.3e} rad)")]
    NonTransversal { edge: usize, angle: f64 },
    #[error("domain contains no grid point")]
    EmptyDomain,
    #[error("malformed mesh text: {0}")]
    Parse(String),
}

/// Parametric description of a planar domain.
///
/// `PeriodicStrip` is the symmetric strip `{|y| < w(x)}` with
/// `w(x) = c0 + sum_k c_k cos(2 pi k x / T)`, stored on one period cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DomainSpec {
    Disk { radius: f64 },
    Ellipse { semi_a: f64, semi_b: f64 },
    Polygon { vertices: Vec<Vec2> },
    Annulus { r_in: f64, r_out: f64 },
    PeriodicStrip { period: f64, half_width_coeffs: Vec<f64> },
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        DomainSpec::Polygon { vertices: vec![Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(1.0, 1.0), Vec2(0.0, 1.0)] }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        DomainSpec::Polygon { vertices: vec![Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)] }
    }

    pub fn straight_strip(period: f64, half_width: f64) -> Self {
        DomainSpec::PeriodicStrip { period, half_width_coeffs: vec![half_width] }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let bad = |m: &str| Err(GeomError::InvalidSpec(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            DomainSpec::Disk { radius } if !pos(*radius) => bad("disk radius must be positive"),
            DomainSpec::Ellipse { semi_a, semi_b } if !pos(*semi_a) || !pos(*semi_b) => {
                bad("ellipse semi-axes must be positive")
            }
            DomainSpec::Annulus { r_in, r_out } if !pos(*r_in) || !pos(*r_out) || r_in >= r_out => {
                bad("annulus needs 0 < r_in < r_out")
            }
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 || vertices.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
                    return bad("polygon needs at least three finite vertices");
                }
                if !predicates::polygon_is_simple(vertices) {
                    return bad("polygon is not simple");
                }
                if predicates::polygon_signed_area(vertices) <= 0.0 {
                    return bad("polygon must be counterclockwise");
                }
                Ok(())
            }
            DomainSpec::PeriodicStrip { period, half_width_coeffs } => {
                if !pos(*period) || half_width_coeffs.is_empty() {
                    return bad("strip needs a positive period and at least c0");
                }
                if half_width_coeffs.iter().any(|c| !c.is_finite()) {
                    return bad("strip coefficients must be finite");
                }
                // sufficient: c0 exceeds the sum of |c_k|; otherwise sample densely
                let c0 = half_width_coeffs[0];
                let tail: f64 = half_width_coeffs[1..].iter().map(|c| c.abs()).sum();
                if c0 - tail > 0.0 {
                    return Ok(());
                }
                let n = 64 * half_width_coeffs.len().max(16);
                let min_w = (0..n)
                    .map(|i| strip_half_width(half_width_coeffs, *period, *period * i as f64 / n as f64))
                    .fold(f64::INFINITY, f64::min);
                if min_w > 0.0 {
                    Ok(())
                } else {
                    bad("strip half-width must stay positive")
                }
            }
            _ => Ok(()),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, DomainSpec::PeriodicStrip { .. })
    }

    /// Area (one period cell for strips).
    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Ellipse { semi_a, semi_b } => PI * semi_a * semi_b,
            DomainSpec::Polygon { vertices } => predicates::polygon_signed_area(vertices),
            DomainSpec::Annulus { r_in, r_out } => PI * (r_out * r_out - r_in * r_in),
            DomainSpec::PeriodicStrip { period, half_width_coeffs } => 2.0 * half_width_coeffs[0] * period,
        }
    }

    /// Length scale used to sanity-check the requested mesh size.
    pub fn characteristic_size(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius } => *radius,
            DomainSpec::Ellipse { semi_a, semi_b } => semi_a.min(*semi_b),
            DomainSpec::Polygon { vertices } => {
                let a = predicates::polygon_signed_area(vertices);
                let per: f64 = (0..vertices.len()).map(|i| vertices[i].dist(vertices[(i + 1) % vertices.len()])).sum();
                2.0 * a / per
            }
            DomainSpec::Annulus { r_in, r_out } => r_out - r_in,
            DomainSpec::PeriodicStrip { period, half_width_coeffs } => {
                let n = 256;
                let w = (0..n)
                    .map(|i| strip_half_width(half_width_coeffs, *period, *period * i as f64 / n as f64))
                    .fold(f64::INFINITY, f64::min);
                w.min(*period / 2.0)
            }
        }
    }

    /// Closed boundary loops sampled at spacing about `h`, oriented with the
    /// domain on the left. Points lie exactly on the parametric curve.
    /// Strips return nothing here; they are meshed on a mapped grid.
    pub fn boundary_loops(&self, h: f64) -> Vec<Vec<Vec2>> {
        match self {
            DomainSpec::Disk { radius } => vec![circle_points(*radius, h, true)],
            DomainSpec::Annulus { r_in, r_out } => {
                vec![circle_points(*r_out, h, true), circle_points(*r_in, h, false)]
            }
            DomainSpec::Ellipse { semi_a, semi_b } => vec![ellipse_points(*semi_a, *semi_b, h)],
            DomainSpec::Polygon { vertices } => vec![subdivided_polygon(vertices, h).0],
            DomainSpec::PeriodicStrip { .. } => Vec::new(),
        }
    }

    /// Containment in the closed domain with tolerance `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        match self {
            DomainSpec::Disk { radius } => p.norm() <= radius + tol,
            DomainSpec::Annulus { r_in, r_out } => {
                let r = p.norm();
                r <= r_out + tol && r >= r_in - tol
            }
            DomainSpec::Ellipse { semi_a, semi_b } => {
                (p.0 / semi_a).powi(2) + (p.1 / semi_b).powi(2) <= 1.0 + tol / semi_a.min(*semi_b)
            }
            DomainSpec::Polygon { vertices } => predicates::point_in_loops(p, std::slice::from_ref(vertices), tol),
            DomainSpec::PeriodicStrip { period, half_width_coeffs } => {
                p.1.abs() <= strip_half_width(half_width_coeffs, *period, p.0) + tol
            }
        }
    }
}

/// Half-width `w(x)` of a cosine-series strip.
pub fn strip_half_width(coeffs: &[f64], period: f64, x: f64) -> f64 {
    let th = TAU * x / period;
    coeffs[0] + coeffs.iter().enumerate().skip(1).map(|(k, c)| c * (k as f64 * th).cos()).sum::<f64>()
}

/// Derivative `w'(x)` of the strip half-width.
pub fn strip_half_width_deriv(coeffs: &[f64], period: f64, x: f64) -> f64 {
    let th = TAU * x / period;
    -coeffs.iter().enumerate().skip(1).map(|(k, c)| c * (k as f64 * TAU / period) * (k as f64 * th).sin()).sum::<f64>()
}

fn circle_points(r: f64, h: f64, ccw: bool) -> Vec<Vec2> {
    let n = ((TAU * r / h).round() as usize).max(8);
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let t = if ccw { t } else { -t };
            Vec2(r * t.cos(), r * t.sin())
        })
        .collect()
}

fn ellipse_points(a: f64, b: f64, h: f64) -> Vec<Vec2> {
    // arclength table by composite Simpson on a fine parameter grid
    let m = 4096;
    let speed = |t: f64| (a * t.sin()).hypot(b * t.cos());
    let mut s = vec![0.0; m + 1];
    for i in 0..m {
        let (t0, t1) = (TAU * i as f64 / m as f64, TAU * (i + 1) as f64 / m as f64);
        s[i + 1] = s[i] + (t1 - t0) / 6.0 * (speed(t0) + 4.0 * speed(0.5 * (t0 + t1)) + speed(t1));
    }
    let total = s[m];
    let n = ((total / h).round() as usize).max(8);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let target = total * i as f64 / n as f64;
        while s[j + 1] < target {
            j += 1;
        }
        // Newton polish on the parameter
        let mut t = TAU * (j as f64 + (target - s[j]) / (s[j + 1] - s[j])) / m as f64;
        for _ in 0..3 {
            let t0 = TAU * j as f64 / m as f64;
            let n_sub = 8;
            let mut acc = s[j];
            let dt = (t - t0) / n_sub as f64;
            for k in 0..n_sub {
                let u0 = t0 + k as f64 * dt;
                acc += dt / 6.0 * (speed(u0) + 4.0 * speed(u0 + 0.5 * dt) + speed(u0 + dt));
            }
            t -= (acc - target) / speed(t);
        }
        out.push(Vec2(a * t.cos(), b * t.sin()));
    }
    out
}

/// Subdivides each polygon edge into `ceil(len / h)` equal pieces. Returns
/// the points and the indices of the original corners.
pub(crate) fn subdivided_polygon(vertices: &[Vec2], h: f64) -> (Vec<Vec2>, Vec<usize>) {
    let n = vertices.len();
    let mut pts = Vec::new();
    let mut corners = Vec::new();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        let k = ((a.dist(b) / h) - 1e-9).ceil().max(1.0) as usize;
        corners.push(pts.len());
        for j in 0..k {
            pts.push(a.lerp(b, j as f64 / k as f64));
        }
    }
    (pts, corners)
}
