use super::derivative::{discrete_gradient, fourier_filter, BoundaryField};
use super::morph::Morph;
use super::ShapeError;
use crate::fem::{eigen_on_mesh, neumann_trace, EigenPair, NonlinearitySpec};
use crate::geom2d::predicates::{polygon_centroid, polygon_is_simple};
use crate::geom2d::{build_domain, build_from_loops, DomainSpec, Mesh, Vec2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub h: f64,
    pub max_steps: usize,
    pub dt0: f64,
    pub dt_max: f64,
    /// Stop once the filtered Neumann spread drops below this.
    pub spread_tol: f64,
    /// Fourier modes kept in the normal velocity, further capped so that
    /// no kept wavelength is shorter than `8h`.
    pub modes: usize,
    pub max_halvings: usize,
    /// Largest boundary displacement per step, in units of the shortest
    /// boundary edge.
    pub max_move: f64,
    /// Remesh when the morphed mesh's minimum angle falls below this.
    pub remesh_angle_deg: f64,
}

impl FlowOptions {
    pub fn new(h: f64, max_steps: usize) -> Self {
        FlowOptions {
            h,
            max_steps,
            dt0: 0.01,
            dt_max: 0.2,
            spread_tol: 1e-3,
            modes: 32,
            max_halvings: 8,
            max_move: 0.5,
            remesh_angle_deg: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub step: usize,
    pub spec: DomainSpec,
    pub area: f64,
    pub lambda1: f64,
    /// Relative spread of the filtered Neumann trace.
    pub spread: f64,
    /// Step size that produced this state (0 for the initial state).
    pub dt: f64,
    /// The step started from a freshly generated mesh; `λ₁` is only
    /// comparable with the previous state up to discretization error.
    pub remeshed: bool,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub trajectory: Vec<FlowState>,
    pub mesh: Mesh,
    pub eigen: EigenPair,
    pub converged: bool,
    pub remeshes: usize,
}

impl FlowResult {
    pub fn last(&self) -> &FlowState {
        self.trajectory.last().expect("trajectory holds the initial state")
    }
}

/// Gradient flow of `λ₁` at fixed area from `spec0` with default options.
pub fn flow_to_extremal(spec0: &DomainSpec, h: f64, max_steps: usize) -> Result<FlowResult, ShapeError> {
    flow_with(spec0, &FlowOptions::new(h, max_steps))
}

struct Eval {
    pair: EigenPair,
    velocity: BoundaryField,
    spread: f64,
}

/// Eigenpair, filtered trace spread and the normal velocity: the boundary
/// gradient of the discrete `λ_h` (interior vertices following the
/// harmonic extension) per unit boundary length, which tends to
/// `(∂u/∂ν)²` under refinement and is always a descent direction for `λ_h`.
fn evaluate(mesh: &Mesh, morph: &Morph, opts: &FlowOptions) -> Result<Eval, ShapeError> {
    let (_, pair) = eigen_on_mesh(mesh)?;
    let perimeter: f64 = mesh.boundary_edges.iter().map(|e| e.length).sum();
    let modes = opts.modes.min((perimeter / (8.0 * opts.h)) as usize).max(1);
    let trace = neumann_trace(mesh, &pair.u, &NonlinearitySpec::Linear { lambda: pair.lambda })?;
    let mut g = BoundaryField::sample(mesh, &trace.vertex);
    g.values = fourier_filter(&g, modes);
    let spread = g.rel_spread();
    let grad = morph.pullback(&discrete_gradient(mesh, &pair));
    let mut velocity = BoundaryField::sample(mesh, &vec![0.0; mesh.n_vertices()]);
    for i in 0..velocity.vertices.len() {
        velocity.values[i] = -grad[velocity.vertices[i]].dot(velocity.normals[i]) / velocity.weights[i];
    }
    velocity.values = fourier_filter(&velocity, modes);
    let m = velocity.mean();
    velocity.values.iter_mut().for_each(|v| *v -= m);
    Ok(Eval { pair, velocity, spread })
}

fn polygon(mesh: &Mesh) -> Vec<Vec2> {
    mesh.loop_vertices(0).iter().map(|&v| mesh.vertices[v]).collect()
}

fn tangled(mesh: &Mesh, h: f64) -> bool {
    (0..mesh.triangles.len()).any(|t| mesh.triangle_area(t) <= 1e-6 * h * h) || !polygon_is_simple(&polygon(mesh))
}

/// Closed polygon resampled at uniform arclength spacing of about `h`.
fn resample(poly: &[Vec2], h: f64) -> Vec<Vec2> {
    let len: f64 = (0..poly.len()).map(|i| poly[i].dist(poly[(i + 1) % poly.len()])).sum();
    resample_n(poly, ((len / h).round() as usize).max(3))
}

/// Same number of points, uniform in arclength, starting at `poly[0]`.
fn redistribute(poly: &[Vec2]) -> Vec<Vec2> {
    resample_n(poly, poly.len())
}

fn resample_n(poly: &[Vec2], m: usize) -> Vec<Vec2> {
    let n = poly.len();
    let mut cum = vec![0.0];
    for i in 0..n {
        cum.push(cum[i] + poly[i].dist(poly[(i + 1) % n]));
    }
    let len = cum[n];
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    for k in 0..m {
        let s = len * k as f64 / m as f64;
        while seg + 1 < n && cum[seg + 1] < s {
            seg += 1;
        }
        let t = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        out.push(poly[seg] + (poly[(seg + 1) % n] - poly[seg]) * t);
    }
    out
}

fn state(step: usize, mesh: &Mesh, e: &Eval, dt: f64, remeshed: bool) -> FlowState {
    FlowState {
        step,
        spec: DomainSpec::Polygon { vertices: polygon(mesh) },
        area: mesh.area(),
        lambda1: e.pair.lambda,
        spread: e.spread,
        dt,
        remeshed,
    }
}

/// Explicit Euler steps of the boundary along `V ν`, with `V` the
/// Fourier-filtered shape derivative. Interior vertices follow by harmonic
/// extension, the area is restored by uniform scaling about the centroid,
/// and a step is accepted only if `λ₁` decreases.
pub fn flow_with(spec0: &DomainSpec, opts: &FlowOptions) -> Result<FlowResult, ShapeError> {
    if spec0.is_periodic() || matches!(spec0, DomainSpec::Annulus { .. }) {
        return Err(ShapeError::InvalidInput("flow needs a simply connected bounded domain".into()));
    }
    let mut mesh = build_domain(spec0, opts.h)?;
    let a0 = mesh.area();
    let mut morph = Morph::new(&mesh)?;
    let mut cur = evaluate(&mesh, &morph, opts)?;
    let mut trajectory = vec![state(0, &mesh, &cur, 0.0, false)];
    let mut dt = opts.dt0;
    let mut converged = false;
    let mut remeshes = 0;

    let mut fresh = false;
    let mut step = 1;
    while step <= opts.max_steps {
        if cur.spread < opts.spread_tol {
            converged = true;
            break;
        }
        let v = &cur.velocity;
        let vmax = v.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let min_edge = mesh.boundary_edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
        if vmax > 0.0 {
            dt = dt.min(opts.max_move * min_edge / vmax);
        }
        let mut halvings = 0;
        let accepted = loop {
            let mut pos = mesh.vertices.clone();
            let moved: Vec<Vec2> = (0..v.vertices.len())
                .map(|i| mesh.vertices[v.vertices[i]] + v.normals[i] * (dt * v.values[i]))
                .collect();
            // uniform arclength keeps boundary vertices from bunching up
            for (i, p) in redistribute(&moved).into_iter().enumerate() {
                pos[v.vertices[i]] = p;
            }
            let moved = morph.apply(&pos);
            let c = polygon_centroid(&polygon(&moved));
            let f = (a0 / moved.area()).sqrt();
            let cand = moved.with_vertices(moved.vertices.iter().map(|&p| c + (p - c) * f).collect());
            let next = if tangled(&cand, opts.h) { None } else { evaluate(&cand, &morph, opts).ok() };
            match next {
                Some(e) if e.pair.lambda <= cur.pair.lambda => {
                    trajectory.push(state(step, &cand, &e, dt, fresh));
                    mesh = cand;
                    cur = e;
                    break Ok(());
                }
                other => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        break Err(if other.is_none() {
                            ShapeError::MeshTangled { step, halvings: opts.max_halvings }
                        } else {
                            ShapeError::StagnatedFlow { step, halvings: opts.max_halvings }
                        });
                    }
                    dt *= 0.5;
                }
            }
        };
        let stuck = match accepted {
            Ok(()) => {
                fresh = false;
                step += 1;
                if halvings == 0 {
                    dt = (dt * 1.5).min(opts.dt_max);
                }
                false
            }
            // a distorted morphed mesh biases the trace; retry once on a new mesh
            Err(e) if fresh => return Err(e),
            Err(_) => true,
        };
        if stuck || mesh.min_angle_deg() < opts.remesh_angle_deg {
            mesh = build_from_loops(&[resample(&polygon(&mesh), opts.h)], &[], opts.h)?;
            morph = Morph::new(&mesh)?;
            cur = evaluate(&mesh, &morph, opts)?;
            remeshes += 1;
            fresh = true;
            dt = dt.max(opts.dt0);
        }
    }
    if !converged && cur.spread < opts.spread_tol {
        converged = true;
    }
    Ok(FlowResult { trajectory, mesh, eigen: cur.pair, converged, remeshes })
}

/// Trajectory as CSV with columns `step,lambda1,area,spread`.
pub fn trajectory_csv(traj: &[FlowState]) -> String {
    let mut s = String::from("step,lambda1,area,spread\n");
    for t in traj {
        s.push_str(&format!("{},{:.15e},{:.15e},{:.15e}\n", t.step, t.lambda1, t.area, t.spread));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_terminates_immediately() {
        let r = flow_to_extremal(&DomainSpec::Disk { radius: 1.0 }, 0.03, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.trajectory.len(), 1);
        assert!(r.trajectory[0].spread < 1e-3);
    }

    #[test]
    fn ellipse_flows_to_the_disk_at_fixed_area() {
        let r = flow_to_extremal(&DomainSpec::Ellipse { semi_a: 1.3, semi_b: 1.0 / 1.3 }, 0.08, 100).unwrap();
        let t = &r.trajectory;
        assert!(r.converged && t.len() > 3);
        for w in t.windows(2) {
            assert!(w[1].remeshed || w[1].lambda1 <= w[0].lambda1);
            assert!((w[1].area - t[0].area).abs() <= 1e-3 * t[0].area);
        }
        let j = crate::analytic::j01();
        assert!((r.last().lambda1 - j * j).abs() < 0.01 * j * j, "{}", r.last().lambda1);
        for e in &r.mesh.boundary_edges {
            assert!((r.mesh.vertices[e.v[0]].norm() - 1.0).abs() < 0.01);
        }
        let csv = trajectory_csv(t);
        assert!(csv.starts_with("step,lambda1,area,spread\n"));
        assert_eq!(csv.lines().count(), t.len() + 1);
    }

    #[test]
    fn square_corners_round_off_and_lambda_drops() {
        let side = std::f64::consts::PI.sqrt();
        let spec = DomainSpec::rectangle(-side / 2.0, -side / 2.0, side / 2.0, side / 2.0);
        let r = flow_to_extremal(&spec, 0.08, 10).unwrap();
        let t = &r.trajectory;
        // 2π for the square
        assert!((t[0].lambda1 - 2.0 * std::f64::consts::PI).abs() < 0.05);
        assert!(t.windows(2).all(|w| w[1].remeshed || w[1].lambda1 <= w[0].lambda1));
        assert!(r.last().lambda1 < t[0].lambda1 - 0.2);
    }

    #[test]
    fn annulus_is_rejected() {
        let e = flow_to_extremal(&DomainSpec::Annulus { r_in: 0.5, r_out: 1.0 }, 0.1, 5);
        assert!(matches!(e, Err(ShapeError::InvalidInput(_))));
    }
}
