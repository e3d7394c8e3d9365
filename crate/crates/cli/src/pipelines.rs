use crate::config::{BranchParams, CheckParams, RunConfig, Theorem};
use crate::svg::{self, Series};
use crate::{CliError, Output};
use extremal_core::analytic::j01;
use extremal_core::fem::{
    eigen_smallest, solve_semilinear_with, EigenOptions, NewtonOptions, NonlinearitySpec, ScalarField, System,
};
use extremal_core::geom2d::predicates::{polygon_centroid, polygon_signed_area};
use extremal_core::geom2d::{build_domain, strip_cell_mesh_crossed, DomainSpec, InradiusTarget, Mesh, Vec2};
use extremal_core::overdet::{
    check_cap_heights, check_t4, check_t5, check_t8_convexity, overdet_residual, p_function, sample_lines,
    OverdetError, T8Options, TheoremCheck,
};
use extremal_core::shapeopt::{
    bifurcation_period_with, branch_csv, continue_branch_with, flow_with, trajectory_csv, BifurcationOptions,
    BranchOptions, FlowOptions, FlowState,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt::Write;

const DEFAULT_INRADIUS_GRID: f64 = 0.01;

fn num(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn domain(config: &RunConfig) -> &DomainSpec {
    config.domain.as_ref().expect("validated")
}

fn mesh_for(config: &RunConfig) -> Result<Mesh, CliError> {
    build_domain(domain(config), config.h).map_err(num)
}

/// `λ₁` in closed form where it is known.
fn exact_lambda1(spec: &DomainSpec) -> Option<f64> {
    match spec {
        DomainSpec::Disk { radius } => Some((j01() / radius).powi(2)),
        DomainSpec::PeriodicStrip { half_width_coeffs: c, .. } if c[1..].iter().all(|&v| v == 0.0) => {
            Some((PI / (2.0 * c[0])).powi(2))
        }
        _ => None,
    }
}

fn eigen_options(config: &RunConfig) -> EigenOptions {
    match config.tolerances.eigen {
        Some(tol) => EigenOptions { tol, ..EigenOptions::default() },
        None => EigenOptions::default(),
    }
}

/// First eigenpair, with `u` scaled so that its mean Neumann value is `α`.
struct Eigen {
    lambda1: f64,
    u: ScalarField,
    alpha_hat: f64,
    rel_spread: f64,
    residual: f64,
    iterations: usize,
}

fn scaled_eigen(mesh: &Mesh, config: &RunConfig) -> Result<Eigen, CliError> {
    let sys = System::dirichlet(mesh).map_err(num)?;
    let pair = eigen_smallest(&sys, &eigen_options(config)).map_err(num)?;
    let f = NonlinearitySpec::Linear { lambda: pair.lambda };
    let raw = overdet_residual(mesh, &pair.u, &f).map_err(num)?;
    let k = config.alpha() / raw.alpha_hat;
    let u = ScalarField::new(pair.u.values.iter().map(|v| v * k).collect());
    let rep = overdet_residual(mesh, &u, &f).map_err(num)?;
    Ok(Eigen {
        lambda1: pair.lambda,
        u,
        alpha_hat: rep.alpha_hat,
        rel_spread: rep.rel_spread,
        residual: pair.residual,
        iterations: pair.iterations,
    })
}

fn mesh_summary(mesh: &Mesh, h: f64) -> Value {
    json!({
        "h": h,
        "vertices": mesh.n_vertices(),
        "triangles": mesh.triangles.len(),
        "area": mesh.area(),
        "min_angle_deg": mesh.min_angle_deg(),
    })
}

fn write_field(
    out: &mut Output,
    stem: &str,
    title: &str,
    mesh: &Mesh,
    u: &ScalarField,
    levels: bool,
) -> Result<(), CliError> {
    out.text(&format!("{stem}.csv"), &u.to_csv(mesh))?;
    let fig = if levels {
        svg::level_sets(mesh, &u.values, 12, title, &out.digest)
    } else {
        svg::field(mesh, &u.values, title, &out.digest)
    };
    out.text(&format!("{stem}.svg"), &fig)
}

fn eigen_report(mesh: &Mesh, config: &RunConfig, e: &Eigen) -> Value {
    let exact = exact_lambda1(domain(config));
    json!({
        "domain": domain(config),
        "mesh": mesh_summary(mesh, config.h),
        "lambda1": e.lambda1,
        "exact_lambda1": exact,
        "rel_error": exact.map(|x| (e.lambda1 - x) / x),
        "eigen_residual": e.residual,
        "iterations": e.iterations,
        "alpha": config.alpha(),
        "alpha_hat": e.alpha_hat,
        "rel_spread": e.rel_spread,
        "max_u": e.u.max(),
    })
}

pub fn eigen(config: &RunConfig, out: &mut Output) -> Result<Value, CliError> {
    let mesh = mesh_for(config)?;
    let e = scaled_eigen(&mesh, config)?;
    write_field(out, "u", "first eigenfunction, level sets", &mesh, &e.u, true)?;
    let report = eigen_report(&mesh, config, &e);
    out.json("eigen.json", &report)?;
    Ok(report)
}

pub fn solve(config: &RunConfig, out: &mut Output) -> Result<Value, CliError> {
    let f = config.nonlinearity.clone().expect("validated");
    let mesh = mesh_for(config)?;
    let e = scaled_eigen(&mesh, config)?;
    let report = if let NonlinearitySpec::Linear { lambda } = f {
        // Positive solutions of the linear problem are multiples of the
        // first eigenfunction; the target λ is compared, not imposed.
        let mut r = eigen_report(&mesh, config, &e);
        r["nonlinearity"] = json!(f);
        r["lambda_target"] = json!(lambda);
        r["lambda_mismatch"] = json!((e.lambda1 - lambda) / lambda);
        write_field(out, "u", "solution, level sets", &mesh, &e.u, true)?;
        r
    } else {
        let sys = System::dirichlet(&mesh).map_err(num)?;
        let top = e.u.max();
        let u0 = ScalarField::new(e.u.values.iter().map(|v| v / top).collect());
        let opts = match config.tolerances.newton {
            Some(tol) => NewtonOptions { tol, ..NewtonOptions::default() },
            None => NewtonOptions::default(),
        };
        let sol = solve_semilinear_with(&sys, &f, &u0, &opts).map_err(num)?;
        write_field(out, "u", "solution, level sets", &mesh, &sol.u, true)?;
        let overdet = if sol.trivial { None } else { Some(overdet_residual(&mesh, &sol.u, &f).map_err(num)?) };
        json!({
            "domain": domain(config),
            "nonlinearity": f,
            "mesh": mesh_summary(&mesh, config.h),
            "lambda1": e.lambda1,
            "newton_iterations": sol.iterations,
            "newton_residual": sol.residual,
            "trivial": sol.trivial,
            "max_u": sol.u.max(),
            "alpha_hat": overdet.as_ref().map(|o| o.alpha_hat),
            "rel_spread": overdet.as_ref().map(|o| o.rel_spread),
            "loop_means": overdet.as_ref().map(|o| o.loop_means.clone()),
        })
    };
    out.json("solve.json", &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct Skipped {
    theorem: Theorem,
    reason: String,
}

pub fn check(config: &RunConfig, out: &mut Output) -> Result<Value, CliError> {
    let params = config.check.clone().unwrap_or_default();
    let mesh = mesh_for(config)?;
    let e = scaled_eigen(&mesh, config)?;
    let (lambda, f) = match &config.nonlinearity {
        Some(NonlinearitySpec::Linear { lambda }) => (*lambda, NonlinearitySpec::Linear { lambda: e.lambda1 }),
        _ => (e.lambda1, NonlinearitySpec::Linear { lambda: e.lambda1 }),
    };
    let g = config.tolerances.inradius_grid.unwrap_or(DEFAULT_INRADIUS_GRID);
    write_field(out, "u", "u, level sets", &mesh, &e.u, true)?;
    let p = p_function(&mesh, &e.u, &f, e.alpha_hat).map_err(num)?;
    write_field(out, "p", "P = |grad u|^2 + 2F(u)", &mesh, &p.p, false)?;

    let mut checks: Vec<TheoremCheck> = Vec::new();
    let mut skipped = Vec::new();
    for &t in &params.theorems {
        let r = match t {
            Theorem::T4 => check_t4(InradiusTarget::Spec(domain(config)), lambda, g),
            Theorem::T5 => check_t5(&mesh, &e.u, lambda, e.alpha_hat),
            Theorem::T8 => {
                let tau_k = config.tolerances.convexity.unwrap_or(T8Options::default().tau_k);
                check_t8_convexity(&mesh, &p, &T8Options { tau_k })
            }
            Theorem::L3R => check_cap_heights(&mesh, lambda, &sample_lines(&mesh, params.lines, config.seed)),
        };
        match r {
            Ok(c) => checks.push(c),
            Err(OverdetError::NotApplicable) => {
                skipped.push(Skipped { theorem: t, reason: "needs a periodic cell".into() })
            }
            Err(e) => return Err(num(e)),
        }
    }
    let a2 = e.alpha_hat * e.alpha_hat;
    let report = json!({
        "domain": domain(config),
        "mesh": mesh_summary(&mesh, config.h),
        "lambda": lambda,
        "lambda1": e.lambda1,
        "alpha_hat": e.alpha_hat,
        "rel_spread": e.rel_spread,
        "max_u": e.u.max(),
        "inradius_grid": g,
        "seed": config.seed,
        "checks": checks,
        "skipped": skipped,
        "p_function": {
            "boundary_mean": p.boundary_mean,
            "interior_max": p.interior_max,
            "criterion_left": p.criterion_left,
            "criterion_right": p.criterion_right,
            "criterion_holds": p.criterion_holds,
            "max_on_boundary": p.max_on_boundary,
            "max_rel_dev_from_alpha2": p.max_rel_deviation(a2),
            "flags": p.flags,
        },
    });
    out.json("checks.json", &report)?;
    Ok(report)
}

fn boundary_loops(mesh: &Mesh) -> Vec<Vec<Vec2>> {
    mesh.loop_polylines().into_iter().map(|(pts, _)| pts).collect()
}

fn outline_csv(rows: &[(&str, Vec<Vec<Vec2>>)]) -> String {
    let mut s = String::from("shape,loop,index,x,y\n");
    for (name, loops) in rows {
        for (l, pts) in loops.iter().enumerate() {
            for (i, p) in pts.iter().enumerate() {
                writeln!(s, "{name},{l},{i},{:.17e},{:.17e}", p.0, p.1).unwrap();
            }
        }
    }
    s
}

/// Distance between a closed polygon and the circle of equal area about its
/// centroid, measured at the polygon vertices.
fn distance_to_equal_disk(poly: &[Vec2]) -> (Vec2, f64) {
    let c = polygon_centroid(poly);
    let r = (polygon_signed_area(poly).abs() / PI).sqrt();
    (c, poly.iter().map(|p| (p.dist(c) - r).abs()).fold(0.0, f64::max))
}

pub fn flow(config: &RunConfig, out: &mut Output) -> Result<Value, CliError> {
    let spec = domain(config);
    let max_steps = config.flow.as_ref().map_or(300, |f| f.max_steps);
    let mut opts = FlowOptions::new(config.h, max_steps);
    if let Some(t) = config.tolerances.spread {
        opts.spread_tol = t;
    }
    let initial = boundary_loops(&mesh_for(config)?);
    let r = flow_with(spec, &opts).map_err(num)?;
    let fin = boundary_loops(&r.mesh);
    out.text("trajectory.csv", &trajectory_csv(&r.trajectory))?;
    let steps: Vec<Vec2> = r.trajectory.iter().map(|t: &FlowState| Vec2(t.step as f64, t.lambda1)).collect();
    out.text(
        "trajectory.svg",
        &svg::line_plot(
            &[Series { label: "lambda1", points: steps, stroke: "#1f4e9c" }],
            "step",
            "lambda1",
            "flow: lambda1",
            &out.digest,
        ),
    )?;
    let first = &r.trajectory[0];
    let last = r.last();
    let (centre, hausdorff) = if fin.len() == 1 { distance_to_equal_disk(&fin[0]) } else { (Vec2(0.0, 0.0), f64::NAN) };
    let radius = (last.area / PI).sqrt();
    let circle: Vec<Vec2> = (0..256)
        .map(|k| centre + Vec2::new((k as f64 * PI / 128.0).cos(), (k as f64 * PI / 128.0).sin()) * radius)
        .collect();
    out.text(
        "outline.csv",
        &outline_csv(&[
            ("initial", initial.clone()),
            ("final", fin.clone()),
            ("equal_area_disk", vec![circle.clone()]),
        ]),
    )?;
    let mut shapes: Vec<Series> =
        initial.into_iter().map(|p| Series { label: "initial", points: p, stroke: "#999999" }).collect();
    shapes.extend(fin.into_iter().map(|p| Series { label: "final", points: p, stroke: "#c0392b" }));
    shapes.push(Series { label: "equal-area disk", points: circle, stroke: "#1f4e9c" });
    out.text("outline.svg", &svg::outlines(&shapes, "flow: domain outlines", &out.digest))?;

    let disk = j01() * j01() * PI / last.area;
    let report = json!({
        "domain": spec,
        "h": config.h,
        "converged": r.converged,
        "steps": last.step,
        "remeshes": r.remeshes,
        "lambda1_initial": first.lambda1,
        "lambda1": last.lambda1,
        "lambda1_equal_area_disk": disk,
        "rel_error": (last.lambda1 - disk) / disk,
        "area_initial": first.area,
        "area": last.area,
        "area_drift": (last.area - first.area) / first.area,
        "spread": last.spread,
        "hausdorff_to_disk": hausdorff,
    });
    out.json("flow.json", &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct PointChecks {
    s: f64,
    period: f64,
    t4: TheoremCheck,
    caps: TheoremCheck,
    /// `max u − |α̂|/√λ`.
    max_u_margin: f64,
}

pub fn branch(config: &RunConfig, out: &mut Output) -> Result<Value, CliError> {
    let b: &BranchParams = config.branch.as_ref().expect("validated");
    let check: CheckParams = config.check.clone().unwrap_or_default();
    let g = config.tolerances.inradius_grid.unwrap_or(DEFAULT_INRADIUS_GRID);
    let mut bopts = BifurcationOptions::default();
    let mut opts = BranchOptions { n_modes: b.n_modes, alpha: config.alpha(), ..BranchOptions::default() };
    if let Some(t) = config.tolerances.bifurcation {
        bopts.rel_tol = t;
    }
    if let Some(t) = config.tolerances.eigen {
        bopts.eig_tol = t;
        opts.eig_tol = t;
    }
    if let Some(t) = config.tolerances.newton {
        opts.newton_tol = t;
    }
    let (period, computed) = match b.period {
        Some(t) => (t, false),
        None => (bifurcation_period_with(b.lambda, &bopts).map_err(num)?, true),
    };
    let branch = continue_branch_with(b.lambda, period, b.s_max, b.ds, &opts).map_err(num)?;
    if branch.points.is_empty() {
        return Err(num(branch.stopped.map_or("no branch points".to_string(), |e| e.to_string())));
    }
    out.text("branch.csv", &branch_csv(&branch.points))?;

    let mut point_checks = Vec::new();
    let mut csv = String::from("s,T,t4_margin,t4_pass,caps_margin,caps_pass,max_u_margin\n");
    for p in &branch.points {
        let spec = DomainSpec::PeriodicStrip { period: p.period, half_width_coeffs: p.coeffs.clone() };
        let t4 = check_t4(InradiusTarget::Spec(&spec), b.lambda, g).map_err(num)?;
        let mesh = strip_cell_mesh_crossed(p.period, &p.coeffs, opts.nx, opts.ny_half);
        let caps = check_cap_heights(&mesh, b.lambda, &sample_lines(&mesh, check.lines, config.seed)).map_err(num)?;
        let max_u_margin = p.max_u - p.alpha_hat.abs() / p.lambda.sqrt();
        writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{},{:.17e},{},{:.17e}",
            p.s, p.period, t4.margin, t4.pass, caps.margin, caps.pass, max_u_margin
        )
        .unwrap();
        point_checks.push(PointChecks { s: p.s, period: p.period, t4, caps, max_u_margin });
    }
    out.text("branch_checks.csv", &csv)?;

    let diagram = |f: fn(&extremal_core::shapeopt::BranchPoint) -> f64| {
        branch.points.iter().map(|p| Vec2(p.period, f(p))).collect()
    };
    out.text(
        "branch.svg",
        &svg::line_plot(
            &[
                Series { label: "s (first mode)", points: diagram(|p| p.s), stroke: "#1f4e9c" },
                Series { label: "max u", points: diagram(|p| p.max_u), stroke: "#c0392b" },
            ],
            "period T",
            "s, max u",
            "strip branch",
            &out.digest,
        ),
    )?;

    let accepted = branch.points.iter().filter(|p| p.converged && p.s != 0.0).count();
    let report = json!({
        "lambda": b.lambda,
        "alpha": config.alpha(),
        "start_period": period,
        "start_period_is_bifurcation": computed,
        "points": branch.points.len(),
        "accepted_nonstraight": accepted,
        "max_spread": branch.points.iter().map(|p| p.spread).fold(0.0, f64::max),
        "stopped": branch.stopped.as_ref().map(|e| e.to_string()),
        "checks": [
            summary("T4", point_checks.iter().map(|c| &c.t4)),
            summary("L3R", point_checks.iter().map(|c| &c.caps)),
        ],
        "point_checks": point_checks,
    });
    out.json("branch.json", &report)?;
    Ok(report)
}

/// Worst-margin representative of a family of checks, for aggregation.
fn summary<'a>(theorem: &str, checks: impl Iterator<Item = &'a TheoremCheck>) -> TheoremCheck {
    let all: Vec<&TheoremCheck> = checks.collect();
    let worst = all.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).expect("non-empty");
    TheoremCheck {
        theorem: theorem.into(),
        pass: all.iter().all(|c| c.pass),
        measured: worst.measured,
        bound: worst.bound,
        margin: worst.margin,
        flags: vec![format!("points={}", all.len())],
    }
}
