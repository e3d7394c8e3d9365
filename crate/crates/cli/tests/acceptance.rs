//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Reference numbers are written out as
//! literals so they do not depend on the code under test.

use extremal_core::analytic::{ball_solution, r_lambda};
use extremal_core::fem::{eigen_on_mesh, NonlinearitySpec, ScalarField};
use extremal_core::geom2d::predicates::{polygon_centroid, polygon_signed_area};
use extremal_core::geom2d::{build_domain, strip_cell_mesh_crossed, DomainSpec, InradiusTarget, Mesh};
use extremal_core::overdet::{
    check_cap_heights, check_t4, check_t5, overdet_residual, p_function, sample_lines, PReport,
};
use extremal_core::shapeopt::{
    bifurcation_period, continue_branch, flow_with, solve_strip, BranchOptions, BranchPoint, FlowOptions,
};
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

/// `j₀,₁` and `J₁(j₀,₁)` to 16 digits.
const J01: f64 = 2.404825557695773;
const J1_AT_J01: f64 = 0.5191474972894669;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Eigenfunction scaled to mean Neumann value `alpha`.
fn scaled_eigen(mesh: &Mesh, alpha: f64) -> (f64, ScalarField, f64, f64) {
    let (_, pair) = eigen_on_mesh(mesh).unwrap();
    let f = NonlinearitySpec::Linear { lambda: pair.lambda };
    let raw = overdet_residual(mesh, &pair.u, &f).unwrap();
    let u = ScalarField::new(pair.u.values.iter().map(|v| v * alpha / raw.alpha_hat).collect());
    let rep = overdet_residual(mesh, &u, &f).unwrap();
    (pair.lambda, u, rep.alpha_hat, rep.rel_spread)
}

fn p_report(mesh: &Mesh, lambda1: f64, u: &ScalarField, alpha_hat: f64) -> PReport {
    p_function(mesh, u, &NonlinearitySpec::Linear { lambda: lambda1 }, alpha_hat).unwrap()
}

fn criterion_1() -> Outcome {
    let exact = J01 * J01;
    let mut rows = Vec::new();
    let mut slowest: f64 = 0.0;
    for h in [0.08, 0.04, 0.02] {
        let t = Instant::now();
        let mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, h).unwrap();
        let (_, pair) = eigen_on_mesh(&mesh).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        rows.push((h, (pair.lambda - exact) / exact));
    }
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    let fine = rows[2].1;
    let pass = fine.abs() <= 0.005 && orders.iter().all(|o| (1.8..=2.2).contains(o)) && slowest < 30.0;
    outcome(
        pass,
        format!(
            "rel. error at h=0.02 {fine:.3e}, orders {:.3} {:.3}, slowest solve {slowest:.2} s",
            orders[0], orders[1]
        ),
    )
}

fn criterion_2() -> Outcome {
    let disk = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.02).unwrap();
    let ellipse = build_domain(&DomainSpec::Ellipse { semi_a: 2.0, semi_b: 1.0 }, 0.02).unwrap();
    let sd = scaled_eigen(&disk, -1.0).3;
    let se = scaled_eigen(&ellipse, -1.0).3;
    outcome(sd <= 0.01 && se >= 0.20, format!("spread disk {sd:.3e}, Ellipse{{2,1}} {se:.3}"))
}

fn criterion_3(branch: &[BranchPoint], opts: &BranchOptions) -> Outcome {
    let b = ball_solution(1.0, -1.0).unwrap();
    let h0_ok = (b.h0 - 1.0 / J1_AT_J01).abs() <= 1e-6;
    let mesh = build_domain(&DomainSpec::Disk { radius: r_lambda(1.0).unwrap() }, 0.04).unwrap();
    let (_, u, _, _) = scaled_eigen(&mesh, -1.0);
    let max_rel = (u.max() - b.h0).abs() / b.h0;

    let strip = build_domain(&DomainSpec::straight_strip(2.0 * PI, PI / 2.0), 0.05).unwrap();
    let (l1, us, ah, _) = scaled_eigen(&strip, -1.0);
    let t5 = check_t5(&strip, &us, l1, ah).unwrap();
    let strip_ok = t5.pass && t5.flags.iter().any(|f| f == "vacuous");

    let mut above = 0;
    let mut branch_ok = true;
    for p in branch.iter().filter(|p| p.s != 0.0) {
        let s = solve_strip(p.period, &p.coeffs, opts.nx, opts.ny_half, opts.alpha, opts.eig_tol).unwrap();
        let c = check_t5(&s.mesh, &s.u, p.lambda, s.alpha_hat).unwrap();
        if s.max_u > b.h0 {
            above += 1;
            branch_ok &= c.pass && !c.flags.iter().any(|f| f == "vacuous");
        }
    }
    outcome(
        h0_ok && max_rel <= 0.01 && strip_ok && branch_ok,
        format!(
            "h0 {:.7} (1/J1(j01) = {:.7}; the literal 1.926255 sits 2e-5 away), FEM max u off by {max_rel:.2e}, \
             strip T5 vacuous {strip_ok}, branch points with max u > h0: {above} (non-vacuous clause has no instances at |alpha| = 1)",
            b.h0,
            1.0 / J1_AT_J01
        ),
    )
}

fn criterion_4(branch: &[BranchPoint]) -> Outcome {
    let g = 0.01;
    let r = J01;
    let c = check_t4(InradiusTarget::Spec(&DomainSpec::Disk { radius: r }), 1.0, g).unwrap();
    let disk_ok = c.margin.abs() < 2.0 * g;
    let mut min_margin = f64::INFINITY;
    for p in branch.iter().filter(|p| p.converged) {
        let spec = DomainSpec::PeriodicStrip { period: p.period, half_width_coeffs: p.coeffs.clone() };
        min_margin = min_margin.min(check_t4(InradiusTarget::Spec(&spec), p.lambda, g).unwrap().margin);
    }
    outcome(
        disk_ok && min_margin > 0.0,
        format!("disk margin {:.3e} (|.| < {}), min branch margin {min_margin:.4}", c.margin, 2.0 * g),
    )
}

fn criterion_5() -> Outcome {
    let mut devs = Vec::new();
    for h in [0.04, 0.02] {
        let mesh = build_domain(&DomainSpec::straight_strip(2.0 * PI, PI / 2.0), h).unwrap();
        let (l1, u, ah, _) = scaled_eigen(&mesh, -1.0);
        devs.push(p_report(&mesh, l1, &u, ah).max_rel_deviation(ah * ah));
    }
    let strip_ok = devs[0] <= 0.02 && devs[1] <= 0.5 * devs[0];

    let mesh = build_domain(&DomainSpec::Disk { radius: J01 }, 0.02).unwrap();
    let (l1, u, ah, _) = scaled_eigen(&mesh, -1.0);
    let p = p_report(&mesh, l1, &u, ah);
    let expected = (1.0 / J1_AT_J01).powi(2);
    let disk_ok = p.interior_max > ah * ah && !p.criterion_holds;
    outcome(
        strip_ok && disk_ok,
        format!(
            "strip max|P-a^2|/a^2 {:.3e} (h=0.04), {:.3e} (h=0.02), ratio {:.3}; disk interior max P {:.4} vs h0^2 lambda {expected:.4}, criterion_holds {}",
            devs[0],
            devs[1],
            devs[1] / devs[0],
            p.interior_max,
            p.criterion_holds
        ),
    )
}

fn criterion_6() -> Outcome {
    let mesh = build_domain(&DomainSpec::Disk { radius: J01 }, 0.02).unwrap();
    let (l1, u, ah, _) = scaled_eigen(&mesh, -1.0);
    let p = p_report(&mesh, l1, &u, ah);
    let k = 1.0 / J01;
    let worst = p.boundary.iter().map(|b| (b.implied_curvature - k).abs() / k).fold(0.0, f64::max);
    outcome(
        worst <= 0.05,
        format!(
            "max relative deviation of the implied curvature from 1/R over {} boundary vertices {worst:.3e}",
            p.boundary.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let spec = DomainSpec::Ellipse { semi_a: 1.2, semi_b: 1.0 / 1.2 };
    let r = flow_with(&spec, &FlowOptions::new(0.04, 300)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let last = r.last();
    let first = &r.trajectory[0];
    let (pts, _) = r.mesh.loop_polylines().remove(0);
    let c = polygon_centroid(&pts);
    let hd = pts.iter().map(|p| (p.dist(c) - 1.0).abs()).fold(0.0, f64::max);
    let exact = J01 * J01;
    let rel = (last.lambda1 - exact) / exact;
    let drift = (polygon_signed_area(&pts).abs() - first.area).abs() / first.area;
    outcome(
        r.converged && hd <= 0.01 && rel.abs() <= 0.005 && last.step <= 300 && drift <= 1e-3 && secs < 600.0,
        format!(
            "{} steps, Hausdorff {hd:.2e}, lambda1 rel. error {rel:.2e}, area drift {drift:.2e}, {secs:.1} s",
            last.step
        ),
    )
}

fn criterion_8(t1: f64, t4: f64, branch: &[BranchPoint], opts: &BranchOptions) -> Outcome {
    let ratio = (t4 / t1 - 0.5).abs() / 0.5;
    let mut accepted = 0;
    let mut all_ok = true;
    let mut worst_spread: f64 = 0.0;
    let mut min_u_margin = f64::INFINITY;
    for p in branch.iter().filter(|p| p.converged && p.s != 0.0) {
        let spec = DomainSpec::PeriodicStrip { period: p.period, half_width_coeffs: p.coeffs.clone() };
        let t4c = check_t4(InradiusTarget::Spec(&spec), p.lambda, 0.01).unwrap();
        let mesh = strip_cell_mesh_crossed(p.period, &p.coeffs, opts.nx, opts.ny_half);
        let caps = check_cap_heights(&mesh, p.lambda, &sample_lines(&mesh, 16, 0)).unwrap();
        let u_margin = p.max_u - p.alpha_hat.abs() / p.lambda.sqrt();
        worst_spread = worst_spread.max(p.spread);
        min_u_margin = min_u_margin.min(u_margin);
        all_ok &= p.spread <= 1e-6 && u_margin >= -1e-4 && t4c.pass && caps.pass;
        accepted += 1;
    }
    outcome(
        ratio <= 1e-4 && accepted >= 10 && all_ok,
        format!(
            "T*(1) {t1:.6}, T*(4) {t4:.6}, scaling error {ratio:.2e}; {accepted} accepted points, max spread {worst_spread:.2e}, \
             min (max u - |a|/sqrt(lambda)) {min_u_margin:.3e}, T4 and cap heights pass {all_ok}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_extremal-lab");
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        ("eigen", r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": 0.04}"#),
        ("check", r#"{"domain": {"kind": "Ellipse", "semi_a": 1.3, "semi_b": 0.8}, "h": 0.06, "seed": 3}"#),
        ("flow", r#"{"domain": {"kind": "Ellipse", "semi_a": 1.2, "semi_b": 0.8333333333333334}, "h": 0.08}"#),
        ("branch", r#"{"branch": {"lambda": 1.0, "period": 6.283, "s_max": 0.04, "ds": 0.02}}"#),
    ];
    let mut compared = 0;
    let mut bad = Vec::new();
    for (cmd, text) in configs {
        let cfg = tmp.path().join(format!("{cmd}.json"));
        std::fs::write(&cfg, text).unwrap();
        let mut digests = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{cmd}{run}"));
            let status = std::process::Command::new(bin)
                .args([cmd, "--threads", "1", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .env_remove("EXTREMAL_LAB_OUT")
                .stdout(std::process::Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                bad.push(format!("{cmd} exit {status}"));
            }
            let rec = extremal_lab::ExperimentRecord::load(&out.join("record.json")).unwrap();
            digests.push((out, rec.files));
        }
        if digests[0].1 != digests[1].1 {
            bad.push(format!("{cmd} manifests differ"));
        }
        for f in &digests[0].1 {
            let read = |d: &Path| std::fs::read(d.join(&f.path)).unwrap();
            if read(&digests[0].0) != read(&digests[1].0) {
                bad.push(format!("{cmd}/{}", f.path));
            }
            compared += 1;
        }
    }
    outcome(bad.is_empty(), format!("{compared} CSV/JSON/SVG files compared across reruns, mismatches {bad:?}"))
}

fn main() {
    let t = Instant::now();
    let opts = BranchOptions::default();
    let t1 = bifurcation_period(1.0).unwrap();
    let t4 = bifurcation_period(4.0).unwrap();
    let branch = continue_branch(1.0, t1, 0.22, 0.02).unwrap();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(&branch.points, &opts),
        criterion_4(&branch.points),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(t1, t4, &branch.points, &opts),
        criterion_9(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {}: {}: {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.1} s)",
        results.len() - failed,
        results.len(),
        t.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
