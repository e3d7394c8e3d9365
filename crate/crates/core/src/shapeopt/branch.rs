use super::ShapeError;
use crate::fem::{eigen_smallest, neumann_trace, EigenOptions, NonlinearitySpec, ScalarField, System};
use crate::geom2d::{strip_cell_mesh_crossed, Mesh};
use crate::overdet::recovery::solve_dense;
use crate::overdet::report_from_edges;
use crate::par;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Eigenpair and Neumann data of one strip cell `{|y| < w(x)}` on the
/// structured mesh, with `u` scaled so the mean Neumann value is `alpha`.
#[derive(Clone, Debug)]
pub struct StripSolve {
    pub mesh: Mesh,
    pub lambda1: f64,
    pub u: ScalarField,
    pub alpha_hat: f64,
    pub spread: f64,
    pub max_u: f64,
    /// Nodal trace on the upper wall at `x_i = i T / nx`, `i < nx`.
    pub wall_trace: Vec<f64>,
}

impl StripSolve {
    /// Cosine coefficient `k` of `g / mean(g) − 1` on the upper wall.
    pub fn mode(&self, k: usize) -> f64 {
        let n = self.wall_trace.len();
        let mean = self.wall_trace.iter().sum::<f64>() / n as f64;
        let s: f64 = self
            .wall_trace
            .iter()
            .enumerate()
            .map(|(i, g)| (g / mean - 1.0) * (TAU * (k * i) as f64 / n as f64).cos())
            .sum();
        2.0 * s / n as f64
    }
}

pub fn solve_strip(
    period: f64,
    coeffs: &[f64],
    nx: usize,
    ny_half: usize,
    alpha: f64,
    eig_tol: f64,
) -> Result<StripSolve, ShapeError> {
    let mesh = strip_cell_mesh_crossed(period, coeffs, nx, ny_half);
    let sys = System::dirichlet(&mesh)?;
    let pair = eigen_smallest(&sys, &EigenOptions { tol: eig_tol, polish: 3, ..EigenOptions::default() })?;
    let f = NonlinearitySpec::Linear { lambda: pair.lambda };
    let trace = neumann_trace(&mesh, &pair.u, &f)?;
    let rep = report_from_edges(&mesh, &trace.edge)?;
    let scale = alpha / rep.alpha_hat;
    let u = ScalarField::new(pair.u.values.iter().map(|v| v * scale).collect());
    // node (i, j) of the structured mesh has index i (2 ny_half + 1) + j
    let ny = 2 * ny_half;
    let wall_trace = (0..nx).map(|i| trace.vertex[i * (ny + 1) + ny] * scale).collect();
    Ok(StripSolve {
        max_u: u.max(),
        mesh,
        lambda1: pair.lambda,
        u,
        alpha_hat: alpha,
        spread: rep.rel_spread,
        wall_trace,
    })
}

/// Coefficients of the shape shifted by half a period: `c_k ↦ (−1)^k c_k`.
pub fn mirror_coeffs(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -v }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationOptions {
    pub nx: usize,
    pub ny_half: usize,
    /// Scan points on `T √λ ∈ [0.1, 50]`, log spaced.
    pub samples: usize,
    /// Perturbation amplitude relative to the half-width.
    pub eps: f64,
    pub rel_tol: f64,
    pub eig_tol: f64,
}

impl Default for BifurcationOptions {
    fn default() -> Self {
        BifurcationOptions { nx: 48, ny_half: 12, samples: 60, eps: 1e-5, rel_tol: 1e-6, eig_tol: 1e-9 }
    }
}

/// Linear response `μ(T)` of the first Neumann mode to the boundary
/// perturbation `w = c₀ (1 + ε cos(2πx/T))` of the straight strip of width
/// `π/√λ`: central differences at `ε` and `ε/2`, Richardson extrapolated.
pub fn mu_coefficient(lambda: f64, period: f64, opts: &BifurcationOptions) -> Result<f64, ShapeError> {
    let c0 = PI / (2.0 * lambda.sqrt());
    let m1 = |e: f64| -> Result<f64, ShapeError> {
        Ok(solve_strip(period, &[c0, e * c0], opts.nx, opts.ny_half, -1.0, opts.eig_tol)?.mode(1))
    };
    let d = |e: f64| -> Result<f64, ShapeError> { Ok((m1(e)? - m1(-e)?) / (2.0 * e)) };
    let (d1, d2) = (d(opts.eps)?, d(0.5 * opts.eps)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `μ` at `samples` log-spaced periods `T √λ ∈ [0.1, 50]`.
pub fn mu_scan(lambda: f64, opts: &BifurcationOptions) -> Result<Vec<(f64, f64)>, ShapeError> {
    if !(lambda > 0.0) {
        return Err(ShapeError::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let n = opts.samples.max(2);
    let periods: Vec<f64> = (0..n).map(|j| 0.1 * 500f64.powf(j as f64 / (n - 1) as f64) / lambda.sqrt()).collect();
    let mus = par::map_slice(&periods, |&t| mu_coefficient(lambda, t, opts));
    periods.into_iter().zip(mus).map(|(t, m)| Ok((t, m?))).collect()
}

pub fn bifurcation_period(lambda: f64) -> Result<f64, ShapeError> {
    bifurcation_period_with(lambda, &BifurcationOptions::default())
}

/// Period `T*` at which the straight strip of width `π/√λ` bifurcates: the
/// first sign change of `μ(T)`, refined by bisection.
pub fn bifurcation_period_with(lambda: f64, opts: &BifurcationOptions) -> Result<f64, ShapeError> {
    let scan = mu_scan(lambda, opts)?;
    let k = scan.windows(2).position(|w| w[0].1.signum() != w[1].1.signum()).ok_or(ShapeError::NoSignChange)?;
    let (mut lo, mut hi) = (scan[k], scan[k + 1]);
    while (hi.0 - lo.0) > opts.rel_tol * lo.0 {
        let t = 0.5 * (lo.0 + hi.0);
        let m = mu_coefficient(lambda, t, opts)?;
        if m.signum() == lo.1.signum() {
            lo = (t, m);
        } else {
            hi = (t, m);
        }
    }
    Ok(0.5 * (lo.0 + hi.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions {
    /// Highest cosine mode `N` of the half-width.
    pub n_modes: usize,
    pub nx: usize,
    pub ny_half: usize,
    /// Mean Neumann value the solutions are normalised to.
    pub alpha: f64,
    pub eig_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub fd_step: f64,
    pub max_step_halvings: usize,
    /// Largest accepted `|c_N| / |c_1|`.
    pub truncation_tol: f64,
    pub max_points: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            n_modes: 12,
            nx: 48,
            ny_half: 12,
            alpha: -1.0,
            eig_tol: 1e-9,
            newton_tol: 1e-10,
            max_newton: 12,
            fd_step: 1e-6,
            max_step_halvings: 4,
            truncation_tol: 1e-8,
            max_points: 200,
        }
    }
}

/// One point of the symmetric periodic strip branch, rescaled so that
/// `λ₁ = lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub period: f64,
    /// Amplitude `c_1` of the first cosine mode.
    pub s: f64,
    pub coeffs: Vec<f64>,
    pub lambda: f64,
    pub alpha_hat: f64,
    pub spread: f64,
    pub max_u: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Why the continuation stopped early, if it did.
    pub stopped: Option<ShapeError>,
}

pub fn continue_branch(lambda: f64, period: f64, s_max: f64, ds: f64) -> Result<Branch, ShapeError> {
    continue_branch_with(lambda, period, s_max, ds, &BranchOptions::default())
}

/// Unknowns in units of the initial half-width and period:
/// `y = (c_0 .. c_N, T) / (c₀, .., c₀, T₀)`.
struct Problem<'a> {
    o: &'a BranchOptions,
    c0: f64,
    t0: f64,
}

impl Problem<'_> {
    fn unscale(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let n = self.o.n_modes;
        (y[..=n].iter().map(|v| v * self.c0).collect(), y[n + 1] * self.t0)
    }

    /// Area per period (relative to the initial one) and Neumann modes
    /// `1..=N`.
    fn residual(&self, y: &[f64]) -> Result<Vec<f64>, ShapeError> {
        let (c, t) = self.unscale(y);
        let sol = solve_strip(t, &c, self.o.nx, self.o.ny_half, self.o.alpha, self.o.eig_tol)?;
        let mut f = vec![c[0] * t / (self.c0 * self.t0) - 1.0];
        f.extend((1..=self.o.n_modes).map(|k| sol.mode(k)));
        Ok(f)
    }

    /// Newton on `F(y) = 0` plus `extra(y) = 0`, with `extra` affine
    /// (`a · y = b`). Forward-difference Jacobian, columns in parallel.
    fn newton(&self, mut y: Vec<f64>, a: &[f64], b: f64) -> Result<Vec<f64>, f64> {
        let m = y.len();
        let full = |y: &[f64]| -> Result<Vec<f64>, ShapeError> {
            let mut f = self.residual(y)?;
            f.push(a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() - b);
            Ok(f)
        };
        let norm = |f: &[f64]| f.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let mut f = full(&y).map_err(|_| f64::INFINITY)?;
        let mut jac: Option<Vec<Vec<f64>>> = None;
        let mut last = norm(&f);
        for _ in 0..self.o.max_newton {
            if norm(&f) <= self.o.newton_tol {
                return Ok(y);
            }
            if jac.is_none() {
                let h = self.o.fd_step;
                let cols = par::map_range(m, |j| {
                    let mut yj = y.clone();
                    yj[j] += h;
                    full(&yj).map(|fj| fj.iter().zip(&f).map(|(p, q)| (p - q) / h).collect::<Vec<f64>>())
                });
                let mut rows = vec![vec![0.0; m]; m];
                for (j, col) in cols.into_iter().enumerate() {
                    let col = col.map_err(|_| norm(&f))?;
                    for i in 0..m {
                        rows[i][j] = col[i];
                    }
                }
                jac = Some(rows);
            }
            let step = solve_dense(jac.clone().unwrap(), f.iter().map(|v| -v).collect()).ok_or(norm(&f))?;
            for (yi, d) in y.iter_mut().zip(&step) {
                *yi += d;
            }
            f = full(&y).map_err(|_| f64::INFINITY)?;
            let now = norm(&f);
            if !now.is_finite() || now > 2.0 * last {
                return Err(now);
            }
            if now > 0.25 * last {
                jac = None;
            }
            last = now;
        }
        if norm(&f) <= self.o.newton_tol {
            Ok(y)
        } else {
            Err(norm(&f))
        }
    }

    fn point(&self, lambda: f64, y: &[f64]) -> Result<BranchPoint, ShapeError> {
        let (c, t) = self.unscale(y);
        let sol = solve_strip(t, &c, self.o.nx, self.o.ny_half, self.o.alpha, self.o.eig_tol)?;
        // rescale lengths so that λ₁ = lambda
        let kappa = (sol.lambda1 / lambda).sqrt();
        let coeffs: Vec<f64> = c.iter().map(|v| v * kappa).collect();
        let period = t * kappa;
        let sol = solve_strip(period, &coeffs, self.o.nx, self.o.ny_half, self.o.alpha, self.o.eig_tol)?;
        Ok(BranchPoint {
            period,
            s: coeffs[1],
            coeffs,
            lambda: sol.lambda1,
            alpha_hat: sol.alpha_hat,
            spread: sol.spread,
            max_u: sol.max_u,
            converged: true,
        })
    }
}

/// Pseudo-arclength continuation of the symmetric strip branch that leaves
/// the straight strip near period `period`. The first two points fix
/// `c_1`; later points follow the secant with an arclength constraint.
/// Unknowns are `c_0..c_N` and the period, with the area per period held
/// fixed; every accepted point is rescaled to `λ₁ = lambda`.
pub fn continue_branch_with(
    lambda: f64,
    period: f64,
    s_max: f64,
    ds: f64,
    o: &BranchOptions,
) -> Result<Branch, ShapeError> {
    if !(lambda > 0.0 && period > 0.0 && ds > 0.0 && s_max > 0.0) || o.n_modes < 1 || !o.nx.is_multiple_of(2) {
        return Err(ShapeError::InvalidInput("continuation needs λ, T, ds, s_max > 0 and even nx".into()));
    }
    if o.nx < 4 * o.n_modes {
        return Err(ShapeError::InvalidInput(format!("nx = {} cannot resolve {} modes", o.nx, o.n_modes)));
    }
    let n = o.n_modes;
    let c0 = PI / (2.0 * lambda.sqrt());
    let pr = Problem { o, c0, t0: period };
    let mut trivial = vec![0.0; n + 2];
    trivial[0] = 1.0;
    trivial[n + 1] = 1.0;
    let mut points = vec![pr.point(lambda, &trivial)?];
    let mut path: Vec<Vec<f64>> = vec![trivial.clone()];
    let mut step = ds / c0;
    let mut halvings = 0;
    let mut stopped = None;

    while points.len() < o.max_points {
        let last = path.last().unwrap().clone();
        let (guess, a, b) = if path.len() < 3 {
            // natural parameter: c_1 = s
            let s1 = last[1] + step;
            let mut g = last.clone();
            g[1] = s1;
            let mut a = vec![0.0; n + 2];
            a[1] = 1.0;
            (g, a, s1)
        } else {
            let prev = &path[path.len() - 2];
            let d: Vec<f64> = last.iter().zip(prev).map(|(p, q)| p - q).collect();
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let t: Vec<f64> = d.iter().map(|x| x / len).collect();
            let g: Vec<f64> = last.iter().zip(&t).map(|(p, q)| p + step * q).collect();
            let b = t.iter().zip(&g).map(|(p, q)| p * q).sum();
            (g, t, b)
        };
        match pr.newton(guess, &a, b) {
            Ok(y) => {
                let ratio = (y[n] / y[1]).abs();
                if ratio > o.truncation_tol {
                    stopped = Some(ShapeError::TruncationInsufficient { ratio });
                    break;
                }
                let p = pr.point(lambda, &y)?;
                let done = p.s.abs() >= s_max;
                points.push(p);
                path.push(y);
                halvings = 0;
                step = ds / c0;
                if done {
                    break;
                }
            }
            Err(residual) => {
                halvings += 1;
                if halvings > o.max_step_halvings {
                    stopped = Some(ShapeError::NewtonDiverged { s: last[1] * c0, residual });
                    break;
                }
                step *= 0.5;
            }
        }
    }
    Ok(Branch { points, stopped })
}

/// Branch as CSV with columns `T,s,c_0..c_N,alpha_hat,spread,max_u,lambda`.
pub fn branch_csv(points: &[BranchPoint]) -> String {
    let n = points.first().map_or(0, |p| p.coeffs.len());
    let mut s = String::from("T,s");
    for k in 0..n {
        s.push_str(&format!(",c_{k}"));
    }
    s.push_str(",alpha_hat,spread,max_u,lambda\n");
    for p in points {
        s.push_str(&format!("{:.15e},{:.15e}", p.period, p.s));
        for c in &p.coeffs {
            s.push_str(&format!(",{c:.15e}"));
        }
        s.push_str(&format!(",{:.15e},{:.15e},{:.15e},{:.15e}\n", p.alpha_hat, p.spread, p.max_u, p.lambda));
    }
    s
}
