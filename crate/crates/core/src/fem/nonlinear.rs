use super::{FemError, ProfileLu, ScalarField, SparseSym, System};
use crate::geom2d::Mesh;
use serde::{Deserialize, Serialize};

/// Right-hand side `f` of `Δu + f(u) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NonlinearitySpec {
    Linear {
        lambda: f64,
    },
    AllenCahn,
    /// Piecewise-linear interpolation of `values` at `breakpoints`, linearly
    /// extrapolated outside.
    Tabulated {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<(), FemError> {
        match self {
            NonlinearitySpec::Linear { lambda } if !lambda.is_finite() => {
                Err(FemError::InvalidNonlinearity("lambda must be finite".into()))
            }
            NonlinearitySpec::Tabulated { breakpoints, values, lipschitz } => {
                if breakpoints.len() < 2 || breakpoints.len() != values.len() {
                    return Err(FemError::InvalidNonlinearity(
                        "need matching breakpoints and values, at least two".into(),
                    ));
                }
                if !lipschitz.is_finite() || *lipschitz < 0.0 {
                    return Err(FemError::InvalidNonlinearity("Lipschitz constant must be finite".into()));
                }
                for i in 1..breakpoints.len() {
                    let dx = breakpoints[i] - breakpoints[i - 1];
                    if !(dx > 0.0) {
                        return Err(FemError::InvalidNonlinearity("breakpoints must increase".into()));
                    }
                    let slope = (values[i] - values[i - 1]) / dx;
                    if slope.abs() > lipschitz * (1.0 + 1e-12) {
                        return Err(FemError::InvalidNonlinearity(format!("slope {slope} exceeds Lipschitz constant")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn segment(bp: &[f64], x: f64) -> usize {
        match bp.partition_point(|&b| b <= x) {
            0 => 0,
            i if i >= bp.len() => bp.len() - 2,
            i => i - 1,
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        match self {
            NonlinearitySpec::Linear { lambda } => lambda * u,
            NonlinearitySpec::AllenCahn => u - u * u * u,
            NonlinearitySpec::Tabulated { breakpoints: bp, values: v, .. } => {
                let i = Self::segment(bp, u);
                v[i] + (v[i + 1] - v[i]) * (u - bp[i]) / (bp[i + 1] - bp[i])
            }
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match self {
            NonlinearitySpec::Linear { lambda } => *lambda,
            NonlinearitySpec::AllenCahn => 1.0 - 3.0 * u * u,
            NonlinearitySpec::Tabulated { breakpoints: bp, values: v, .. } => {
                let i = Self::segment(bp, u);
                (v[i + 1] - v[i]) / (bp[i + 1] - bp[i])
            }
        }
    }

    /// `F(u) = ∫₀^u f`; exact for the tabulated case since `f` is piecewise
    /// linear (trapezoid on every piece).
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            NonlinearitySpec::Linear { lambda } => 0.5 * lambda * u * u,
            NonlinearitySpec::AllenCahn => 0.5 * u * u - 0.25 * u.powi(4),
            NonlinearitySpec::Tabulated { breakpoints: bp, .. } => {
                let (a, b, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
                let mut knots = vec![a];
                knots.extend(bp.iter().copied().filter(|&x| x > a && x < b));
                knots.push(b);
                let s: f64 = knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.f(w[0]) + self.f(w[1]))).sum();
                sign * s
            }
        }
    }

    /// `f(t) ≥ λ t` on a 10⁴-point grid over `(0, t_max]`.
    pub fn satisfies_p2(&self, lambda: f64, t_max: f64) -> bool {
        const N: usize = 10_000;
        (1..=N).all(|i| {
            let t = t_max * i as f64 / N as f64;
            self.f(t) >= lambda * t - 1e-14 * t.abs().max(1.0)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when `‖R‖∞ ≤ tol (1 + ‖u‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemilinearSolution {
    pub u: ScalarField,
    pub iterations: usize,
    /// Final `‖M f(u) − K u‖∞`.
    pub residual: f64,
    /// Converged to the zero field.
    pub trivial: bool,
}

fn residual(sys: &System, f: &NonlinearitySpec, x: &[f64]) -> Vec<f64> {
    let fx: Vec<f64> = x.iter().map(|&v| f.f(v)).collect();
    let mf = sys.m.matvec(&fx);
    let kx = sys.k.matvec(x);
    mf.iter().zip(&kx).map(|(a, b)| a - b).collect()
}

/// Jacobian `M diag(f'(u)) − K` of the discrete residual.
pub fn jacobian(sys: &System, f: &NonlinearitySpec, x: &[f64]) -> SparseSym {
    let d: Vec<f64> = x.iter().map(|&v| f.df(v)).collect();
    SparseSym::combine(-1.0, &sys.k, 1.0, &sys.m, Some(&d))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Damped Newton for `M f(u) − K u = 0` with `u = 0` on the boundary.
pub fn solve_semilinear(mesh: &Mesh, f: &NonlinearitySpec, u0: &ScalarField) -> Result<SemilinearSolution, FemError> {
    let sys = System::dirichlet(mesh)?;
    solve_semilinear_with(&sys, f, u0, &NewtonOptions::default())
}

pub fn solve_semilinear_with(
    sys: &System,
    f: &NonlinearitySpec,
    u0: &ScalarField,
    opts: &NewtonOptions,
) -> Result<SemilinearSolution, FemError> {
    f.validate()?;
    if u0.len() != sys.dofs.map.len() {
        return Err(FemError::LengthMismatch { expected: sys.dofs.map.len(), got: u0.len() });
    }
    let mut x = sys.dofs.gather(&u0.values);
    let mut r = residual(sys, f, &x);
    let mut rn = inf_norm(&r);
    let mut it = 0;
    while rn > opts.tol * (1.0 + inf_norm(&x)) {
        if it == opts.max_iter {
            return Err(FemError::NewtonDiverged { iteration: it, residual: rn });
        }
        it += 1;
        let j = jacobian(sys, f, &x);
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = ProfileLu::factor(&j)?.solve(&minus_r);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
            let rt = residual(sys, f, &trial);
            let rtn = inf_norm(&rt);
            if rtn <= (1.0 - 1e-4 * t) * rn || rtn <= opts.tol * (1.0 + inf_norm(&trial)) {
                x = trial;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(FemError::NewtonDiverged { iteration: it, residual: rn });
        }
    }
    let u = sys.dofs.scatter(&x);
    let min = u.iter().cloned().fold(0.0, f64::min);
    if min < -1e-8 {
        return Err(FemError::NonPositiveSolution { min });
    }
    let trivial = inf_norm(&u) <= 1e-12;
    Ok(SemilinearSolution { u: ScalarField::new(u), iterations: it, residual: rn, trivial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::eigen_on_mesh;
    use crate::geom2d::{build_domain, DomainSpec, Vec2};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn antiderivatives() {
        let ac = NonlinearitySpec::AllenCahn;
        assert!((ac.antiderivative(0.5) - (0.125 - 0.015625)).abs() < 1e-15);
        let lin = NonlinearitySpec::Linear { lambda: 3.0 };
        assert_eq!(lin.antiderivative(2.0), 6.0);
        let tab = NonlinearitySpec::Tabulated {
            breakpoints: vec![-1.0, 0.0, 1.0, 2.0],
            values: vec![-1.0, 0.0, 1.0, 1.0],
            lipschitz: 1.0,
        };
        tab.validate().unwrap();
        assert!((tab.antiderivative(1.5) - 1.0).abs() < 1e-15);
        assert!((tab.antiderivative(-0.5) - 0.125).abs() < 1e-15);
        assert!((tab.f(3.0) - 1.0).abs() < 1e-15 && (tab.f(-2.0) + 2.0).abs() < 1e-15);
        let bad = NonlinearitySpec::Tabulated { breakpoints: vec![0.0, 1.0], values: vec![0.0, 5.0], lipschitz: 1.0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn p2_property() {
        assert!(NonlinearitySpec::Linear { lambda: 2.0 }.satisfies_p2(2.0, 5.0));
        assert!(!NonlinearitySpec::Linear { lambda: 1.0 }.satisfies_p2(2.0, 5.0));
        assert!(!NonlinearitySpec::AllenCahn.satisfies_p2(1.0, 1.0));
        assert!(NonlinearitySpec::AllenCahn.satisfies_p2(0.0, 1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.15).unwrap();
        let sys = System::dirichlet(&mesh).unwrap();
        let f = NonlinearitySpec::AllenCahn;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..sys.k.n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let j = jacobian(&sys, &f, &x);
        for _ in 0..20 {
            let d: Vec<f64> = (0..sys.k.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eps = 1e-5;
            let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
            let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
            let (rp, rm) = (residual(&sys, &f, &xp), residual(&sys, &f, &xm));
            let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            let jd = j.matvec(&d);
            let err: f64 = fd.iter().zip(&jd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = jd.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err <= 1e-6 * scale, "{err} {scale}");
        }
    }

    #[test]
    fn linear_at_the_eigenvalue_keeps_the_eigenfunction() {
        let mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.1).unwrap();
        let (_, pair) = eigen_on_mesh(&mesh).unwrap();
        let f = NonlinearitySpec::Linear { lambda: pair.lambda };
        let s = solve_semilinear(&mesh, &f, &pair.u).unwrap();
        assert!(s.iterations <= 1);
        let ratio = s.u.values[s.u.argmax()] / pair.u.values[s.u.argmax()];
        for (a, b) in s.u.values.iter().zip(&pair.u.values) {
            assert!((a - ratio * b).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_off_spectrum_gives_the_trivial_solution() {
        let mesh = build_domain(&DomainSpec::unit_square(), 0.1).unwrap();
        let s =
            solve_semilinear(&mesh, &NonlinearitySpec::Linear { lambda: 5.0 }, &ScalarField::zeros(mesh.n_vertices()))
                .unwrap();
        assert!(s.trivial);
    }

    #[test]
    fn discrete_maximum_principle_surrogate() {
        let mesh = build_domain(&DomainSpec::Ellipse { semi_a: 1.5, semi_b: 1.0 }, 0.08).unwrap();
        let sys = System::dirichlet(&mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let w: Vec<f64> = (0..sys.k.n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let u = ProfileLu::factor(&sys.k).unwrap().solve(&sys.m.matvec(&w));
            assert!(u.iter().all(|&v| v >= -1e-10));
        }
    }

    /// `u'' + u − u³ = 0`, `u(0) = u(L) = 0`: shoot on `u'(0)` with RK4 and
    /// bisect so that `u(L/2)` has zero slope.
    fn shooting_max(width: f64) -> f64 {
        let rhs = |y: [f64; 2]| [y[1], -(y[0] - y[0].powi(3))];
        let run = |s: f64| {
            let n = 20_000;
            let dt = 0.5 * width / n as f64;
            let mut y = [0.0, s];
            for _ in 0..n {
                let k1 = rhs(y);
                let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
                let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
                let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
                y[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            }
            y
        };
        let (mut lo, mut hi) = (1e-6, 0.7);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if run(mid)[1] > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        run(0.5 * (lo + hi))[0]
    }

    #[test]
    fn allen_cahn_on_a_wide_strip_matches_shooting() {
        let width = PI * 2f64.sqrt();
        let spec = DomainSpec::straight_strip(1.0, 0.5 * width);
        let mesh = build_domain(&spec, 0.05).unwrap();
        let c = 0.5 * width;
        let u0 = ScalarField::from_fn(&mesh, |p: Vec2| 0.9 * (PI * p.1 / (2.0 * c)).cos());
        let s = solve_semilinear(&mesh, &NonlinearitySpec::AllenCahn, &u0).unwrap();
        assert!(!s.trivial);
        let max = s.u.max();
        let oracle = shooting_max(width);
        assert!(max < 1.0);
        assert!((max - oracle).abs() < 2e-3, "{max} vs {oracle}");
    }
}
