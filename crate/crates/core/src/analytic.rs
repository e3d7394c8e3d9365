//! Closed-form solutions used as ground truth: Bessel functions of order 0
//! and 1, the radial solution on the critical ball and the strip solution.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("Neumann constant must be negative, got {0}")]
    NonNegativeAlpha(f64),
}

const SERIES_LIMIT: f64 = 8.0;

/// `J_0(x)` for `x >= 0`: power series up to 8, Miller's backward
/// recurrence beyond.
pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

/// `J_1(x)` for `x >= 0`.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// Bessel function of the first kind, order 0 or 1.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    assert!(order <= 1, "only orders 0 and 1 are provided");
    assert!(x >= 0.0, "x must be non-negative");
    if x <= SERIES_LIMIT {
        series(order, x)
    } else {
        let (j0, j1) = miller(x);
        if order == 0 {
            j0
        } else {
            j1
        }
    }
}

fn series(order: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2.0 {
            break;
        }
    }
    sum
}

/// Backward recurrence `J_{n-1} = (2n/x) J_n - J_{n+1}` normalised by
/// `J_0 + 2 sum J_{2k} = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = (x + 40.0 + 12.0 * x.sqrt()) as usize;
    let start = start + (start % 2);
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let (mut j0, mut j1) = (0.0, 0.0);
    for n in (1..=start).rev() {
        let jm1 = 2.0 * n as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        // rescale to stay in range
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
        let m = n - 1;
        if m == 1 {
            j1 = j;
        }
        if m % 2 == 0 && m > 0 {
            norm += 2.0 * j;
        }
        if m == 0 {
            j0 = j;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

/// First positive zero of `J_0`: bisection on `[2, 3]` and a Newton polish.
pub fn j01() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if bessel_j0(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let f = bessel_j0(x);
        let d = -bessel_j1(x);
        if d != 0.0 {
            x -= f / d;
        }
    }
    x
}

/// Radius of the disk whose first Dirichlet eigenvalue is `lambda`.
pub fn r_lambda(lambda: f64) -> Result<f64, AnalyticError> {
    if !(lambda > 0.0) {
        return Err(AnalyticError::NonPositiveLambda(lambda));
    }
    Ok(j01() / lambda.sqrt())
}

/// Radial solution `v(r) = A J_0(sqrt(lambda) r)` on the disk of radius
/// `R_lambda` whose outward normal derivative equals `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSolution {
    pub lambda: f64,
    pub alpha: f64,
    pub radius: f64,
    pub amplitude: f64,
    /// Center value, the maximum of the profile.
    pub h0: f64,
}

impl BallSolution {
    pub fn profile(&self, r: f64) -> f64 {
        self.amplitude * bessel_j0(self.lambda.sqrt() * r)
    }
    /// `dv/dr`.
    pub fn profile_deriv(&self, r: f64) -> f64 {
        -self.amplitude * self.lambda.sqrt() * bessel_j1(self.lambda.sqrt() * r)
    }
    pub fn neumann(&self) -> f64 {
        self.profile_deriv(self.radius)
    }
}

pub fn ball_solution(lambda: f64, alpha: f64) -> Result<BallSolution, AnalyticError> {
    let radius = r_lambda(lambda)?;
    if !(alpha < 0.0) {
        return Err(AnalyticError::NonNegativeAlpha(alpha));
    }
    let amplitude = alpha.abs() / (lambda.sqrt() * bessel_j1(j01()));
    Ok(BallSolution { lambda, alpha, radius, amplitude, h0: amplitude })
}

/// `u(x) = (|alpha|/sqrt(lambda)) sin(sqrt(lambda) x)` on `[0, pi/sqrt(lambda)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripSolution {
    pub lambda: f64,
    pub alpha: f64,
    pub width: f64,
    pub max: f64,
}

impl StripSolution {
    pub fn profile(&self, x: f64) -> f64 {
        self.max * (self.lambda.sqrt() * x).sin()
    }
    pub fn profile_deriv(&self, x: f64) -> f64 {
        self.alpha.abs() * (self.lambda.sqrt() * x).cos()
    }
    /// Outward normal derivatives at `x = 0` and `x = width`.
    pub fn wall_neumann(&self) -> (f64, f64) {
        (-self.profile_deriv(0.0), self.profile_deriv(self.width))
    }
}

pub fn strip_solution(lambda: f64, alpha: f64) -> Result<StripSolution, AnalyticError> {
    if !(lambda > 0.0) {
        return Err(AnalyticError::NonPositiveLambda(lambda));
    }
    if !(alpha < 0.0) {
        return Err(AnalyticError::NonNegativeAlpha(alpha));
    }
    Ok(StripSolution { lambda, alpha, width: PI / lambda.sqrt(), max: alpha.abs() / lambda.sqrt() })
}
