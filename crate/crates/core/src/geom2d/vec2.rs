use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A point or vector in the plane. Serializes as `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2(pub f64, pub f64);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2(0.0, 0.0);

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Vec2(x, y)
    }
    #[inline]
    pub fn x(self) -> f64 {
        self.0
    }
    #[inline]
    pub fn y(self) -> f64 {
        self.1
    }
    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.0 * o.0 + self.1 * o.1
    }
    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.0 * o.1 - self.1 * o.0
    }
    #[inline]
    pub fn norm(self) -> f64 {
        self.0.hypot(self.1)
    }
    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }
    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2(self.0 / n, self.1 / n)
    }
    /// Counterclockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2(-self.1, self.0)
    }
    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2(self.0 + o.0, self.1 + o.1)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.0 += o.0;
        self.1 += o.1;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2(self.0 - o.0, self.1 - o.1)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2(self.0 * s, self.1 * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2(-self.0, -self.1)
    }
}
