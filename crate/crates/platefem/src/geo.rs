//! Small plane-geometry primitives shared by every module.

use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Euclidean norm, computed with `hypot` for accuracy near the circle.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Maximum norm `max(|x|, |y|)`.
    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise quarter turn: `(x, y) -> (-y, x)`.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(s * self.x, s * self.y)
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        self.scale(s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when the
/// vertices run counterclockwise.
pub fn signed_area_x2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}
