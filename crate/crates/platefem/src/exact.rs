//! Closed-form reference solutions on the unit disk for the constant-load
//! simply supported plate.
//!
//! For load `f = 1` and Poisson ratio `sigma` the simply supported disk
//! solution is the radial quartic
//!
//! ```text
//! u(x) = ((5+s) - (6+2s) r^2 + (1+s) r^4) / (64 (1+s)),   r = |x|,
//! ```
//!
//! with midpoint value `(5+s)/(64(1+s))` — `5/64` at `s = 0`. Solving the
//! same problem by splitting into two Poisson problems instead yields
//!
//! ```text
//! u_inf(x) = (3 - 4 r^2 + r^4) / 64,
//! ```
//!
//! independent of `sigma`, with the famously wrong midpoint value `3/64`;
//! its companion `w = -lap u_inf = (1 - r^2)/4` is what the first split
//! solve produces. The clamped-plate solution `(1 - r^2)^2 / 64` (midpoint
//! `1/64`) is included because over-constraining the polygon boundary drives
//! conforming discretizations toward it.

use crate::geo::Point2;
use crate::{Error, Result, SmoothField};

/// The simply supported disk solution for unit load and Poisson ratio
/// `sigma` in `[0, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct ExactDiskSolution {
    pub sigma: f64,
}

impl ExactDiskSolution {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio {sigma} outside [0, 1)"
            )));
        }
        Ok(ExactDiskSolution { sigma })
    }

    fn abcd(self) -> (f64, f64, f64, f64) {
        let s = self.sigma;
        (5.0 + s, 6.0 + 2.0 * s, 1.0 + s, 64.0 * (1.0 + s))
    }

    /// Value at the origin, `(5+s)/(64(1+s))`.
    pub fn origin_value(self) -> f64 {
        let (a, _, _, d) = self.abcd();
        a / d
    }

    pub fn value(self, p: Point2) -> f64 {
        let (a, b, c, d) = self.abcd();
        let r2 = p.dot(p);
        (a - b * r2 + c * r2 * r2) / d
    }

    pub fn gradient(self, p: Point2) -> [f64; 2] {
        let (_, b, c, d) = self.abcd();
        let r2 = p.dot(p);
        let g = (-2.0 * b + 4.0 * c * r2) / d;
        [g * p.x, g * p.y]
    }

    pub fn hessian(self, p: Point2) -> [f64; 3] {
        let (_, b, c, d) = self.abcd();
        let r2 = p.dot(p);
        let g = (-2.0 * b + 4.0 * c * r2) / d;
        let q = 8.0 * c / d;
        [g + q * p.x * p.x, q * p.x * p.y, g + q * p.y * p.y]
    }

    pub fn field(self) -> impl SmoothField {
        DiskField(self)
    }
}

struct DiskField(ExactDiskSolution);

impl SmoothField for DiskField {
    fn value(&self, x: Point2) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: Point2) -> [f64; 2] {
        self.0.gradient(x)
    }
    fn hessian(&self, x: Point2) -> [f64; 3] {
        self.0.hessian(x)
    }
}

/// The incorrect splitting limit `u_inf`, the same for every Poisson ratio.
#[derive(Clone, Copy, Debug, Default)]
pub struct SplittingLimit;

/// Midpoint value of the splitting limit, `3/64`.
pub const SPLITTING_ORIGIN_VALUE: f64 = 3.0 / 64.0;

impl SplittingLimit {
    pub fn value(self, p: Point2) -> f64 {
        let r2 = p.dot(p);
        (3.0 - 4.0 * r2 + r2 * r2) / 64.0
    }

    pub fn gradient(self, p: Point2) -> [f64; 2] {
        let r2 = p.dot(p);
        let g = -0.125 + r2 / 16.0;
        [g * p.x, g * p.y]
    }

    pub fn hessian(self, p: Point2) -> [f64; 3] {
        let r2 = p.dot(p);
        let g = -0.125 + r2 / 16.0;
        [g + 0.125 * p.x * p.x, 0.125 * p.x * p.y, g + 0.125 * p.y * p.y]
    }

    /// The intermediate Poisson solution `w = -lap u_inf = (1 - r^2)/4`.
    pub fn w(self, p: Point2) -> f64 {
        0.25 * (1.0 - p.dot(p))
    }

    pub fn field(self) -> impl SmoothField {
        LimitField
    }
}

struct LimitField;

impl SmoothField for LimitField {
    fn value(&self, x: Point2) -> f64 {
        SplittingLimit.value(x)
    }
    fn gradient(&self, x: Point2) -> [f64; 2] {
        SplittingLimit.gradient(x)
    }
    fn hessian(&self, x: Point2) -> [f64; 3] {
        SplittingLimit.hessian(x)
    }
}

/// The clamped disk solution `(1 - r^2)^2 / 64` for unit load.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClampedDisk;

/// Midpoint value of the clamped solution, `1/64`.
pub const CLAMPED_ORIGIN_VALUE: f64 = 1.0 / 64.0;

impl ClampedDisk {
    pub fn value(self, p: Point2) -> f64 {
        let q = 1.0 - p.dot(p);
        q * q / 64.0
    }

    pub fn gradient(self, p: Point2) -> [f64; 2] {
        let g = -(1.0 - p.dot(p)) / 16.0;
        [g * p.x, g * p.y]
    }

    pub fn hessian(self, p: Point2) -> [f64; 3] {
        let g = -(1.0 - p.dot(p)) / 16.0;
        [g + 0.125 * p.x * p.x, 0.125 * p.x * p.y, g + 0.125 * p.y * p.y]
    }

    pub fn field(self) -> impl SmoothField {
        ClampedField
    }
}

struct ClampedField;

impl SmoothField for ClampedField {
    fn value(&self, x: Point2) -> f64 {
        ClampedDisk.value(x)
    }
    fn gradient(&self, x: Point2) -> [f64; 2] {
        ClampedDisk.gradient(x)
    }
    fn hessian(&self, x: Point2) -> [f64; 3] {
        ClampedDisk.hessian(x)
    }
}
