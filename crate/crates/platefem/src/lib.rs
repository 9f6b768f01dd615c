//! Finite-element laboratory for the simply supported Kirchhoff plate (the
//! biharmonic problem) on polygonal approximations of the unit disk.
//!
//! The point of the crate is a classical trap: triangulate the disk, impose
//! simple support on the polygon, refine, and several perfectly reasonable
//! discretizations converge to the *wrong* plate. The crate provides one
//! mesh family (corrected uniform refinements of an inscribed square fan),
//! four discretizations of the same model problem, and a benchmark driver
//! that measures each method against the closed-form disk solution:
//!
//! * [`argyris`] — conforming C¹ quintics with four boundary treatments
//!   (full simple support, nodal-only relaxation, and two penalty variants),
//! * [`dkt`] — the discrete Kirchhoff triangle,
//! * [`dg`] — a symmetric interior-penalty discontinuous Galerkin scheme,
//! * [`splitting`] — the naive two-Poisson operator split, which lands on
//!   the wrong limit by construction.
//!
//! Supporting layers: [`geo`] (plane primitives), [`poly`] (bivariate
//! polynomial calculus), [`quadrature`] (Gaussian rules on triangles and
//! edges), [`mesh`] (the disk triangulations), [`sparse`] (symmetric CSR,
//! linear constraints, direct/iterative solves), [`exact`] (closed-form
//! reference solutions), [`bench`] (convergence studies and diagnostics),
//! and [`io`] (mesh/VTU/CSV/MatrixMarket writers).

pub mod argyris;
pub mod bench;
pub mod dg;
pub mod dkt;
pub mod exact;
pub mod geo;
pub mod io;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod sparse;
pub mod splitting;

use geo::Point2;

/// Errors produced by mesh construction, assembly, and solves.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Refinement past the configured capacity guard.
    #[error("refinement level {requested} exceeds maximum {max}")]
    LevelTooDeep { requested: u32, max: u32 },
    /// Point location failed: the query lies outside the triangulation.
    #[error("point ({x}, {y}) lies outside the triangulation")]
    PointOutside { x: f64, y: f64 },
    /// Degenerate or unacceptably conditioned element.
    #[error("triangle {triangle}: {detail}")]
    BadElement { triangle: usize, detail: String },
    /// A linear constraint block is malformed (bad indices, overlap, ...).
    #[error("constraint block {block}: {detail}")]
    BadConstraint { block: usize, detail: String },
    /// The linear solver failed (not SPD, residual not met, no convergence).
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A scalar field with two continuous derivatives, the common currency for
/// interpolation operators and error measurement. Hessians are packed as
/// `[dxx, dxy, dyy]`.
pub trait SmoothField {
    fn value(&self, x: Point2) -> f64;
    fn gradient(&self, x: Point2) -> [f64; 2];
    fn hessian(&self, x: Point2) -> [f64; 3];
}

/// Wrap three closures as a [`SmoothField`]; handy for test fields.
pub struct AnalyticField<V, G, H>
where
    V: Fn(Point2) -> f64,
    G: Fn(Point2) -> [f64; 2],
    H: Fn(Point2) -> [f64; 3],
{
    pub value: V,
    pub gradient: G,
    pub hessian: H,
}

impl<V, G, H> SmoothField for AnalyticField<V, G, H>
where
    V: Fn(Point2) -> f64,
    G: Fn(Point2) -> [f64; 2],
    H: Fn(Point2) -> [f64; 3],
{
    fn value(&self, x: Point2) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: Point2) -> [f64; 2] {
        (self.gradient)(x)
    }
    fn hessian(&self, x: Point2) -> [f64; 3] {
        (self.hessian)(x)
    }
}
