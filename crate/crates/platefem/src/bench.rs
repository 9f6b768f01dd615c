//! Benchmarks against the closed-form unit-disk plate: per-method solve
//! drivers, midpoint and discrete-H² error metrics, the total-curvature
//! identity diagnostic, the determinant-vanishing diagnostic, and a
//! convergence-study driver with CSV output.
//!
//! The study solves the simply supported plate with a chosen method on a
//! sequence of polygonal disk approximations and reports per level:
//!
//! * `midpoint` — the discrete deflection at the origin, `u_h(0)`;
//! * `delta_mp` — distance of `u_h(0)` to the method's own limit value:
//!   the disk solution `u(0)` for every method except [`Method::Splitting`],
//!   which is measured against the two-Poisson limit `3/64`;
//! * `delta_h2` — `sqrt(a_h(e, e))` with `e = u_h − I_h u`, where `a_h` and
//!   the interpolant `I_h` are the method's own (`NaN` for splitting, which
//!   has no discrete H² form);
//! * `energy` — the discrete strain energy `a_h(u_h, u_h)` (for splitting,
//!   the Dirichlet energy of the displacement iterate);
//! * `rate_mp`, `rate_h2` — base-2 logarithms of consecutive quotients.
//!
//! Comparing midpoint columns across methods exhibits the boundary paradox
//! in one table: nodal-relaxed conforming elements, DKT, and the penalized
//! discontinuous scheme head for `5/64`, the splitting scheme for `3/64`,
//! and fully supported conforming elements for a lower value near the
//! clamped `1/64`.

use std::fmt::Write as _;

use crate::argyris::{self, ArgyrisSpace, BcMode, PlateSolution};
use crate::dg::{self, DgParams, DgSolution, DgSpace};
use crate::dkt::{self, DktSolution, DktSpace};
use crate::exact::{ExactDiskSolution, SplittingLimit, SPLITTING_ORIGIN_VALUE};
use crate::geo::Point2;
use crate::mesh::{build_disk_mesh, P1Field, Triangulation};
use crate::quadrature::{
    edge_quadrature, triangle_quadrature, DEFAULT_EDGE_DEGREE, DEFAULT_VOLUME_DEGREE,
};
use crate::sparse::SymSparseMatrix;
use crate::splitting::{self, P1Space, SplitSolution};
use crate::{Error, Result, SmoothField};

/// Panels used to discretize the unit circle in the curvature identity; each
/// panel carries a Gauss rule, so the boundary integral of smooth data is
/// resolved far below the other error sources.
const CURVATURE_PANELS: usize = 256;

/// Discretization choices the benchmark can drive.
#[derive(Clone, Copy, Debug)]
pub enum Method {
    /// Conforming C¹ quintics with the given boundary treatment.
    Argyris { bc: BcMode },
    /// The discrete Kirchhoff triangle.
    Dkt,
    /// Symmetric interior-penalty discontinuous Galerkin.
    Dg { params: DgParams },
    /// The two-Poisson operator split (converges to the wrong plate).
    Splitting,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Argyris { .. } => "argyris",
            Method::Dkt => "dkt",
            Method::Dg { .. } => "dg",
            Method::Splitting => "splitting",
        }
    }
}

/// A plate problem on the polygonal disk family: Poisson ratio plus method.
/// The load is passed separately to the drivers; the benchmark default is
/// the constant 1.
#[derive(Clone, Copy, Debug)]
pub struct PlateProblem {
    pub sigma: f64,
    pub method: Method,
}

impl PlateProblem {
    /// Check the Poisson ratio range and method/parameter compatibility
    /// (the discontinuous scheme only implements `sigma = 0`).
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio {} outside [0, 1)",
                self.sigma
            )));
        }
        match &self.method {
            Method::Argyris { bc } => bc.validate(),
            Method::Dg { params } => {
                params.validate()?;
                if self.sigma != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "the dg method requires sigma = 0, got {}",
                        self.sigma
                    )));
                }
                Ok(())
            }
            Method::Dkt | Method::Splitting => Ok(()),
        }
    }
}

/// Evaluate the closed-form disk solutions at `x`: the simply supported
/// deflection with its gradient and Hessian, plus the splitting limit.
///
/// Errors if `|x| > 1 + 1e-12`; the closed forms are polynomials, but only
/// their restriction to the disk means anything.
pub fn exact_values(
    sol: ExactDiskSolution,
    x: Point2,
) -> Result<(f64, [f64; 2], [f64; 3], f64)> {
    if x.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}) lies outside the unit disk",
            x.x, x.y
        )));
    }
    Ok((
        sol.value(x),
        sol.gradient(x),
        sol.hessian(x),
        SplittingLimit.value(x),
    ))
}

/// Which limit a midpoint error is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MidpointTarget {
    /// The disk solution `u(0) = (5+sigma)/(64(1+sigma))`.
    Exact,
    /// The splitting limit `3/64`.
    Incorrect,
}

/// The limit a method's midpoint column is expected to approach. Only the
/// splitting scheme targets the incorrect value by construction; the full
/// conforming treatment also misses `u(0)`, which its study rows then show
/// as a stagnating `delta_mp`.
pub fn midpoint_target(method: &Method) -> MidpointTarget {
    match method {
        Method::Splitting => MidpointTarget::Incorrect,
        _ => MidpointTarget::Exact,
    }
}

/// One solved level, keeping the discrete space alive for evaluation.
pub enum StudySolution<'m> {
    Argyris {
        space: ArgyrisSpace<'m>,
        solution: PlateSolution,
    },
    Dkt {
        space: DktSpace<'m>,
        solution: DktSolution,
    },
    Dg {
        space: DgSpace<'m>,
        params: DgParams,
        ah: SymSparseMatrix,
        sh: SymSparseMatrix,
        solution: DgSolution,
    },
    Splitting {
        mesh: &'m Triangulation,
        solution: SplitSolution,
        reduced_dim: usize,
    },
}

/// Solve `problem` on `mesh` with load `f`.
pub fn solve_problem<'m>(
    problem: &PlateProblem,
    mesh: &'m Triangulation,
    f: &dyn Fn(Point2) -> f64,
) -> Result<StudySolution<'m>> {
    problem.validate()?;
    match &problem.method {
        Method::Argyris { bc } => Ok(StudySolution::Argyris {
            space: ArgyrisSpace::new(mesh),
            solution: argyris::solve_plate(mesh, problem.sigma, f, *bc)?,
        }),
        Method::Dkt => Ok(StudySolution::Dkt {
            space: DktSpace::new(mesh),
            solution: dkt::solve_plate(mesh, problem.sigma, f)?,
        }),
        Method::Dg { params } => {
            let space = DgSpace::new(mesh, params.degree)?;
            let solution = dg::solve_dg(&space, params, problem.sigma, f)?;
            let ah = dg::assemble_ah(&space)?;
            let sh = dg::assemble_sh(&space, params)?;
            Ok(StudySolution::Dg {
                space,
                params: *params,
                ah,
                sh,
                solution,
            })
        }
        Method::Splitting => {
            let solution = splitting::solve_splitting(mesh, f)?;
            let reduced_dim = mesh.boundary_vertex.iter().filter(|b| !**b).count();
            Ok(StudySolution::Splitting {
                mesh,
                solution,
                reduced_dim,
            })
        }
    }
}

impl StudySolution<'_> {
    /// The discrete deflection at the origin, `u_h(0)`.
    pub fn midpoint(&self) -> Result<f64> {
        match self {
            StudySolution::Argyris { space, solution } => {
                Ok(argyris::evaluate(space, &solution.coeffs, Point2::ORIGIN)?.0)
            }
            StudySolution::Dkt { space, solution } => {
                dkt::evaluate(space, &solution.coeffs, Point2::ORIGIN)
            }
            StudySolution::Dg {
                space, solution, ..
            } => Ok(dg::evaluate(space, &solution.coeffs, Point2::ORIGIN)?.0),
            StudySolution::Splitting { mesh, solution, .. } => {
                solution.u.eval(mesh, Point2::ORIGIN)
            }
        }
    }

    /// Dimension of the linear system actually solved.
    pub fn n_dofs_solved(&self) -> usize {
        match self {
            StudySolution::Argyris { solution, .. } => solution.reduced_dim,
            StudySolution::Dkt { solution, .. } => solution.reduced_dim,
            StudySolution::Dg { space, .. } => space.n_dofs(),
            StudySolution::Splitting { reduced_dim, .. } => *reduced_dim,
        }
    }

    /// `sqrt(a_h(e, e))` with `e = u_h − I_h u`: the discrete H²-type
    /// distance of the solution to the method's own interpolant of the
    /// closed-form disk solution. The bilinear form is the method's own:
    /// the sigma-weighted energy form for conforming quintics, the discrete
    /// Hessian form for DKT, and the penalized form (including the
    /// stabilization part, without which the form is not coercive) for the
    /// discontinuous scheme.
    ///
    /// Errors for the splitting method, which has no discrete H² form.
    pub fn h2_error(&self, sigma: f64, exact: ExactDiskSolution) -> Result<f64> {
        match self {
            StudySolution::Argyris { space, solution } => {
                let interp = argyris::interpolate_canonical(space, &exact.field());
                let e = vec_sub(&solution.coeffs, &interp);
                let breakdown = argyris::energy_breakdown(space, &e)?;
                Ok(breakdown.energy_sq(sigma).max(0.0).sqrt())
            }
            StudySolution::Dkt { space, solution } => {
                let interp = dkt::interpolate(space, &exact.field());
                let e = vec_sub(&solution.coeffs, &interp);
                let breakdown = dkt::energy_breakdown(space, &e)?;
                Ok(breakdown.energy_sq(sigma).max(0.0).sqrt())
            }
            StudySolution::Dg {
                space,
                ah,
                sh,
                solution,
                ..
            } => {
                let interp = dg::interpolate_p2(space, &|x| exact.value(x));
                let e = vec_sub(&solution.coeffs, &interp);
                Ok((ah.quadratic_form(&e) + sh.quadratic_form(&e)).max(0.0).sqrt())
            }
            StudySolution::Splitting { .. } => Err(Error::InvalidArgument(
                "the splitting method has no discrete H² form".into(),
            )),
        }
    }

    /// The discrete strain energy `a_h(u_h, u_h)`; for the splitting scheme,
    /// the Dirichlet energy of the displacement iterate.
    pub fn energy(&self, sigma: f64) -> Result<f64> {
        match self {
            StudySolution::Argyris { space, solution } => {
                Ok(argyris::energy_breakdown(space, &solution.coeffs)?.energy_sq(sigma))
            }
            StudySolution::Dkt { space, solution } => {
                Ok(dkt::energy_breakdown(space, &solution.coeffs)?.energy_sq(sigma))
            }
            StudySolution::Dg {
                ah, sh, solution, ..
            } => Ok(ah.quadratic_form(&solution.coeffs) + sh.quadratic_form(&solution.coeffs)),
            StudySolution::Splitting { mesh, solution, .. } => {
                let stiffness = P1Space::new(mesh).stiffness()?;
                Ok(stiffness.quadratic_form(&solution.u.vertex_values))
            }
        }
    }

    /// Sample the solution at the mesh vertices (averaging over adjacent
    /// elements for the discontinuous scheme), for VTU export.
    pub fn vertex_field(&self) -> Result<P1Field> {
        match self {
            StudySolution::Argyris { space, solution } => Ok(P1Field::new(
                (0..space.mesh.n_vertices())
                    .map(|v| solution.coeffs[space.vertex_dof(v, 0)])
                    .collect(),
            )),
            StudySolution::Dkt { space, solution } => Ok(P1Field::new(
                (0..space.mesh.n_vertices())
                    .map(|v| solution.coeffs[space.vertex_dof(v, 0)])
                    .collect(),
            )),
            StudySolution::Dg {
                space, solution, ..
            } => {
                let mesh = space.mesh;
                let mut sums = vec![0.0; mesh.n_vertices()];
                let mut counts = vec![0usize; mesh.n_vertices()];
                for t in 0..mesh.n_triangles() {
                    for &v in &mesh.triangles[t] {
                        let (value, _, _) =
                            dg::evaluate_in(space, &solution.coeffs, t, mesh.vertices[v])?;
                        sums[v] += value;
                        counts[v] += 1;
                    }
                }
                Ok(P1Field::new(
                    sums.iter()
                        .zip(&counts)
                        .map(|(s, c)| s / (*c).max(1) as f64)
                        .collect(),
                ))
            }
            StudySolution::Splitting { solution, .. } => Ok(solution.u.clone()),
        }
    }
}

/// `|u_h(0) − target|` for the chosen limit value.
pub fn midpoint_error(
    solution: &StudySolution<'_>,
    sol: ExactDiskSolution,
    target: MidpointTarget,
) -> Result<f64> {
    let u0 = solution.midpoint()?;
    let limit = match target {
        MidpointTarget::Exact => sol.origin_value(),
        MidpointTarget::Incorrect => SPLITTING_ORIGIN_VALUE,
    };
    Ok((u0 - limit).abs())
}

fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// One measured refinement level.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h_max: f64,
    /// Dimension of the system solved at this level.
    pub n_dofs: usize,
    /// `u_h(0)`.
    pub midpoint: f64,
    /// `|u_h(0) − limit|` with the method's own limit (see [`midpoint_target`]).
    pub delta_mp: f64,
    /// Discrete H² error; `NaN` for methods without one.
    pub delta_h2: f64,
    /// Discrete strain energy `a_h(u_h, u_h)`.
    pub energy: f64,
    /// `log2(delta_mp(previous) / delta_mp(this))`; `NaN` on the first row
    /// and after a failed row.
    pub rate_mp: f64,
    pub rate_h2: f64,
    /// Set when this level failed; the numeric fields are then `NaN`.
    pub error: Option<String>,
}

/// Solve one level and measure it. The rate fields are left `NaN`; the
/// study driver fills them from consecutive rows.
pub fn measure_level<'m>(
    problem: &PlateProblem,
    mesh: &'m Triangulation,
    f: &dyn Fn(Point2) -> f64,
) -> Result<(ConvergenceRow, StudySolution<'m>)> {
    let exact = ExactDiskSolution::new(problem.sigma)?;
    let solution = solve_problem(problem, mesh, f)?;
    let midpoint = solution.midpoint()?;
    let delta_mp = midpoint_error(&solution, exact, midpoint_target(&problem.method))?;
    let delta_h2 = match problem.method {
        Method::Splitting => f64::NAN,
        _ => solution.h2_error(problem.sigma, exact)?,
    };
    let energy = solution.energy(problem.sigma)?;
    let row = ConvergenceRow {
        level: mesh.level,
        h_max: mesh.h_max(),
        n_dofs: solution.n_dofs_solved(),
        midpoint,
        delta_mp,
        delta_h2,
        energy,
        rate_mp: f64::NAN,
        rate_h2: f64::NAN,
        error: None,
    };
    Ok((row, solution))
}

fn failed_row(level: u32, message: String) -> ConvergenceRow {
    ConvergenceRow {
        level,
        h_max: f64::NAN,
        n_dofs: 0,
        midpoint: f64::NAN,
        delta_mp: f64::NAN,
        delta_h2: f64::NAN,
        energy: f64::NAN,
        rate_mp: f64::NAN,
        rate_h2: f64::NAN,
        error: Some(message),
    }
}

/// Fill the rate columns from consecutive successful rows, in place.
pub fn fill_rates(rows: &mut [ConvergenceRow]) {
    for i in 1..rows.len() {
        if rows[i].error.is_none() && rows[i - 1].error.is_none() {
            rows[i].rate_mp = (rows[i - 1].delta_mp / rows[i].delta_mp).log2();
            rows[i].rate_h2 = (rows[i - 1].delta_h2 / rows[i].delta_h2).log2();
        } else {
            rows[i].rate_mp = f64::NAN;
            rows[i].rate_h2 = f64::NAN;
        }
    }
}

/// Run `problem` over the given refinement levels (nonempty, strictly
/// increasing). A failing level is recorded in its row and the study
/// continues; rates are `log2` quotients of consecutive successful rows.
pub fn convergence_study(
    problem: &PlateProblem,
    levels: &[u32],
    f: &dyn Fn(Point2) -> f64,
) -> Result<Vec<ConvergenceRow>> {
    problem.validate()?;
    convergence_study_with(&|_| Ok(*problem), levels, f)
}

/// As [`convergence_study`], but the problem may depend on the level's mesh.
/// This serves methods whose parameters track the mesh size, like boundary
/// penalties with `eps = h³`.
pub fn convergence_study_with(
    problem_for: &dyn Fn(&Triangulation) -> Result<PlateProblem>,
    levels: &[u32],
    f: &dyn Fn(Point2) -> f64,
) -> Result<Vec<ConvergenceRow>> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level list".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "levels {levels:?} are not strictly increasing"
        )));
    }

    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let row = match build_disk_mesh(level) {
            Ok(mesh) => {
                let measured = problem_for(&mesh)
                    .and_then(|problem| measure_level(&problem, &mesh, f));
                match measured {
                    Ok((row, _)) => row,
                    Err(e) => failed_row(level, e.to_string()),
                }
            }
            Err(e) => failed_row(level, e.to_string()),
        };
        rows.push(row);
    }
    fill_rates(&mut rows);
    Ok(rows)
}

/// CSV header written by [`rows_to_csv`].
pub const CSV_HEADER: &str = "level,h,ndof,midpoint,delta_mp,delta_h2,energy,rate_mp,rate_h2";

/// Serialize study rows as CSV with 17-significant-digit floats (`NaN` for
/// missing values; failed rows keep their level and `NaN` elsewhere).
pub fn rows_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.level,
            row.h_max,
            row.n_dofs,
            row.midpoint,
            row.delta_mp,
            row.delta_h2,
            row.energy,
            row.rate_mp,
            row.rate_h2
        );
    }
    out
}

/// Parse CSV produced by [`rows_to_csv`]. Error descriptions are not part
/// of the format, so parsed rows have `error: None`.
pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "bad CSV header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::InvalidArgument(format!(
                "row {k}: expected 9 fields, got {}",
                fields.len()
            )));
        }
        let bad = |what: &str| Error::InvalidArgument(format!("row {k}: bad {what}"));
        let float = |i: usize, what: &str| -> Result<f64> {
            fields[i].parse().map_err(|_| bad(what))
        };
        rows.push(ConvergenceRow {
            level: fields[0].parse().map_err(|_| bad("level"))?,
            h_max: float(1, "h")?,
            n_dofs: fields[2].parse().map_err(|_| bad("ndof"))?,
            midpoint: float(3, "midpoint")?,
            delta_mp: float(4, "delta_mp")?,
            delta_h2: float(5, "delta_h2")?,
            energy: float(6, "energy")?,
            rate_mp: float(7, "rate_mp")?,
            rate_h2: float(8, "rate_h2")?,
            error: None,
        });
    }
    Ok(rows)
}

/// Both sides of the total-curvature identity for a field vanishing on the
/// unit circle.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureCheck {
    /// `∫_{polygon} det D²v dx` by triangle quadrature.
    pub volume_integral: f64,
    /// `(1/2) ∮_{circle} κ (∂_n v)² ds` with `κ = 1`, by panel quadrature
    /// of the circle parametrization.
    pub boundary_integral: f64,
    /// `|volume_integral − boundary_integral|`.
    pub gap: f64,
    /// Area of the polygonal domain actually integrated over; the area
    /// defect `π − polygon_area` drives the gap for generic fields.
    pub polygon_area: f64,
}

/// Evaluate the curvature identity `∫ det D²v = (1/2) ∮ κ (∂_n v)²` on the
/// level-`level` polygon. The sign pairing (both sides positive for
/// `v = 1 − r²`, where both equal `4π` in the limit) is fixed by that
/// oracle: `det D²v = 4` and `∂_n v = −2` on the circle.
///
/// Errors unless `v` vanishes on the unit circle (checked at 64 samples,
/// tolerance 1e-10) — the identity is a statement about fields with zero
/// boundary trace.
pub fn curvature_identity_check(v: &dyn SmoothField, level: u32) -> Result<CurvatureCheck> {
    curvature_identity_check_with(v, level, DEFAULT_VOLUME_DEGREE, DEFAULT_EDGE_DEGREE)
}

/// As [`curvature_identity_check`] with explicit quadrature degrees.
pub fn curvature_identity_check_with(
    v: &dyn SmoothField,
    level: u32,
    volume_degree: u32,
    edge_degree: u32,
) -> Result<CurvatureCheck> {
    for k in 0..64 {
        let theta = std::f64::consts::TAU * k as f64 / 64.0;
        let p = Point2::new(theta.cos(), theta.sin());
        let trace = v.value(p);
        if trace.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "field does not vanish on the circle: v({}, {}) = {trace}",
                p.x, p.y
            )));
        }
    }

    let mesh = build_disk_mesh(level)?;
    let rule = triangle_quadrature(volume_degree)?;
    let mut volume_integral = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let points = rule.map_to(&mesh.triangle_points(t));
        for (x, w) in points.iter().zip(&rule.weights) {
            let h = v.hessian(*x);
            volume_integral += area * w * (h[0] * h[2] - h[1] * h[1]);
        }
    }

    let edge_rule = edge_quadrature(edge_degree)?;
    let panel = std::f64::consts::TAU / CURVATURE_PANELS as f64;
    let mut boundary_integral = 0.0;
    for k in 0..CURVATURE_PANELS {
        for (q, w) in edge_rule.points.iter().zip(&edge_rule.weights) {
            let theta = (k as f64 + q) * panel;
            let p = Point2::new(theta.cos(), theta.sin());
            let g = v.gradient(p);
            let dn = g[0] * p.x + g[1] * p.y;
            boundary_integral += w * panel * dn * dn;
        }
    }
    boundary_integral *= 0.5;

    Ok(CurvatureCheck {
        volume_integral,
        boundary_integral,
        gap: (volume_integral - boundary_integral).abs(),
        polygon_area: mesh.area(),
    })
}

/// The two sides of the algebraic energy identity
/// `sigma/2 ‖Δv‖² + (1−sigma)/2 ‖D²v‖² = 1/2 ‖Δv‖² − (1−sigma) ∫ det D²v`,
/// which holds for any field because `|D²v|² = (Δv)² − 2 det D²v` pointwise.
#[derive(Clone, Copy, Debug)]
pub struct EnergyIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

/// Evaluate the energy identity from a measured breakdown (`‖Δv‖²`,
/// `‖D²v‖²`, `∫ det D²v`).
pub fn energy_identity_check(
    laplacian_sq: f64,
    hessian_sq: f64,
    det_integral: f64,
    sigma: f64,
) -> EnergyIdentityCheck {
    let lhs = 0.5 * sigma * laplacian_sq + 0.5 * (1.0 - sigma) * hessian_sq;
    let rhs = 0.5 * laplacian_sq - (1.0 - sigma) * det_integral;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    EnergyIdentityCheck {
        lhs,
        rhs,
        rel_gap: (lhs - rhs).abs() / scale,
    }
}

/// Result of the determinant-vanishing diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct DetZeroCheck {
    pub det_integral: f64,
    pub hessian_sq: f64,
}

/// Solve the plate with *fully* supported conforming quintics (`sigma = 0`,
/// load 1) at `level` and integrate `det D²u_h`. Because the discrete field
/// vanishes identically on every straight boundary edge, the total curvature
/// integral collapses to zero — the polygonal mechanism behind the paradox —
/// so `|det_integral|` should be roundoff relative to `hessian_sq`.
pub fn det_zero_check(level: u32) -> Result<DetZeroCheck> {
    let mesh = build_disk_mesh(level)?;
    let solution = argyris::solve_plate(&mesh, 0.0, &|_| 1.0, BcMode::Full)?;
    let space = ArgyrisSpace::new(&mesh);
    let breakdown = argyris::energy_breakdown(&space, &solution.coeffs)?;
    Ok(DetZeroCheck {
        det_integral: breakdown.det_integral,
        hessian_sq: breakdown.hessian_sq,
    })
}
