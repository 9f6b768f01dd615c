//! The conforming C¹ discretization: quintic Argyris elements with four ways
//! of imposing simple support on the polygonal boundary.
//!
//! Each triangle carries the full 21-dimensional quintic space. The element
//! node functionals are value, gradient, and Hessian at the three vertices
//! (6 per vertex) plus the normal derivative at each side midpoint, so the
//! global space is C¹ across interior sides by construction. The element is
//! not affine-equivalent, so shape functions are built per triangle by
//! solving a generalized Vandermonde system in the local frame
//! `xi = (x - centroid) / h_T`; scaling each functional by the matching power
//! of `h_T` keeps that 21x21 system well conditioned on shape-regular meshes.
//!
//! The energy is `sigma (lap v, lap w) + (1 - sigma) (D^2 v, D^2 w)`, and the
//! boundary treatment is selected by [`BcMode`]:
//!
//! * [`BcMode::Full`] — the honest conforming subspace: the quintic trace
//!   vanishes on every boundary side. Imposed per boundary vertex as `v = 0`,
//!   `dv/dt = 0` and `t'(D^2 v)t = 0` for the tangent `t` of each adjacent
//!   boundary side. On the disk approximations this over-constrains the
//!   plate and drives it toward the clamped solution — the paradox in its
//!   conforming form.
//! * [`BcMode::NodalReduced`] — only vertex values are pinned. Nonconforming
//!   in spirit but converges to the right plate.
//! * [`BcMode::Penalty`] — no constraints; adds `1/eps` times the boundary
//!   mass matrix of quintic traces.
//! * [`BcMode::PenaltyVertexQuadrature`] — same penalty evaluated by the
//!   trapezoid rule per boundary side, i.e. a diagonal term at boundary
//!   vertex value dofs. The inexact quadrature relaxes the tangential
//!   derivatives for free, which makes the mode parameter-robust.

use crate::geo::Point2;
use crate::mesh::Triangulation;
use crate::poly::{MonomialBasis, PolyBasis};
use crate::quadrature::{
    edge_quadrature, triangle_quadrature, DEFAULT_EDGE_DEGREE, DEFAULT_VOLUME_DEGREE,
};
use crate::sparse::{
    reduce, solve, ConstraintBlock, LinearConstraintSet, SolverReport, SymSparseMatrix,
    TripletList,
};
use crate::{Error, Result, SmoothField};
use nalgebra::DMatrix;

/// Dofs stored per vertex: value, d1, d2, d11, d12, d22.
pub const VERTEX_DOFS: usize = 6;
/// Local dofs per element: 3 vertices x 6 plus 3 side normal derivatives.
pub const ELEMENT_DOFS: usize = 21;
/// Reject elements whose scaled Vandermonde 1-norm condition exceeds this.
pub const VANDERMONDE_CONDITION_LIMIT: f64 = 1e12;

/// How simple support is imposed on the polygon boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BcMode {
    /// Vanishing quintic trace: `v = 0`, tangential first and second
    /// derivatives zero at every boundary vertex, for every adjacent side.
    Full,
    /// Only `v = 0` at boundary vertices.
    NodalReduced,
    /// Trace penalty `1/eps * (v, w)_{boundary}` with exact edge quadrature.
    Penalty(f64),
    /// Trace penalty evaluated by the per-side trapezoid rule; touches only
    /// vertex value dofs.
    PenaltyVertexQuadrature(f64),
}

impl BcMode {
    pub fn validate(self) -> Result<()> {
        match self {
            BcMode::Penalty(eps) | BcMode::PenaltyVertexQuadrature(eps) => {
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "penalty parameter must be positive, got {eps}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && (0.0..1.0).contains(&sigma)) {
        return Err(Error::InvalidArgument(format!(
            "Poisson ratio must lie in [0, 1), got {sigma}"
        )));
    }
    Ok(())
}

/// Global dof layout over a triangulation: `6 * nv` vertex dofs in the order
/// (value, d1, d2, d11, d12, d22) per vertex, then one midpoint normal
/// derivative per side, signed by the side's fixed unit normal.
pub struct ArgyrisSpace<'m> {
    pub mesh: &'m Triangulation,
}

impl<'m> ArgyrisSpace<'m> {
    pub fn new(mesh: &'m Triangulation) -> Self {
        ArgyrisSpace { mesh }
    }

    pub fn n_dofs(&self) -> usize {
        VERTEX_DOFS * self.mesh.n_vertices() + self.mesh.n_sides()
    }

    /// Global index of component `comp` (0..6) at vertex `v`.
    pub fn vertex_dof(&self, v: usize, comp: usize) -> usize {
        debug_assert!(comp < VERTEX_DOFS);
        VERTEX_DOFS * v + comp
    }

    /// Global index of the normal-derivative dof on side `s`.
    pub fn side_dof(&self, s: usize) -> usize {
        VERTEX_DOFS * self.mesh.n_vertices() + s
    }

    /// The 21 global dofs of triangle `t`, in element-local order: six per
    /// vertex, then the sides opposite local vertices 0, 1, 2.
    pub fn element_dofs(&self, t: usize) -> [usize; ELEMENT_DOFS] {
        let tri = self.mesh.triangles[t];
        let sides = self.mesh.triangle_sides(t);
        let mut dofs = [0usize; ELEMENT_DOFS];
        for i in 0..3 {
            for comp in 0..VERTEX_DOFS {
                dofs[VERTEX_DOFS * i + comp] = self.vertex_dof(tri[i], comp);
            }
        }
        for j in 0..3 {
            dofs[3 * VERTEX_DOFS + j] = self.side_dof(sides[j]);
        }
        dofs
    }
}

/// Shape functions of one triangle: 21 quintics dual to the node functionals.
pub struct ArgyrisElementBasis {
    /// The shapes in the element's local frame; evaluation yields physical
    /// values, gradients, and Hessians.
    pub shapes: PolyBasis,
    /// Functional scaling diagonal used during construction (value 1, first
    /// derivatives `h`, second derivatives `h^2`, side normals `h`).
    pub scaling: [f64; ELEMENT_DOFS],
    /// 1-norm condition estimate of the scaled Vandermonde matrix.
    pub condition: f64,
}

fn matrix_norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Build the dual basis on triangle `t` by solving the scaled generalized
/// Vandermonde system. With the `h_T`-power scaling every matrix entry is a
/// pure local-frame monomial derivative, so conditioning depends only on
/// triangle shape, not size.
pub fn element_basis(mesh: &Triangulation, t: usize) -> Result<ArgyrisElementBasis> {
    let points = mesh.triangle_points(t);
    let center = mesh.centroid(t);
    let h = mesh.triangle_diameter(t);
    let monomials = MonomialBasis::new(5);
    let dim = monomials.dim();
    debug_assert_eq!(dim, ELEMENT_DOFS);

    let mut vandermonde = DMatrix::zeros(dim, dim);
    let mut vals = vec![0.0; dim];
    let mut grads = vec![[0.0; 2]; dim];
    let mut hess = vec![[0.0; 3]; dim];
    for i in 0..3 {
        let xi = (points[i] - center).scale(1.0 / h);
        monomials.values(xi, &mut vals);
        monomials.gradients(xi, &mut grads);
        monomials.hessians(xi, &mut hess);
        for k in 0..dim {
            vandermonde[(VERTEX_DOFS * i, k)] = vals[k];
            vandermonde[(VERTEX_DOFS * i + 1, k)] = grads[k][0];
            vandermonde[(VERTEX_DOFS * i + 2, k)] = grads[k][1];
            vandermonde[(VERTEX_DOFS * i + 3, k)] = hess[k][0];
            vandermonde[(VERTEX_DOFS * i + 4, k)] = hess[k][1];
            vandermonde[(VERTEX_DOFS * i + 5, k)] = hess[k][2];
        }
    }
    let side_ids = mesh.triangle_sides(t);
    for j in 0..3 {
        let side = &mesh.sides[side_ids[j]];
        let xi = (side.midpoint(mesh) - center).scale(1.0 / h);
        monomials.gradients(xi, &mut grads);
        for k in 0..dim {
            vandermonde[(3 * VERTEX_DOFS + j, k)] =
                grads[k][0] * side.normal.x + grads[k][1] * side.normal.y;
        }
    }

    let inverse = vandermonde
        .clone()
        .lu()
        .solve(&DMatrix::identity(dim, dim))
        .ok_or_else(|| Error::BadElement {
            triangle: t,
            detail: "singular Argyris Vandermonde matrix".into(),
        })?;
    let condition = matrix_norm1(&vandermonde) * matrix_norm1(&inverse);
    if !condition.is_finite() || condition > VANDERMONDE_CONDITION_LIMIT {
        return Err(Error::BadElement {
            triangle: t,
            detail: format!(
                "Vandermonde condition estimate {condition:.3e} exceeds {VANDERMONDE_CONDITION_LIMIT:.0e}"
            ),
        });
    }

    // Column b of the inverse is dual to the *scaled* functional b; restore
    // duality to the physical functionals by rescaling each column.
    let mut scaling = [0.0; ELEMENT_DOFS];
    for i in 0..3 {
        scaling[VERTEX_DOFS * i] = 1.0;
        scaling[VERTEX_DOFS * i + 1] = h;
        scaling[VERTEX_DOFS * i + 2] = h;
        scaling[VERTEX_DOFS * i + 3] = h * h;
        scaling[VERTEX_DOFS * i + 4] = h * h;
        scaling[VERTEX_DOFS * i + 5] = h * h;
    }
    for j in 0..3 {
        scaling[3 * VERTEX_DOFS + j] = h;
    }
    let mut coeffs = inverse;
    for b in 0..dim {
        let s = scaling[b];
        for k in 0..dim {
            coeffs[(k, b)] *= s;
        }
    }

    Ok(ArgyrisElementBasis {
        shapes: PolyBasis::new(5, coeffs, center, h),
        scaling,
        condition,
    })
}

/// Canonical interpolation: every dof is the exact node functional of `v`.
/// Reproduces quintics exactly.
pub fn interpolate_canonical(space: &ArgyrisSpace<'_>, v: &dyn SmoothField) -> Vec<f64> {
    let mesh = space.mesh;
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (z, &p) in mesh.vertices.iter().enumerate() {
        coeffs[space.vertex_dof(z, 0)] = v.value(p);
        let g = v.gradient(p);
        coeffs[space.vertex_dof(z, 1)] = g[0];
        coeffs[space.vertex_dof(z, 2)] = g[1];
        let h = v.hessian(p);
        coeffs[space.vertex_dof(z, 3)] = h[0];
        coeffs[space.vertex_dof(z, 4)] = h[1];
        coeffs[space.vertex_dof(z, 5)] = h[2];
    }
    for (s, side) in mesh.sides.iter().enumerate() {
        let g = v.gradient(side.midpoint(mesh));
        coeffs[space.side_dof(s)] = g[0] * side.normal.x + g[1] * side.normal.y;
    }
    coeffs
}

/// Modified interpolation for fields with merely integrable Hessians: vertex
/// second-derivative dofs take the mean of the Hessian over the vertex patch
/// (all triangles meeting the vertex); everything else is canonical.
/// Reproduces quadratics exactly, since a constant Hessian equals its patch
/// average.
pub fn interpolate_modified(space: &ArgyrisSpace<'_>, v: &dyn SmoothField) -> Result<Vec<f64>> {
    let mesh = space.mesh;
    let mut coeffs = interpolate_canonical(space, v);
    let rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE)?;
    let mut patch_area = vec![0.0; mesh.n_vertices()];
    let mut patch_sum = vec![[0.0; 3]; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let points = rule.map_to(&mesh.triangle_points(t));
        let mut integral = [0.0; 3];
        for (q, &x) in points.iter().enumerate() {
            let h = v.hessian(x);
            let w = area * rule.weights[q];
            for c in 0..3 {
                integral[c] += w * h[c];
            }
        }
        for &z in &mesh.triangles[t] {
            patch_area[z] += area;
            for c in 0..3 {
                patch_sum[z][c] += integral[c];
            }
        }
    }
    for z in 0..mesh.n_vertices() {
        for c in 0..3 {
            coeffs[space.vertex_dof(z, 3 + c)] = patch_sum[z][c] / patch_area[z];
        }
    }
    Ok(coeffs)
}

/// Assemble the plate system: matrix entries
/// `sigma (lap phi_i, lap phi_j) + (1 - sigma) (D^2 phi_i : D^2 phi_j)`,
/// load `(f, phi_i)`, and the constraint set of the boundary mode (empty for
/// the penalty modes, whose terms are folded into the matrix).
pub fn assemble_system(
    space: &ArgyrisSpace<'_>,
    sigma: f64,
    f: &dyn Fn(Point2) -> f64,
    bc: BcMode,
) -> Result<(SymSparseMatrix, Vec<f64>, LinearConstraintSet)> {
    check_sigma(sigma)?;
    bc.validate()?;
    let mesh = space.mesh;
    let rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE)?;
    let mut triplets = TripletList::new(space.n_dofs());
    let mut load = vec![0.0; space.n_dofs()];

    for t in 0..mesh.n_triangles() {
        let basis = element_basis(mesh, t)?;
        let dofs = space.element_dofs(t);
        let area = mesh.triangle_area(t);
        let points = rule.map_to(&mesh.triangle_points(t));
        let mut k = DMatrix::zeros(ELEMENT_DOFS, ELEMENT_DOFS);
        let mut fe = [0.0; ELEMENT_DOFS];
        for (q, &x) in points.iter().enumerate() {
            let w = area * rule.weights[q];
            let e = basis.shapes.eval(x);
            let fw = w * f(x);
            for a in 0..ELEMENT_DOFS {
                fe[a] += fw * e.values[a];
                let ha = e.hessians[a];
                let lap_a = ha[0] + ha[2];
                for b in a..ELEMENT_DOFS {
                    let hb = e.hessians[b];
                    let lap_b = hb[0] + hb[2];
                    let frob = ha[0] * hb[0] + 2.0 * ha[1] * hb[1] + ha[2] * hb[2];
                    k[(a, b)] += w * (sigma * lap_a * lap_b + (1.0 - sigma) * frob);
                }
            }
        }
        for a in 1..ELEMENT_DOFS {
            for b in 0..a {
                k[(a, b)] = k[(b, a)];
            }
        }
        triplets.add_dense_block(&dofs, &k);
        for a in 0..ELEMENT_DOFS {
            load[dofs[a]] += fe[a];
        }
    }

    match bc {
        BcMode::Penalty(eps) => add_trace_penalty(space, eps, &mut triplets)?,
        BcMode::PenaltyVertexQuadrature(eps) => add_vertex_penalty(space, eps, &mut triplets),
        BcMode::Full | BcMode::NodalReduced => {}
    }

    let matrix = SymSparseMatrix::assemble(&triplets)?;
    let constraints = match bc {
        BcMode::Full => full_support_constraints(space)?,
        BcMode::NodalReduced => nodal_constraints(space)?,
        BcMode::Penalty(_) | BcMode::PenaltyVertexQuadrature(_) => {
            LinearConstraintSet::none(space.n_dofs())
        }
    };
    Ok((matrix, load, constraints))
}

/// `1/eps` times the boundary mass matrix of quintic traces, integrated with
/// the default edge rule (exact: traces multiply to degree 10).
fn add_trace_penalty(space: &ArgyrisSpace<'_>, eps: f64, triplets: &mut TripletList) -> Result<()> {
    let mesh = space.mesh;
    let rule = edge_quadrature(DEFAULT_EDGE_DEGREE)?;
    for side in mesh.sides.iter().filter(|s| s.is_boundary()) {
        let t = side.triangle_lo;
        let basis = element_basis(mesh, t)?;
        let dofs = space.element_dofs(t);
        let [a_pt, b_pt] = [
            mesh.vertices[side.vertices[0]],
            mesh.vertices[side.vertices[1]],
        ];
        let points = rule.map_to(a_pt, b_pt);
        let mut k = DMatrix::zeros(ELEMENT_DOFS, ELEMENT_DOFS);
        for (q, &x) in points.iter().enumerate() {
            let w = side.length * rule.weights[q] / eps;
            let e = basis.shapes.eval(x);
            for a in 0..ELEMENT_DOFS {
                for b in a..ELEMENT_DOFS {
                    k[(a, b)] += w * e.values[a] * e.values[b];
                }
            }
        }
        for a in 1..ELEMENT_DOFS {
            for b in 0..a {
                k[(a, b)] = k[(b, a)];
            }
        }
        triplets.add_dense_block(&dofs, &k);
    }
    Ok(())
}

/// Trapezoid-rule version of the trace penalty: per boundary side
/// `(h_S / 2)(v(z1)^2 + v(z2)^2) / eps`, a diagonal term at value dofs.
fn add_vertex_penalty(space: &ArgyrisSpace<'_>, eps: f64, triplets: &mut TripletList) {
    for side in space.mesh.sides.iter().filter(|s| s.is_boundary()) {
        let w = 0.5 * side.length / eps;
        for &z in &side.vertices {
            let dof = space.vertex_dof(z, 0);
            triplets.push(dof, dof, w);
        }
    }
}

/// Full simple support: one block per boundary vertex with rows `v = 0`,
/// `t . grad v = 0`, and `t'(D^2 v)t = 0` for each adjacent boundary-side
/// tangent `t`. Two distinct tangents leave exactly one free Hessian
/// direction; collinear tangents lose rank gracefully in the SVD.
fn full_support_constraints(space: &ArgyrisSpace<'_>) -> Result<LinearConstraintSet> {
    let mesh = space.mesh;
    let mut tangents: Vec<Vec<Point2>> = vec![Vec::new(); mesh.n_vertices()];
    for side in mesh.sides.iter().filter(|s| s.is_boundary()) {
        let [a, b] = side.vertices;
        let t = (mesh.vertices[b] - mesh.vertices[a]).scale(1.0 / side.length);
        tangents[a].push(t);
        tangents[b].push(t);
    }
    let mut blocks = Vec::new();
    for (z, ts) in tangents.iter().enumerate() {
        if ts.is_empty() {
            continue;
        }
        let mut rows = DMatrix::zeros(1 + 2 * ts.len(), VERTEX_DOFS);
        rows[(0, 0)] = 1.0;
        for (k, t) in ts.iter().enumerate() {
            rows[(1 + k, 1)] = t.x;
            rows[(1 + k, 2)] = t.y;
            let r = 1 + ts.len() + k;
            rows[(r, 3)] = t.x * t.x;
            rows[(r, 4)] = 2.0 * t.x * t.y;
            rows[(r, 5)] = t.y * t.y;
        }
        blocks.push(ConstraintBlock {
            dofs: (0..VERTEX_DOFS).map(|c| space.vertex_dof(z, c)).collect(),
            rows,
        });
    }
    LinearConstraintSet::new(space.n_dofs(), blocks)
}

/// Nodal relaxation: pin only the value dof at each boundary vertex.
fn nodal_constraints(space: &ArgyrisSpace<'_>) -> Result<LinearConstraintSet> {
    let mesh = space.mesh;
    let fixed = (0..mesh.n_vertices())
        .filter(|&z| mesh.boundary_vertex[z])
        .map(|z| space.vertex_dof(z, 0));
    LinearConstraintSet::fix_dofs(space.n_dofs(), fixed)
}

/// Evaluate a coefficient vector at `x`: `(value, gradient, Hessian)`.
pub fn evaluate(
    space: &ArgyrisSpace<'_>,
    coeffs: &[f64],
    x: Point2,
) -> Result<(f64, [f64; 2], [f64; 3])> {
    let (t, _) = space.mesh.locate_point(x)?;
    evaluate_in(space, coeffs, t, x)
}

/// Evaluate inside a known triangle (no point location).
pub fn evaluate_in(
    space: &ArgyrisSpace<'_>,
    coeffs: &[f64],
    t: usize,
    x: Point2,
) -> Result<(f64, [f64; 2], [f64; 3])> {
    let basis = element_basis(space.mesh, t)?;
    let dofs = space.element_dofs(t);
    let e = basis.shapes.eval(x);
    let mut value = 0.0;
    let mut gradient = [0.0; 2];
    let mut hessian = [0.0; 3];
    for a in 0..ELEMENT_DOFS {
        let c = coeffs[dofs[a]];
        value += c * e.values[a];
        gradient[0] += c * e.gradients[a][0];
        gradient[1] += c * e.gradients[a][1];
        for k in 0..3 {
            hessian[k] += c * e.hessians[a][k];
        }
    }
    Ok((value, gradient, hessian))
}

/// Second-order integrals of a discrete function, all by the default volume
/// rule (exact here: the integrands have degree 6).
#[derive(Clone, Copy, Debug)]
pub struct EnergyBreakdown {
    /// `integral (lap v)^2`
    pub laplacian_sq: f64,
    /// `integral |D^2 v|^2` (Frobenius)
    pub hessian_sq: f64,
    /// `integral det D^2 v`
    pub det_integral: f64,
}

impl EnergyBreakdown {
    /// The plate energy quadratic form at Poisson ratio `sigma`.
    pub fn energy_sq(&self, sigma: f64) -> f64 {
        sigma * self.laplacian_sq + (1.0 - sigma) * self.hessian_sq
    }
}

/// Integrate the squared Laplacian, squared Hessian, and Hessian determinant
/// of the function with the given coefficients.
pub fn energy_breakdown(space: &ArgyrisSpace<'_>, coeffs: &[f64]) -> Result<EnergyBreakdown> {
    let mesh = space.mesh;
    let rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE)?;
    let mut out = EnergyBreakdown {
        laplacian_sq: 0.0,
        hessian_sq: 0.0,
        det_integral: 0.0,
    };
    for t in 0..mesh.n_triangles() {
        let basis = element_basis(mesh, t)?;
        let dofs = space.element_dofs(t);
        let area = mesh.triangle_area(t);
        let points = rule.map_to(&mesh.triangle_points(t));
        for (q, &x) in points.iter().enumerate() {
            let w = area * rule.weights[q];
            let e = basis.shapes.eval(x);
            let mut h = [0.0; 3];
            for a in 0..ELEMENT_DOFS {
                let c = coeffs[dofs[a]];
                for k in 0..3 {
                    h[k] += c * e.hessians[a][k];
                }
            }
            let lap = h[0] + h[2];
            out.laplacian_sq += w * lap * lap;
            out.hessian_sq += w * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
            out.det_integral += w * (h[0] * h[2] - h[1] * h[1]);
        }
    }
    Ok(out)
}

/// A solved plate problem in the Argyris space.
pub struct PlateSolution {
    /// Full coefficient vector (constraints already expanded).
    pub coeffs: Vec<f64>,
    pub report: SolverReport,
    /// Dimension of the constrained system actually solved.
    pub reduced_dim: usize,
}

/// Assemble, reduce, and solve the plate problem on `mesh`.
pub fn solve_plate(
    mesh: &Triangulation,
    sigma: f64,
    f: &dyn Fn(Point2) -> f64,
    bc: BcMode,
) -> Result<PlateSolution> {
    let space = ArgyrisSpace::new(mesh);
    let (a, b, constraints) = assemble_system(&space, sigma, f, bc)?;
    let (ar, br, expansion) = reduce(&a, &b, &constraints)?;
    let (x, report) = solve(&ar, &br)?;
    Ok(PlateSolution {
        coeffs: expansion.expand(&x),
        report,
        reduced_dim: expansion.reduced_dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactDiskSolution;
    use crate::mesh::build_disk_mesh;
    use crate::splitting::P1Space;
    use crate::AnalyticField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trig_field() -> impl SmoothField {
        AnalyticField {
            value: |p: Point2| (1.3 * p.x).sin() * (0.9 * p.y).cos(),
            gradient: |p: Point2| {
                [
                    1.3 * (1.3 * p.x).cos() * (0.9 * p.y).cos(),
                    -0.9 * (1.3 * p.x).sin() * (0.9 * p.y).sin(),
                ]
            },
            hessian: |p: Point2| {
                [
                    -1.69 * (1.3 * p.x).sin() * (0.9 * p.y).cos(),
                    -1.17 * (1.3 * p.x).cos() * (0.9 * p.y).sin(),
                    -0.81 * (1.3 * p.x).sin() * (0.9 * p.y).cos(),
                ]
            },
        }
    }

    /// Random points that lie inside every mesh level (radius <= 0.65).
    fn interior_points(n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r = 0.65 * rng.gen_range(0.0f64..1.0).sqrt();
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                Point2::new(r * th.cos(), r * th.sin())
            })
            .collect()
    }

    /// Apply the 21 node functionals of triangle `t` to a shape set.
    fn duality_matrix(mesh: &Triangulation, t: usize, basis: &ArgyrisElementBasis) -> DMatrix<f64> {
        let tri = mesh.triangles[t];
        let sides = mesh.triangle_sides(t);
        let mut d = DMatrix::zeros(ELEMENT_DOFS, ELEMENT_DOFS);
        for i in 0..3 {
            let e = basis.shapes.eval(mesh.vertices[tri[i]]);
            for b in 0..ELEMENT_DOFS {
                d[(VERTEX_DOFS * i, b)] = e.values[b];
                d[(VERTEX_DOFS * i + 1, b)] = e.gradients[b][0];
                d[(VERTEX_DOFS * i + 2, b)] = e.gradients[b][1];
                d[(VERTEX_DOFS * i + 3, b)] = e.hessians[b][0];
                d[(VERTEX_DOFS * i + 4, b)] = e.hessians[b][1];
                d[(VERTEX_DOFS * i + 5, b)] = e.hessians[b][2];
            }
        }
        for j in 0..3 {
            let side = &mesh.sides[sides[j]];
            let e = basis.shapes.eval(side.midpoint(mesh));
            for b in 0..ELEMENT_DOFS {
                d[(3 * VERTEX_DOFS + j, b)] =
                    e.gradients[b][0] * side.normal.x + e.gradients[b][1] * side.normal.y;
            }
        }
        d
    }

    #[test]
    fn element_duality_holds_on_every_triangle() {
        let mesh = build_disk_mesh(3).unwrap();
        for t in 0..mesh.n_triangles() {
            let basis = element_basis(&mesh, t).unwrap();
            assert!(basis.condition < VANDERMONDE_CONDITION_LIMIT);
            let d = duality_matrix(&mesh, t, &basis);
            for f in 0..ELEMENT_DOFS {
                for b in 0..ELEMENT_DOFS {
                    let expect = if f == b { 1.0 } else { 0.0 };
                    assert!(
                        (d[(f, b)] - expect).abs() <= 1e-9,
                        "triangle {t}: functional {f} on shape {b} = {}",
                        d[(f, b)]
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_interpolation_reproduces_quintics() {
        let mesh = build_disk_mesh(1).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let quintic = AnalyticField {
            value: |p: Point2| p.x.powi(5),
            gradient: |p: Point2| [5.0 * p.x.powi(4), 0.0],
            hessian: |p: Point2| [20.0 * p.x.powi(3), 0.0, 0.0],
        };
        let coeffs = interpolate_canonical(&space, &quintic);
        for x in interior_points(40, 7) {
            let (v, _, _) = evaluate(&space, &coeffs, x).unwrap();
            assert!(
                (v - quintic.value(x)).abs() <= 1e-9,
                "x1^5 at {x:?}: interpolant {v}"
            );
        }

        let constant = AnalyticField {
            value: |_| 3.5,
            gradient: |_| [0.0, 0.0],
            hessian: |_| [0.0, 0.0, 0.0],
        };
        let coeffs = interpolate_canonical(&space, &constant);
        for x in interior_points(10, 11) {
            let (v, _, _) = evaluate(&space, &coeffs, x).unwrap();
            assert!((v - 3.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn canonical_interpolation_of_a_bilinear_field() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let bilinear = AnalyticField {
            value: |p: Point2| p.x * p.y,
            gradient: |p: Point2| [p.y, p.x],
            hessian: |_| [0.0, 1.0, 0.0],
        };
        let coeffs = interpolate_canonical(&space, &bilinear);
        for x in interior_points(50, 13) {
            let (v, g, h) = evaluate(&space, &coeffs, x).unwrap();
            assert!((v - x.x * x.y).abs() <= 1e-10);
            assert!((g[0] - x.y).abs() <= 1e-9 && (g[1] - x.x).abs() <= 1e-9);
            assert!((h[1] - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn interpolants_of_the_exact_solution_vanish_at_boundary_vertices() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let u = ExactDiskSolution::new(0.0).unwrap().field();
        let canonical = interpolate_canonical(&space, &u);
        let modified = interpolate_modified(&space, &u).unwrap();
        for z in 0..mesh.n_vertices() {
            if mesh.boundary_vertex[z] {
                assert!(canonical[space.vertex_dof(z, 0)].abs() <= 1e-12);
                assert!(modified[space.vertex_dof(z, 0)].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn modified_interpolation_reproduces_quadratics() {
        let mesh = build_disk_mesh(1).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let quadratic = AnalyticField {
            value: |p: Point2| p.x * p.x + p.y,
            gradient: |p: Point2| [2.0 * p.x, 1.0],
            hessian: |_| [2.0, 0.0, 0.0],
        };
        let coeffs = interpolate_modified(&space, &quadratic).unwrap();
        for x in interior_points(50, 17) {
            let (v, _, _) = evaluate(&space, &coeffs, x).unwrap();
            assert!((v - quadratic.value(x)).abs() <= 1e-10);
        }
    }

    #[test]
    fn modified_and_canonical_interpolants_converge_together() {
        let field = trig_field();
        let mut gaps = Vec::new();
        for level in 1..=3 {
            let mesh = build_disk_mesh(level).unwrap();
            let space = ArgyrisSpace::new(&mesh);
            let canonical = interpolate_canonical(&space, &field);
            let modified = interpolate_modified(&space, &field).unwrap();
            let diff: Vec<f64> = canonical
                .iter()
                .zip(&modified)
                .map(|(a, b)| a - b)
                .collect();
            gaps.push(energy_breakdown(&space, &diff).unwrap().hessian_sq.sqrt());
        }
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "energy gap not decreasing: {gaps:?}"
        );
        assert!(gaps[2] < 0.25 * gaps[0]);
    }

    #[test]
    fn interpolation_converges_at_quintic_energy_rate() {
        // Needs a non-polynomial target: quartics and quintics interpolate
        // exactly, which leaves nothing to measure.
        let field = trig_field();
        let rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE).unwrap();
        let mut errors = Vec::new();
        for level in 1..=3 {
            let mesh = build_disk_mesh(level).unwrap();
            let space = ArgyrisSpace::new(&mesh);
            let coeffs = interpolate_canonical(&space, &field);
            let mut err_sq = 0.0;
            for t in 0..mesh.n_triangles() {
                let basis = element_basis(&mesh, t).unwrap();
                let dofs = space.element_dofs(t);
                let area = mesh.triangle_area(t);
                for (q, &x) in rule.map_to(&mesh.triangle_points(t)).iter().enumerate() {
                    let e = basis.shapes.eval(x);
                    let mut h = field.hessian(x).map(|v| -v);
                    for a in 0..ELEMENT_DOFS {
                        for k in 0..3 {
                            h[k] += coeffs[dofs[a]] * e.hessians[a][k];
                        }
                    }
                    err_sq += area
                        * rule.weights[q]
                        * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
                }
            }
            errors.push(err_sq.sqrt());
        }
        for pair in errors.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!(rate >= 3.0, "energy rate {rate} below 3; errors {errors:?}");
        }
    }

    #[test]
    fn value_and_gradient_are_continuous_across_interior_sides() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let coeffs: Vec<f64> = (0..space.n_dofs())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let magnitude = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for side in mesh.sides.iter().filter(|s| !s.is_boundary()) {
            let hi = side.triangle_hi.unwrap();
            let [a, b] = [
                mesh.vertices[side.vertices[0]],
                mesh.vertices[side.vertices[1]],
            ];
            for k in 1..=5 {
                let x = a + (b - a) * (k as f64 / 6.0);
                let (v_lo, g_lo, _) = evaluate_in(&space, &coeffs, side.triangle_lo, x).unwrap();
                let (v_hi, g_hi, _) = evaluate_in(&space, &coeffs, hi, x).unwrap();
                assert!((v_lo - v_hi).abs() <= 1e-8 * magnitude);
                assert!((g_lo[0] - g_hi[0]).abs() <= 1e-8 * magnitude);
                assert!((g_lo[1] - g_hi[1]).abs() <= 1e-8 * magnitude);
            }
        }
    }

    #[test]
    fn full_support_eliminates_five_dofs_per_boundary_vertex() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let constraints = full_support_constraints(&space).unwrap();
        let n_boundary = mesh.boundary_vertex.iter().filter(|&&b| b).count();
        for b in 0..n_boundary {
            assert_eq!(constraints.block_null_dim(b), 1);
        }
        assert_eq!(
            constraints.reduced_dim(),
            space.n_dofs() - 5 * n_boundary
        );
    }

    #[test]
    fn assembled_matrices_are_symmetric() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        for bc in [BcMode::NodalReduced, BcMode::Penalty(1e-3)] {
            let (a, _, _) = assemble_system(&space, 0.3, &|_| 1.0, bc).unwrap();
            let mut scale = 0.0f64;
            for i in 0..a.dim() {
                scale = scale.max(a.get(i, i).abs());
            }
            for i in 0..a.dim() {
                for (j, v) in a.row(i) {
                    assert!(
                        (v - a.get(j, i)).abs() <= 1e-12 * scale,
                        "asymmetry at ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn full_space_members_satisfy_the_energy_identity() {
        // With vanishing traces and corner gradients the Hessian-determinant
        // integral is exactly zero, so the Frobenius and Laplacian energies
        // coincide on the constrained space.
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let constraints = full_support_constraints(&space).unwrap();
        let a = SymSparseMatrix::assemble(&TripletList::new(space.n_dofs())).unwrap();
        let zero = vec![0.0; space.n_dofs()];
        let (_, _, expansion) = reduce(&a, &zero, &constraints).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let reduced: Vec<f64> = (0..expansion.reduced_dim())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let member = expansion.expand(&reduced);
            let breakdown = energy_breakdown(&space, &member).unwrap();
            let gap = (breakdown.hessian_sq - breakdown.laplacian_sq).abs();
            assert!(
                gap <= 1e-9 * breakdown.hessian_sq,
                "identity gap {gap} vs energy {}",
                breakdown.hessian_sq
            );
            assert!(breakdown.det_integral.abs() <= 1e-9 * breakdown.hessian_sq);
        }
    }

    #[test]
    fn full_solve_has_vanishing_det_integral() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let sol = solve_plate(&mesh, 0.0, &|_| 1.0, BcMode::Full).unwrap();
        let breakdown = energy_breakdown(&space, &sol.coeffs).unwrap();
        assert!(breakdown.det_integral.abs() <= 1e-9 * breakdown.hessian_sq);
    }

    #[test]
    fn p1_gradient_bound_for_nodal_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for level in 2..=4 {
            let mesh = build_disk_mesh(level).unwrap();
            let space = ArgyrisSpace::new(&mesh);
            let p1 = P1Space::new(&mesh);
            let p1_stiffness = p1.stiffness().unwrap();
            let h = mesh.h_max();
            for _ in 0..20 {
                let mut coeffs: Vec<f64> = (0..space.n_dofs())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                for z in 0..mesh.n_vertices() {
                    if mesh.boundary_vertex[z] {
                        coeffs[space.vertex_dof(z, 0)] = 0.0;
                    }
                }
                let vertex_values: Vec<f64> = (0..mesh.n_vertices())
                    .map(|z| coeffs[space.vertex_dof(z, 0)])
                    .collect();
                let lhs = p1_stiffness.quadratic_form(&vertex_values).sqrt();
                let breakdown = energy_breakdown(&space, &coeffs).unwrap();
                let rhs = breakdown.laplacian_sq.sqrt() + h * breakdown.hessian_sq.sqrt();
                assert!(
                    lhs <= 10.0 * rhs,
                    "level {level}: |grad I_p1 v| = {lhs} vs bound {rhs}"
                );
            }
        }
    }

    #[test]
    fn discrete_solution_minimizes_the_energy() {
        let mesh = build_disk_mesh(2).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        let (a, b, constraints) = assemble_system(&space, 0.0, &|_| 1.0, BcMode::NodalReduced).unwrap();
        let (ar, br, _expansion) = reduce(&a, &b, &constraints).unwrap();
        let (x, _) = solve(&ar, &br).unwrap();
        let energy = |y: &[f64]| 0.5 * ar.quadratic_form(y) - br.iter().zip(y).map(|(b, y)| b * y).sum::<f64>();
        let e0 = energy(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..20 {
            let perturbed: Vec<f64> = x
                .iter()
                .map(|v| v + 0.1 * scale * rng.gen_range(-1.0..1.0))
                .collect();
            assert!(energy(&perturbed) >= e0 - 1e-12 * e0.abs());
        }
    }

    #[test]
    fn penalty_modes_produce_solvable_systems() {
        let mesh = build_disk_mesh(2).unwrap();
        let h3 = mesh.h_max().powi(3);
        for bc in [
            BcMode::Penalty(h3),
            BcMode::PenaltyVertexQuadrature(1e-3),
        ] {
            let sol = solve_plate(&mesh, 0.0, &|_| 1.0, bc).unwrap();
            let u0 = sol.coeffs[0];
            assert!(u0.is_finite() && u0 > 0.0, "{bc:?}: u_h(0) = {u0}");
        }
    }

    #[test]
    fn nodal_solution_approaches_the_disk_value() {
        let mesh = build_disk_mesh(3).unwrap();
        let sol = solve_plate(&mesh, 0.0, &|_| 1.0, BcMode::NodalReduced).unwrap();
        let exact = 5.0 / 64.0;
        let u0 = sol.coeffs[0];
        assert!(
            (u0 - exact).abs() <= 0.10 * exact,
            "u_h(0) = {u0}, disk value {exact}"
        );
    }

    #[test]
    fn full_solution_sits_below_the_nodal_one() {
        let mesh = build_disk_mesh(2).unwrap();
        let nodal = solve_plate(&mesh, 0.0, &|_| 1.0, BcMode::NodalReduced).unwrap();
        let full = solve_plate(&mesh, 0.0, &|_| 1.0, BcMode::Full).unwrap();
        assert!(full.coeffs[0] < nodal.coeffs[0]);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mesh = build_disk_mesh(1).unwrap();
        let space = ArgyrisSpace::new(&mesh);
        assert!(assemble_system(&space, 1.0, &|_| 1.0, BcMode::Full).is_err());
        assert!(assemble_system(&space, -0.1, &|_| 1.0, BcMode::Full).is_err());
        assert!(assemble_system(&space, 0.3, &|_| 1.0, BcMode::Penalty(0.0)).is_err());
        assert!(
            assemble_system(&space, 0.3, &|_| 1.0, BcMode::PenaltyVertexQuadrature(-1.0)).is_err()
        );
    }
}
