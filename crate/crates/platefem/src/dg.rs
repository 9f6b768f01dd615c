//! Interior-penalty discontinuous Galerkin discretization of the plate
//! problem at `sigma = 0`: elementwise polynomials of degree `l >= 2` with
//! no interelement continuity, a consistently symmetrized Hessian form
//! `a_h`, and jump stabilization `s_h`.
//!
//! All differential operators act elementwise. For a side `S` with normal
//! `n_S` (pointing from the lower-indexed triangle into the higher, outward
//! on the boundary) the jump is the difference downstream minus upstream of
//! the normal, `[x](p) = lim_{ε→0} x(p + ε n_S) − x(p − ε n_S)`, and the
//! average is `<x> = (x_hi + x_lo)/2`; on boundary sides jump and average
//! both reduce to the trace. With that convention,
//!
//! ```text
//! a_h(v,w) = (D²v, D²w)
//!          + (<∂_n ∇v>, [∇w]) + (<∂_n ∇w>, [∇v])   over interior sides
//!          − (<∂_n Δv>, [w]) − (<∂_n Δw>, [v])      over all sides
//! s_h(v,w) = γ₀ (h_S⁻³ [v], [w])                     over all sides
//!          + γ₁ (h_S⁻¹ [∇v], [∇w])                   over interior sides
//! ```
//!
//! Excluding boundary sides from every `[∇·]` term is what lets simple
//! support — not clamping — emerge in the limit: the scheme never penalizes
//! the boundary rotation. The discrete solution minimizes
//! `½ a_h(v,v) + ½ s_h(v,v) − (f,v)` with no strong constraints; the
//! boundary condition enters only through the `h⁻³` value penalty and the
//! boundary `[v]`-terms of `a_h`.

use crate::geo::Point2;
use crate::mesh::{Side, Triangulation};
use crate::poly::{monomial_dim, MonomialBasis, PolyBasis};
use crate::quadrature::{
    edge_quadrature, triangle_quadrature, EdgeQuadRule, DEFAULT_EDGE_DEGREE, DEFAULT_VOLUME_DEGREE,
};
use crate::sparse::{solve, SolverReport, SymSparseMatrix, TripletList};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Default penalty factor for both the value and the gradient jumps.
pub const DEFAULT_GAMMA: f64 = 10.0;
/// Default polynomial degree.
pub const DEFAULT_DEGREE: u32 = 2;

/// Penalty factors and polynomial degree of the scheme.
#[derive(Clone, Copy, Debug)]
pub struct DgParams {
    /// Factor of the `h⁻³` value-jump penalty (all sides).
    pub gamma0: f64,
    /// Factor of the `h⁻¹` gradient-jump penalty (interior sides).
    pub gamma1: f64,
    /// Elementwise polynomial degree, at least 2.
    pub degree: u32,
}

impl Default for DgParams {
    fn default() -> Self {
        DgParams {
            gamma0: DEFAULT_GAMMA,
            gamma1: DEFAULT_GAMMA,
            degree: DEFAULT_DEGREE,
        }
    }
}

impl DgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) || !(self.gamma1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "penalty factors must be positive, got gamma0 = {}, gamma1 = {}",
                self.gamma0, self.gamma1
            )));
        }
        if self.degree < 2 {
            return Err(Error::InvalidArgument(format!(
                "the scheme needs elementwise quadratics, got degree {}",
                self.degree
            )));
        }
        Ok(())
    }
}

/// The fully discontinuous space: per triangle a Lagrange basis of degree
/// `l` on the principal lattice (vertices and side midpoints for `l = 2`),
/// `(l+1)(l+2)/2` dofs per element, no continuity across sides.
pub struct DgSpace<'m> {
    pub mesh: &'m Triangulation,
    degree: u32,
    block: usize,
    bases: Vec<PolyBasis>,
    laplacians: Vec<PolyBasis>,
}

impl<'m> DgSpace<'m> {
    pub fn new(mesh: &'m Triangulation, degree: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidArgument(format!(
                "the scheme needs elementwise quadratics, got degree {degree}"
            )));
        }
        let block = monomial_dim(degree);
        let mut bases = Vec::with_capacity(mesh.n_triangles());
        let mut laplacians = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let basis = element_basis(mesh, t, degree)?;
            laplacians.push(basis.local_laplacian());
            bases.push(basis);
        }
        Ok(DgSpace {
            mesh,
            degree,
            block,
            bases,
            laplacians,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Dofs per element.
    pub fn block(&self) -> usize {
        self.block
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_triangles() * self.block
    }

    /// The contiguous global dof range of triangle `t`.
    pub fn element_dofs(&self, t: usize) -> std::ops::Range<usize> {
        t * self.block..(t + 1) * self.block
    }

    /// The Lagrange basis of triangle `t`.
    pub fn basis(&self, t: usize) -> &PolyBasis {
        &self.bases[t]
    }
}

/// Principal-lattice interpolation nodes of triangle `t`, in the fixed
/// multi-index order used by [`element_basis`].
fn lattice_nodes(mesh: &Triangulation, t: usize, degree: u32) -> Vec<Point2> {
    let p = mesh.triangle_points(t);
    let inv = 1.0 / degree as f64;
    let mut nodes = Vec::with_capacity(monomial_dim(degree));
    for i in (0..=degree).rev() {
        for j in (0..=degree - i).rev() {
            let k = degree - i - j;
            nodes
                .push((p[0] * i as f64 + p[1] * j as f64 + p[2] * k as f64).scale(inv));
        }
    }
    nodes
}

/// The Lagrange basis of degree `degree` on triangle `t`, dual to point
/// evaluation at the principal lattice nodes.
fn element_basis(mesh: &Triangulation, t: usize, degree: u32) -> Result<PolyBasis> {
    let center = mesh.centroid(t);
    let h = mesh.triangle_diameter(t);
    let nodes = lattice_nodes(mesh, t, degree);
    let mono = MonomialBasis::new(degree);
    let dim = mono.dim();
    let mut vander = DMatrix::zeros(dim, dim);
    let mut row = vec![0.0; dim];
    for (r, &node) in nodes.iter().enumerate() {
        let local = (node - center).scale(1.0 / h);
        mono.values(local, &mut row);
        for c in 0..dim {
            vander[(r, c)] = row[c];
        }
    }
    let coeffs = vander
        .lu()
        .solve(&DMatrix::identity(dim, dim))
        .ok_or_else(|| Error::BadElement {
            triangle: t,
            detail: "singular Lagrange node system".into(),
        })?;
    Ok(PolyBasis::new(degree, coeffs, center, h))
}

/// Elementwise Lagrange interpolation of a continuous function: exact point
/// values at the lattice nodes (vertices and side midpoints for the default
/// quadratic degree). Shared nodes receive identical values, so the output
/// is globally continuous whenever `v` is.
pub fn interpolate_p2(space: &DgSpace<'_>, v: &dyn Fn(Point2) -> f64) -> Vec<f64> {
    let mut coeffs = vec![0.0; space.n_dofs()];
    for t in 0..space.mesh.n_triangles() {
        let nodes = lattice_nodes(space.mesh, t, space.degree);
        let dofs = space.element_dofs(t);
        for (local, &node) in nodes.iter().enumerate() {
            coeffs[dofs.start + local] = v(node);
        }
    }
    coeffs
}

/// Traces of every dof of the (one or two) triangles meeting a side,
/// tabulated at the side quadrature points.
struct SideTraces {
    /// Global dofs, lower triangle first.
    dofs: Vec<usize>,
    /// `w_q = h_S * rule.weights[q]`.
    weights: Vec<f64>,
    /// `[v]` per point per dof.
    jump_value: Vec<Vec<f64>>,
    /// `[∇v]` per point per dof.
    jump_gradient: Vec<Vec<[f64; 2]>>,
    /// `<∂_n ∇v> = <D²v · n>` per point per dof.
    avg_normal_gradient: Vec<Vec<[f64; 2]>>,
    /// `<∂_n Δv>` per point per dof.
    avg_normal_laplacian: Vec<Vec<f64>>,
}

fn side_traces(space: &DgSpace<'_>, side: &Side, rule: &EdgeQuadRule) -> SideTraces {
    let mesh = space.mesh;
    let a = mesh.vertices[side.vertices[0]];
    let b = mesh.vertices[side.vertices[1]];
    let points = rule.map_to(a, b);
    let n = side.normal;
    let members: Vec<(usize, f64)> = match side.triangle_hi {
        // The normal points lo → hi, so the jump (downstream minus
        // upstream of the normal) is hi − lo.
        Some(hi) => vec![(side.triangle_lo, -1.0), (hi, 1.0)],
        // Boundary: jump = average = trace.
        None => vec![(side.triangle_lo, 1.0)],
    };
    let avg = 1.0 / members.len() as f64;
    let n_dofs = space.block * members.len();
    let mut dofs = Vec::with_capacity(n_dofs);
    for &(t, _) in &members {
        dofs.extend(space.element_dofs(t));
    }
    let mut traces = SideTraces {
        dofs,
        weights: rule.weights.iter().map(|w| w * side.length).collect(),
        jump_value: vec![vec![0.0; n_dofs]; points.len()],
        jump_gradient: vec![vec![[0.0; 2]; n_dofs]; points.len()],
        avg_normal_gradient: vec![vec![[0.0; 2]; n_dofs]; points.len()],
        avg_normal_laplacian: vec![vec![0.0; n_dofs]; points.len()],
    };
    for (m, &(t, jump_sign)) in members.iter().enumerate() {
        let basis = &space.bases[t];
        let lap = &space.laplacians[t];
        let inv_h2 = 1.0 / (basis.scale() * basis.scale());
        for (q, &x) in points.iter().enumerate() {
            let e = basis.eval(x);
            let le = lap.eval(x);
            for local in 0..space.block {
                let dof = m * space.block + local;
                traces.jump_value[q][dof] = jump_sign * e.values[local];
                traces.jump_gradient[q][dof] = [
                    jump_sign * e.gradients[local][0],
                    jump_sign * e.gradients[local][1],
                ];
                let h = e.hessians[local];
                traces.avg_normal_gradient[q][dof] = [
                    avg * (h[0] * n.x + h[1] * n.y),
                    avg * (h[1] * n.x + h[2] * n.y),
                ];
                traces.avg_normal_laplacian[q][dof] =
                    avg * inv_h2 * (le.gradients[local][0] * n.x + le.gradients[local][1] * n.y);
            }
        }
    }
    traces
}

/// Assemble the symmetrized Hessian form `a_h` (see the module docs for the
/// exact term and side bookkeeping).
pub fn assemble_ah(space: &DgSpace<'_>) -> Result<SymSparseMatrix> {
    let mesh = space.mesh;
    let mut triplets = TripletList::new(space.n_dofs());

    // Volume term (D²v, D²w): integrands of degree 2(l − 2).
    let volume_rule = triangle_quadrature((2 * space.degree.saturating_sub(2)).max(1))?;
    let mut local = DMatrix::zeros(space.block, space.block);
    for t in 0..mesh.n_triangles() {
        let basis = &space.bases[t];
        let area = mesh.triangle_area(t);
        let points = volume_rule.map_to(&mesh.triangle_points(t));
        local.fill(0.0);
        for (q, &x) in points.iter().enumerate() {
            let w = area * volume_rule.weights[q];
            let e = basis.eval(x);
            for a in 0..space.block {
                let ha = e.hessians[a];
                for b in 0..space.block {
                    let hb = e.hessians[b];
                    local[(a, b)] += w * (ha[0] * hb[0] + 2.0 * ha[1] * hb[1] + ha[2] * hb[2]);
                }
            }
        }
        let dofs: Vec<usize> = space.element_dofs(t).collect();
        triplets.add_dense_block(&dofs, &local);
    }

    // Side terms with the fixed side normal and the default edge rule.
    let edge_rule = edge_quadrature(DEFAULT_EDGE_DEGREE)?;
    for side in &mesh.sides {
        let tr = side_traces(space, side, &edge_rule);
        let n = tr.dofs.len();
        let mut block = DMatrix::zeros(n, n);
        for q in 0..tr.weights.len() {
            let w = tr.weights[q];
            let jv = &tr.jump_value[q];
            let jg = &tr.jump_gradient[q];
            let ag = &tr.avg_normal_gradient[q];
            let al = &tr.avg_normal_laplacian[q];
            for a in 0..n {
                for b in 0..n {
                    let mut term = -(al[a] * jv[b] + al[b] * jv[a]);
                    if !side.is_boundary() {
                        term += (ag[a][0] * jg[b][0] + ag[a][1] * jg[b][1])
                            + (ag[b][0] * jg[a][0] + ag[b][1] * jg[a][1]);
                    }
                    block[(a, b)] += w * term;
                }
            }
        }
        triplets.add_dense_block(&tr.dofs, &block);
    }
    SymSparseMatrix::assemble(&triplets)
}

/// Assemble the stabilization `s_h`: `γ₀ h⁻³` value jumps on all sides,
/// `γ₁ h⁻¹` gradient jumps on interior sides only.
pub fn assemble_sh(space: &DgSpace<'_>, params: &DgParams) -> Result<SymSparseMatrix> {
    params.validate()?;
    if params.degree != space.degree {
        return Err(Error::InvalidArgument(format!(
            "params are for degree {}, space has degree {}",
            params.degree, space.degree
        )));
    }
    let edge_rule = edge_quadrature(DEFAULT_EDGE_DEGREE)?;
    let mut triplets = TripletList::new(space.n_dofs());
    for side in &space.mesh.sides {
        let tr = side_traces(space, side, &edge_rule);
        let n = tr.dofs.len();
        let value_factor = params.gamma0 / (side.length * side.length * side.length);
        let gradient_factor = params.gamma1 / side.length;
        let mut block = DMatrix::zeros(n, n);
        for q in 0..tr.weights.len() {
            let w = tr.weights[q];
            let jv = &tr.jump_value[q];
            let jg = &tr.jump_gradient[q];
            for a in 0..n {
                for b in 0..n {
                    let mut term = value_factor * jv[a] * jv[b];
                    if !side.is_boundary() {
                        term += gradient_factor * (jg[a][0] * jg[b][0] + jg[a][1] * jg[b][1]);
                    }
                    block[(a, b)] += w * term;
                }
            }
        }
        triplets.add_dense_block(&tr.dofs, &block);
    }
    SymSparseMatrix::assemble(&triplets)
}

/// `‖D²_h v‖²`: the elementwise Hessian seminorm squared.
pub fn hessian_seminorm_sq(space: &DgSpace<'_>, coeffs: &[f64]) -> Result<f64> {
    let mesh = space.mesh;
    let rule = triangle_quadrature((2 * space.degree.saturating_sub(2)).max(1))?;
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let basis = &space.bases[t];
        let area = mesh.triangle_area(t);
        let points = rule.map_to(&mesh.triangle_points(t));
        let dofs = space.element_dofs(t);
        for (q, &x) in points.iter().enumerate() {
            let e = basis.eval(x);
            let mut h = [0.0_f64; 3];
            for local in 0..space.block {
                let c = coeffs[dofs.start + local];
                h[0] += c * e.hessians[local][0];
                h[1] += c * e.hessians[local][1];
                h[2] += c * e.hessians[local][2];
            }
            total += area * rule.weights[q] * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
        }
    }
    Ok(total)
}

/// `s_h(v, v)` evaluated directly by side quadrature.
pub fn stabilization(space: &DgSpace<'_>, params: &DgParams, coeffs: &[f64]) -> Result<f64> {
    params.validate()?;
    let edge_rule = edge_quadrature(DEFAULT_EDGE_DEGREE)?;
    let mut total = 0.0;
    for side in &space.mesh.sides {
        let tr = side_traces(space, side, &edge_rule);
        let value_factor = params.gamma0 / (side.length * side.length * side.length);
        let gradient_factor = params.gamma1 / side.length;
        for q in 0..tr.weights.len() {
            let mut jump = 0.0;
            let mut jump_grad = [0.0_f64; 2];
            for (k, &dof) in tr.dofs.iter().enumerate() {
                jump += coeffs[dof] * tr.jump_value[q][k];
                jump_grad[0] += coeffs[dof] * tr.jump_gradient[q][k][0];
                jump_grad[1] += coeffs[dof] * tr.jump_gradient[q][k][1];
            }
            let mut term = value_factor * jump * jump;
            if !side.is_boundary() {
                term +=
                    gradient_factor * (jump_grad[0] * jump_grad[0] + jump_grad[1] * jump_grad[1]);
            }
            total += tr.weights[q] * term;
        }
    }
    Ok(total)
}

/// `‖v‖_dg = (‖D²_h v‖² + s_h(v,v))^{1/2}`.
pub fn dg_norm(space: &DgSpace<'_>, params: &DgParams, coeffs: &[f64]) -> Result<f64> {
    Ok((hessian_seminorm_sq(space, coeffs)? + stabilization(space, params, coeffs)?).sqrt())
}

/// Discrete solution of the penalized plate problem.
pub struct DgSolution {
    pub coeffs: Vec<f64>,
    pub report: SolverReport,
}

/// Minimize `½ a_h(v,v) + ½ s_h(v,v) − (f,v)` over the discontinuous space:
/// solve `(a_h + s_h) u = b` with no strong constraints. The module is
/// restricted to `sigma = 0`.
pub fn solve_dg(
    space: &DgSpace<'_>,
    params: &DgParams,
    sigma: f64,
    f: &dyn Fn(Point2) -> f64,
) -> Result<DgSolution> {
    params.validate()?;
    if sigma != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "the penalized Hessian form is built for sigma = 0, got {sigma}"
        )));
    }
    let mesh = space.mesh;
    let ah = assemble_ah(space)?;
    let sh = assemble_sh(space, params)?;
    let system = matrix_sum(&ah, &sh)?;

    let load_rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE)?;
    let mut b = vec![0.0; space.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let basis = space.basis(t);
        let area = mesh.triangle_area(t);
        let points = load_rule.map_to(&mesh.triangle_points(t));
        let dofs = space.element_dofs(t);
        for (q, &x) in points.iter().enumerate() {
            let w = area * load_rule.weights[q] * f(x);
            let e = basis.eval(x);
            for local in 0..space.block {
                b[dofs.start + local] += w * e.values[local];
            }
        }
    }

    let (coeffs, report) = solve(&system, &b).map_err(|e| match e {
        Error::Solve(msg) => Error::Solve(format!(
            "{msg}; the penalized system may be indefinite — try larger gamma0/gamma1"
        )),
        other => other,
    })?;
    Ok(DgSolution { coeffs, report })
}

/// Value, gradient, and Hessian `[dxx, dxy, dyy]` of the discrete field at
/// `x`, evaluated in the triangle that contains it.
pub fn evaluate(
    space: &DgSpace<'_>,
    coeffs: &[f64],
    x: Point2,
) -> Result<(f64, [f64; 2], [f64; 3])> {
    let (t, _) = space.mesh.locate_point(x)?;
    evaluate_in(space, coeffs, t, x)
}

/// As [`evaluate`] inside the given triangle (the field is discontinuous,
/// so the triangle choice matters on sides).
pub fn evaluate_in(
    space: &DgSpace<'_>,
    coeffs: &[f64],
    t: usize,
    x: Point2,
) -> Result<(f64, [f64; 2], [f64; 3])> {
    if coeffs.len() != space.n_dofs() {
        return Err(Error::InvalidArgument(format!(
            "coefficient length {} vs {} dofs",
            coeffs.len(),
            space.n_dofs()
        )));
    }
    let e = space.bases[t].eval(x);
    let dofs = space.element_dofs(t);
    let mut value = 0.0;
    let mut gradient = [0.0_f64; 2];
    let mut hessian = [0.0_f64; 3];
    for local in 0..space.block {
        let c = coeffs[dofs.start + local];
        value += c * e.values[local];
        gradient[0] += c * e.gradients[local][0];
        gradient[1] += c * e.gradients[local][1];
        hessian[0] += c * e.hessians[local][0];
        hessian[1] += c * e.hessians[local][1];
        hessian[2] += c * e.hessians[local][2];
    }
    Ok((value, gradient, hessian))
}

/// Entrywise sum of two structurally compatible symmetric matrices.
fn matrix_sum(a: &SymSparseMatrix, b: &SymSparseMatrix) -> Result<SymSparseMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut triplets = TripletList::new(a.dim());
    for i in 0..a.dim() {
        for (j, v) in a.row(i) {
            triplets.push(i, j, v);
        }
        for (j, v) in b.row(i) {
            triplets.push(i, j, v);
        }
    }
    SymSparseMatrix::assemble(&triplets)
}
